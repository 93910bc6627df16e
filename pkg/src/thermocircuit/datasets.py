"""Fixtures shipped with the package.

``figure1``
    Three small circuits sharing two nodes, the textbook example of
    assembly.
``seven_zone_description``
    A synthetic seven-zone house built from the element library: a row
    of rooms, each with an external wall, window, ceiling, floor and
    infiltration, separated by internal walls.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .assembly import ConnectionSet
from .building import BuildingDescription, build_model, load_library, parse_building
from .circuit import ThermalCircuit
from .simulate import TimeSeries

__all__ = [
    "FIGURE1_VALUES",
    "figure1",
    "figure1_expected",
    "figure1_disassembly_matrix",
    "load_tables",
    "data_path",
    "seven_zone_description",
    "seven_zone_inputs",
    "SEVEN_ZONE_SUMMARY",
    "seven_zone_model",
]

# illustrative magnitudes; the fixture is structural, any positive values do
FIGURE1_VALUES = dict(G11=2.0, G12=3.0, G21=5.0, Gv=7.0, Gc=11.0, C11=1000.0, C=3000.0)


def data_path(name: str) -> Path:
    """Filesystem path of a shipped data file."""
    return Path(str(resources.files("thermocircuit").joinpath("data", name)))


def figure1(G11=None, G12=None, G21=None, Gv=None, Gc=None, C11=None, C=None):
    """The three elementary circuits and their connections.

    TC1 has two branches and two nodes, TC2 one branch and two nodes, TC3
    two branches and one node.  Node 2 of TC1 is common with node 1 of TC2
    and node 2 of TC2 with node 1 of TC3.  The capacity ``C`` is split
    equally between TC2 and TC3.

    Returns
    -------
    circuits : list of ThermalCircuit
    connections : ConnectionSet
    """
    v = dict(FIGURE1_VALUES)
    for key, val in dict(G11=G11, G12=G12, G21=G21, Gv=Gv, Gc=Gc, C11=C11, C=C).items():
        if val is not None:
            v[key] = float(val)
    tc1 = ThermalCircuit(
        incidence=[[1, 0], [-1, 1]],
        conductances=[v["G11"], v["G12"]],
        capacities=[v["C11"], 0.0],
        temp_source_flags=[1, 0],
        flow_source_flags=[1, 0],
        branch_labels=["q1", "q2"],
        node_labels=["θ1", "θ2"],
    )
    tc2 = ThermalCircuit(
        incidence=[[-1, 1]],
        conductances=[v["G21"]],
        capacities=[0.0, v["C"] / 2],
        temp_source_flags=[0],
        flow_source_flags=[0, 1],
        branch_labels=["q1"],
        node_labels=["θ1", "θ2"],
    )
    tc3 = ThermalCircuit(
        incidence=[[1], [1]],
        conductances=[v["Gv"], v["Gc"]],
        capacities=[v["C"] / 2],
        temp_source_flags=[1, 0],
        flow_source_flags=[1],
        branch_labels=["q1", "q2"],
        node_labels=["θ1"],
    )
    connections = ConnectionSet((((0, 1), (1, 0)), ((1, 1), (2, 0))))
    return [tc1, tc2, tc3], connections


def figure1_expected(**values):
    """Assembled arrays written out by hand from the figure."""
    v = dict(FIGURE1_VALUES, **values)
    return dict(
        incidence=np.array([[1, 0, 0], [-1, 1, 0], [0, -1, 1], [0, 0, 1], [0, 0, 1]]),
        conductances=np.array([v["G11"], v["G12"], v["G21"], v["Gv"], v["Gc"]]),
        temp_source_flags=np.array([1, 0, 0, 1, 0]),
        capacities=np.array([v["C11"], 0.0, v["C"]]),
        flow_source_flags=np.array([1, 0, 1]),
    )


def figure1_disassembly_matrix() -> np.ndarray:
    """The 10 x 8 disassembling matrix, rows [q11 q12 θ11 θ12 q21 θ21 θ22 q31 q32 θ31]."""
    rows = [0, 1, 5, 6, 2, 6, 7, 3, 4, 7]
    ad = np.zeros((10, 8), dtype=np.int64)
    ad[np.arange(10), rows] = 1
    return ad


def load_tables() -> dict:
    """Window, wall and airflow types of the shipped library."""
    return load_library("builtin:twin_house")


# --------------------------------------------------------------------------
# synthetic seven-zone house

_ZONE_WIDTH, _ZONE_DEPTH, _ZONE_HEIGHT = 4.0, 5.0, 2.7
_N_ZONES = 7
SEVEN_ZONE_SUMMARY = "7 thermal zones, 50 elementary models, 131 states"


def seven_zone_description() -> BuildingDescription:
    """Seven rooms in a row, assembled from library element types.

    Per zone: air node, external wall (type 1), window (W1), ceiling under
    an unheated attic at outdoor temperature (type 4), floor on ground
    (type 5) and infiltration (type 7).  Internal walls (type 2) separate
    neighbouring zones; zone 1 also has an external door (type 6) and the
    mechanical ventilation (type 8).

    Inputs: ``T_out``, ``T_ground`` (°C), ``E_sol`` (W/m², on the facade)
    and ``Q_heat_Z1`` ... ``Q_heat_Z7`` (W) split 70 % convective to the
    air and 30 % radiative to the external wall.
    """
    lib = load_library("builtin:twin_house")
    w1 = lib["window_types"]["W1"]
    window_area = w1["overall"][0] * w1["overall"][1]
    glass_area = w1["glass"][0] * w1["glass"][1]
    tau = 0.7
    door_area = 0.9 * 2.1
    volume = _ZONE_WIDTH * _ZONE_DEPTH * _ZONE_HEIGHT
    floor_area = _ZONE_WIDTH * _ZONE_DEPTH
    facade = _ZONE_WIDTH * _ZONE_HEIGHT

    elements, connections = {}, []
    bindings = {"T_out": [], "T_ground": [], "E_sol": []}
    outputs = {}
    for z in range(1, _N_ZONES + 1):
        zn = f"Z{z}"
        wall_area = facade - window_area - (door_area if z == 1 else 0.0)
        alpha = lib["wall_types"]["1"]["absorptance"]
        elements[f"{zn}_air"] = {"kind": "zone", "volume": volume}
        elements[f"{zn}_wall"] = {
            "kind": "wall", "type": "1", "area": round(wall_area, 6), "flow_sources": ["so", "si"],
        }
        elements[f"{zn}_window"] = {"kind": "window", "type": "W1", "u_value": 1.1, "flow_sources": []}
        elements[f"{zn}_ceiling"] = {"kind": "wall", "type": "4", "area": floor_area, "flow_sources": []}
        elements[f"{zn}_floor"] = {"kind": "wall", "type": "5", "area": floor_area, "flow_sources": []}
        elements[f"{zn}_inf"] = {"kind": "airflow", "type": "7", "volume": volume}
        for part in ("wall", "window", "ceiling", "floor", "inf"):
            connections.append([f"{zn}_air.air", f"{zn}_{part}.ia"])
        bindings["T_out"] += [f"{zn}_wall.out", f"{zn}_window.out", f"{zn}_ceiling.out", f"{zn}_inf.flow"]
        bindings["T_ground"].append(f"{zn}_floor.out")
        bindings["E_sol"] += [
            {"target": f"{zn}_wall.so", "gain": round(alpha * wall_area, 9)},
            {"target": f"{zn}_air.air", "gain": round(tau * glass_area, 9)},
        ]
        bindings[f"Q_heat_{zn}"] = [
            {"target": f"{zn}_air.air", "gain": 0.7},
            {"target": f"{zn}_wall.si", "gain": 0.3},
        ]
        outputs[f"T_{zn}"] = f"{zn}_air.air"

    elements["Z1_door"] = {"kind": "wall", "type": "6", "area": door_area, "flow_sources": []}
    elements["Z1_vent"] = {"kind": "airflow", "type": "8"}
    connections += [["Z1_air.air", "Z1_door.ia"], ["Z1_air.air", "Z1_vent.ia"]]
    bindings["T_out"] += ["Z1_door.out", "Z1_vent.flow"]

    for z in range(1, _N_ZONES):
        name = f"IW{z}{z + 1}"
        elements[name] = {
            "kind": "wall", "type": "2", "area": _ZONE_DEPTH * _ZONE_HEIGHT,
            "exterior": False, "flow_sources": [],
        }
        connections += [[f"Z{z}_air.air", f"{name}.oa"], [f"Z{z + 1}_air.air", f"{name}.ia"]]

    return BuildingDescription(
        title=f"Synthetic house: {SEVEN_ZONE_SUMMARY}",
        include=["builtin:twin_house"],
        connections=connections,
        elements=elements,
        bindings=bindings,
        outputs=outputs,
        library={s: dict(lib[s]) for s in lib},
    )


def seven_zone_inputs(n_steps: int = 5904, dt: float = 600.0, seed: int = 0) -> TimeSeries:
    """Daily-periodic weather with noise and on/off heaters, deterministic for a seed."""
    rng = np.random.default_rng(seed)
    t = dt * np.arange(n_steps)
    day = 2 * np.pi * t / 86400.0
    channels = {
        "T_out": 5.0 + 6.0 * np.sin(day - 2.0) + rng.normal(0.0, 0.5, n_steps),
        "T_ground": np.full(n_steps, 10.0),
        "E_sol": np.clip(500.0 * np.sin(day - np.pi / 2), 0.0, None),
    }
    for z in range(1, _N_ZONES + 1):
        on = rng.random(n_steps) < 0.4
        channels[f"Q_heat_Z{z}"] = 800.0 * on
    return TimeSeries(dt, channels)


def seven_zone_model():
    """Model of the seven-zone house built from the shipped ``.tc`` file."""
    return build_model(parse_building(data_path("seven_zone_house.tc")))
