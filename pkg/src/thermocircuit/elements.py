"""Thermal circuits of building elements.

Factories return :class:`~thermocircuit.circuit.ThermalCircuit` values
with descriptive labels so that elements can be connected by name:

* walls: ``so`` (outside surface), ``L<i>s<j>`` (mid-slice capacity nodes
  of slice ``j`` of layer ``i``), ``x<k>`` (massless slice interfaces),
  ``si`` (inside surface), ``ia`` (inside air side of the inner film) and,
  for walls between two zones, ``oa`` (outside air side of the outer film);
* windows: ``so``, ``si``, ``ia`` (and ``oa``);
* airflow: ``ia`` (and ``oa``);
* zone air: ``air``.

Exterior elements have a temperature source on the outer branch (``out``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .circuit import ThermalCircuit

__all__ = [
    "AIR_DENSITY",
    "AIR_SPECIFIC_HEAT",
    "STEFAN_BOLTZMANN",
    "H_OUT",
    "H_IN",
    "CONVECTIVE_FRACTION",
    "Material",
    "LayerSpec",
    "WallSpec",
    "WindowSpec",
    "AirflowSpec",
    "wall_circuit",
    "window_circuit",
    "airflow_conductance",
    "airflow_circuit",
    "zone_air_circuit",
    "heater_split",
    "distribute_by_area",
    "solar_gains",
    "radiative_link",
    "series_resistance",
    "u_value",
]

AIR_DENSITY = 1.2  # kg/m³
AIR_SPECIFIC_HEAT = 1006.0  # J/(kg·K)
STEFAN_BOLTZMANN = 5.67e-8  # W/(m²·K⁴)
H_OUT = 25.0  # W/(m²·K)
H_IN = 7.7  # W/(m²·K)
CONVECTIVE_FRACTION = 0.7


@dataclass(frozen=True)
class Material:
    conductivity: float
    density: float
    specific_heat: float
    name: str = ""

    def __post_init__(self):
        for attr in ("conductivity", "density", "specific_heat"):
            if not getattr(self, attr) > 0:
                raise ValueError(f"material {self.name!r}: {attr} must be > 0")


@dataclass(frozen=True)
class LayerSpec:
    material: Material
    thickness: float
    slices: int = 1

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError(f"layer thickness must be > 0, got {self.thickness}")
        if int(self.slices) != self.slices or self.slices < 1:
            raise ValueError(f"slices must be a positive integer, got {self.slices}")


@dataclass(frozen=True)
class WallSpec:
    """Multi-layer wall, layers ordered from outside to inside."""

    layers: tuple
    area: float
    h_out: float = H_OUT
    h_in: float = H_IN
    absorptance: float = 0.0
    emissivity: float = 0.9

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("a wall needs at least one layer")
        if not self.area > 0:
            raise ValueError(f"wall area must be > 0, got {self.area}")
        if not (self.h_out > 0 and self.h_in > 0):
            raise ValueError("film coefficients must be > 0")
        for attr in ("absorptance", "emissivity"):
            if not 0.0 <= getattr(self, attr) <= 1.0:
                raise ValueError(f"{attr} must be in [0, 1]")

    def with_slices(self, slices: int) -> "WallSpec":
        layers = tuple(LayerSpec(l.material, l.thickness, slices) for l in self.layers)
        return WallSpec(layers, self.area, self.h_out, self.h_in, self.absorptance, self.emissivity)


@dataclass(frozen=True)
class WindowSpec:
    """Window assembly.

    ``u_value`` excludes the surface films, which are added in series.
    ``transmittance`` maps incidence angle (degrees) to solar transmittance.
    """

    area: float
    glass_area: float
    u_value: float
    transmittance: tuple = ((0.0, 0.7),)
    h_out: float = H_OUT
    h_in: float = H_IN

    def __post_init__(self):
        table = tuple(sorted((float(a), float(t)) for a, t in dict(self.transmittance).items())) \
            if isinstance(self.transmittance, dict) else tuple(sorted((float(a), float(t)) for a, t in self.transmittance))
        object.__setattr__(self, "transmittance", table)
        if not 0 < self.glass_area <= self.area:
            raise ValueError("glass area must be in (0, overall area]")
        if not self.u_value > 0:
            raise ValueError("u_value must be > 0")
        if not (self.h_out > 0 and self.h_in > 0):
            raise ValueError("film coefficients must be > 0")
        if not table:
            raise ValueError("transmittance table is empty")
        if any(not 0.0 <= t <= 1.0 for _, t in table):
            raise ValueError("transmittance values must be in [0, 1]")

    def tau(self, incidence: float) -> float:
        """Solar transmittance at ``incidence`` degrees (0 at and beyond 90°)."""
        if incidence >= 90.0:
            return 0.0
        angles, values = zip(*self.transmittance)
        return float(np.interp(max(incidence, 0.0), angles, values))


@dataclass(frozen=True)
class AirflowSpec:
    """Air exchange given either as a volumetric flow or as air changes per hour."""

    flow_m3h: Optional[float] = None
    ach: Optional[float] = None
    volume: Optional[float] = None
    density: float = AIR_DENSITY
    specific_heat: float = AIR_SPECIFIC_HEAT

    def __post_init__(self):
        if (self.flow_m3h is None) == (self.ach is None):
            raise ValueError("give exactly one of flow_m3h or ach")
        if self.ach is not None and (self.volume is None or not self.volume > 0):
            raise ValueError("ach needs a zone volume > 0")
        if self.volumetric_flow < 0:
            raise ValueError("air flow must be >= 0")

    @property
    def volumetric_flow(self) -> float:
        """Flow in m³/s."""
        if self.flow_m3h is not None:
            return self.flow_m3h / 3600.0
        return self.ach * self.volume / 3600.0


def _slices(spec: WallSpec):
    """Yield (label, half-slice resistance K/W, capacity J/K) per slice."""
    s = spec.area
    for i, layer in enumerate(spec.layers):
        d = layer.thickness / layer.slices
        m = layer.material
        for j in range(int(layer.slices)):
            yield (
                f"L{i}s{j}",
                d / (2.0 * m.conductivity * s),
                m.density * m.specific_heat * d * s,
            )


def _chain(node_labels, capacities, branches, exterior, flow_nodes=(), output_nodes=()):
    """Build a chain circuit; ``branches`` is a list of (label, conductance)."""
    nodes = list(node_labels)
    caps = list(capacities)
    if not exterior:
        nodes.insert(0, "oa")
        caps.insert(0, 0.0)
    n = len(nodes)
    inc = np.zeros((len(branches), n), dtype=np.int64)
    # first branch enters node 0 from the outdoor reference (or from "oa")
    if exterior:
        inc[0, 0] = 1
        for i in range(1, len(branches)):
            inc[i, i - 1] = -1
            inc[i, i] = 1
    else:
        for i in range(len(branches)):
            inc[i, i] = -1
            inc[i, i + 1] = 1
    tflags = np.zeros(len(branches), dtype=np.int64)
    if exterior:
        tflags[0] = 1
    fflags = np.array([1 if lbl in flow_nodes else 0 for lbl in nodes])
    yflags = np.array([1 if lbl in output_nodes else 0 for lbl in nodes])
    return ThermalCircuit(
        incidence=inc,
        conductances=[g for _, g in branches],
        capacities=caps,
        temp_source_flags=tflags,
        flow_source_flags=fflags,
        output_flags=yflags,
        branch_labels=[lbl for lbl, _ in branches],
        node_labels=nodes,
    )


def wall_circuit(spec: WallSpec, exterior: bool = True) -> ThermalCircuit:
    """Circuit of a multi-layer wall.

    Each slice of thickness ``d`` is two resistances ``d/(2kS)`` around a
    node carrying ``ρ c d S``.  Outer and inner surface nodes are massless
    and connect to the films ``h_out S`` and ``h_in S``.  The outside
    surface carries a flow source (absorbed solar), the inside surface one
    for radiative gains.  With ``exterior=True`` the outer film has a
    temperature source, otherwise it ends on node ``oa``.
    """
    nodes, caps = ["so"], [0.0]
    branches = [("out", spec.h_out * spec.area)]
    for k, (lbl, r_half, cap) in enumerate(_slices(spec)):
        if k:
            # massless interface between consecutive slices
            nodes.append(f"x{k}")
            caps.append(0.0)
        branches.append((f"{lbl}a", 1.0 / r_half))
        nodes.append(lbl)
        caps.append(cap)
        branches.append((f"{lbl}b", 1.0 / r_half))
    nodes += ["si", "ia"]
    caps += [0.0, 0.0]
    branches.append(("in", spec.h_in * spec.area))
    return _chain(nodes, caps, branches, exterior, flow_nodes=("so", "si"))


def window_circuit(spec: WindowSpec, exterior: bool = True) -> ThermalCircuit:
    """Massless circuit: outer film, assembly conductance ``U S``, inner film.

    The overall area drives conduction; the glass area only enters
    :func:`solar_gains`.
    """
    s = spec.area
    branches = [("out", spec.h_out * s), ("glazing", spec.u_value * s), ("in", spec.h_in * s)]
    return _chain(["so", "si", "ia"], [0.0, 0.0, 0.0], branches, exterior, flow_nodes=("so",))


def airflow_conductance(spec: AirflowSpec) -> float:
    """Advective conductance ``ρ c_p V̇`` in W/K."""
    return spec.density * spec.specific_heat * spec.volumetric_flow


def airflow_circuit(spec: AirflowSpec, exterior: bool = True) -> ThermalCircuit:
    """One branch carrying ``ρ c_p V̇``: from outdoors (temperature source) or from ``oa``."""
    return _chain(["ia"], [0.0], [("flow", airflow_conductance(spec))], exterior)


def zone_air_circuit(volume: float, density: float = AIR_DENSITY, specific_heat: float = AIR_SPECIFIC_HEAT) -> ThermalCircuit:
    """Single air node with capacity ``ρ c_p V``, a flow source and an output."""
    if not volume > 0:
        raise ValueError(f"zone volume must be > 0, got {volume}")
    return ThermalCircuit(
        incidence=np.zeros((0, 1), dtype=np.int64),
        conductances=np.zeros(0),
        capacities=[density * specific_heat * volume],
        flow_source_flags=[1],
        output_flags=[1],
        node_labels=["air"],
    )


def heater_split(power: float, convective_fraction: float = CONVECTIVE_FRACTION):
    """Split heater power into (convective, radiative) parts in W."""
    if power < 0:
        raise ValueError("heater power must be >= 0")
    convective = convective_fraction * power
    return convective, power - convective


def distribute_by_area(total, areas: Sequence[float]) -> np.ndarray:
    """Share ``total`` among surfaces in proportion to their areas."""
    areas = np.asarray(areas, dtype=float)
    if np.any(areas < 0) or areas.sum() <= 0:
        raise ValueError("areas must be >= 0 with a positive sum")
    return total * areas / areas.sum()


def solar_gains(irradiance, spec, incidence: float = 0.0, surface_areas=None):
    """Solar heat flows in W.

    For a :class:`WallSpec`, ``α E S`` absorbed at the outside surface.
    For a :class:`WindowSpec`, ``τ(incidence) E S_glass`` transmitted; if
    ``surface_areas`` is given it is distributed over those interior
    surfaces by area.  ``irradiance`` may be an array (time series).
    """
    e = np.asarray(irradiance, dtype=float)
    if np.any(e < 0):
        raise ValueError("irradiance must be >= 0")
    if isinstance(spec, WallSpec):
        gain = spec.absorptance * e * spec.area
    elif isinstance(spec, WindowSpec):
        gain = spec.tau(incidence) * e * spec.glass_area
        if surface_areas is not None:
            w = distribute_by_area(1.0, surface_areas)
            return np.multiply.outer(gain, w)
    else:
        raise TypeError(f"no solar model for {type(spec).__name__}")
    return gain if gain.ndim else float(gain)


def radiative_link(eps1: float, eps2: float, area: float, mean_temp: float) -> float:
    """Linearized long-wave conductance between two parallel gray surfaces, W/K.

    ``4 ε σ T̄³ S`` with ``ε = 1 / (1/ε1 + 1/ε2 - 1)``; ``mean_temp`` in K.
    """
    if not mean_temp > 0:
        raise ValueError("mean temperature must be > 0 K")
    if eps1 <= 0 or eps2 <= 0:
        return 0.0
    if eps1 > 1 or eps2 > 1:
        raise ValueError("emissivities must be in (0, 1]")
    eps = 1.0 / (1.0 / eps1 + 1.0 / eps2 - 1.0)
    return 4.0 * eps * STEFAN_BOLTZMANN * mean_temp**3 * area


def series_resistance(circuit: ThermalCircuit) -> float:
    """Sum of branch resistances of a chain circuit, K/W."""
    return float(np.sum(1.0 / circuit.conductances))


def u_value(spec: WallSpec) -> float:
    """Surface-to-air U-value, films included, W/(m²·K)."""
    r = 1.0 / spec.h_out + 1.0 / spec.h_in
    r += sum(l.thickness / l.material.conductivity for l in spec.layers)
    return 1.0 / r
