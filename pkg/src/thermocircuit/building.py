"""Building descriptions: parsing, serialization and model construction.

A building description is a TOML document (conventional extension
``.tc``).  The grammar is documented in ``docs/building-format.md``; in
short::

    include = ["builtin:twin_house"]        # optional libraries
    connections = [["zone.air", "wall.ia"]] # node identifications
    unbound = "error"                       # or "zero"

    [materials.<name>]      conductivity, density, specific_heat
    [wall_types.<name>]     layers = [{material | conductivity, density,
                            specific_heat; thickness; slices}], absorptance,
                            emissivity, name, declared_u, note
    [window_types.<name>]   overall = [w, h], glass = [w, h], panes,
                            u_value, transmittance = [[deg, tau], ...], note
    [airflow_types.<name>]  ach | flow_m3h, volume, name, note
    [elements.<name>]       kind = circuit | wall | window | airflow | zone
    [bindings]              <channel> = ["elem.label", {target, gain}, ...]
    [outputs]               <column> = "elem.node"

Top-level keys (``include``, ``connections``, ``unbound``, ``title``) must
precede the first table, as TOML requires.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import tomli
import tomli_w

from .assembly import AssemblyPlan, assemble, plan_assembly
from .circuit import ThermalCircuit, build_dae, check_well_posed, validate
from .elements import (
    AirflowSpec,
    LayerSpec,
    Material,
    WallSpec,
    WindowSpec,
    airflow_circuit,
    wall_circuit,
    window_circuit,
    zone_air_circuit,
)
from .exceptions import AssemblyError, CircuitError, InputBindingError, ParseError
from .simulate import IntegratorConfig, TimeSeries, Trajectory, integrate
from .statespace import StateSpace, extract_state_space

__all__ = [
    "BuildingDescription",
    "BuildingModel",
    "parse_building",
    "parse_building_text",
    "serialize_building",
    "load_library",
    "element_circuit",
    "build_model",
]

_TOP_KEYS = {
    "title", "include", "connections", "unbound", "materials", "wall_types",
    "window_types", "airflow_types", "elements", "bindings", "outputs",
}
_LIBRARY_SECTIONS = ("materials", "wall_types", "window_types", "airflow_types")
_MATERIAL_KEYS = {"conductivity", "density", "specific_heat", "note"}
_WALL_TYPE_KEYS = {"name", "layers", "absorptance", "emissivity", "declared_u", "note"}
_LAYER_KEYS = {"material", "name", "thickness", "conductivity", "density", "specific_heat", "slices"}
_WINDOW_TYPE_KEYS = {"overall", "glass", "panes", "u_value", "transmittance", "note"}
_AIRFLOW_TYPE_KEYS = {"name", "ach", "flow_m3h", "volume", "note"}
_ELEMENT_KEYS = {
    "circuit": {"kind", "nodes", "branches", "note"},
    "zone": {"kind", "volume", "flow_sources", "note"},
    "wall": {
        "kind", "type", "layers", "area", "slices", "h_out", "h_in", "absorptance",
        "emissivity", "exterior", "thickness", "flow_sources", "note",
    },
    "window": {
        "kind", "type", "overall", "glass", "panes", "area", "glass_area", "u_value",
        "transmittance", "h_out", "h_in", "exterior", "flow_sources", "note",
    },
    "airflow": {"kind", "type", "ach", "flow_m3h", "volume", "exterior", "note"},
}
_NODE_KEYS = {"name", "capacity", "flow_source", "output"}
_BRANCH_KEYS = {"name", "from", "to", "conductance", "temp_source"}
_TERM_KEYS = {"target", "gain"}
_NAME_RE = re.compile(r"^[A-Za-z0-9_\-]+$")


@dataclass
class BuildingDescription:
    """Parsed building description, kept close to the file structure.

    Library sections pulled in through ``include`` are stored separately
    in ``library`` so that serialization reproduces only the file's own
    content.
    """

    title: str = ""
    include: list = field(default_factory=list)
    connections: list = field(default_factory=list)
    unbound: str = "error"
    materials: dict = field(default_factory=dict)
    wall_types: dict = field(default_factory=dict)
    window_types: dict = field(default_factory=dict)
    airflow_types: dict = field(default_factory=dict)
    elements: dict = field(default_factory=dict)
    bindings: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    library: dict = field(default_factory=dict, compare=False, repr=False)
    path: Optional[str] = field(default=None, compare=False, repr=False)

    def merged_library(self) -> dict:
        merged = {s: dict(self.library.get(s, {})) for s in _LIBRARY_SECTIONS}
        for s in _LIBRARY_SECTIONS:
            merged[s].update(getattr(self, s))
        return merged

    def to_dict(self) -> dict:
        out = {}
        if self.title:
            out["title"] = self.title
        if self.include:
            out["include"] = list(self.include)
        if self.connections:
            out["connections"] = [list(c) for c in self.connections]
        if self.unbound != "error":
            out["unbound"] = self.unbound
        for name in _LIBRARY_SECTIONS + ("elements", "bindings", "outputs"):
            value = getattr(self, name)
            if value:
                out[name] = value
        return out


class _Locator:
    """Maps offending tokens back to a line and column of the source text."""

    def __init__(self, text: str, path=None):
        self.lines = text.splitlines()
        self.path = path

    def find(self, *needles):
        for needle in needles:
            if needle is None:
                continue
            for pattern in (f'"{needle}"', f"{needle} =", f"{needle}=", f".{needle}]", str(needle)):
                for i, line in enumerate(self.lines):
                    col = line.find(pattern)
                    if col >= 0:
                        if pattern.startswith(".") or pattern.startswith('"'):
                            col += 1
                        return i + 1, col + 1
        return None, None

    def error(self, message, *needles):
        line, col = self.find(*needles)
        return ParseError(message, self.path, line, col)


def _check_keys(loc, mapping, allowed, where, anchor=None):
    if not isinstance(mapping, dict):
        raise loc.error(f"{where} must be a table", anchor)
    for key in mapping:
        if key not in allowed:
            raise loc.error(f"unknown key {key!r} in {where}", key)


def _load_include(ref: str, base: Optional[Path], loc) -> dict:
    if ref.startswith("builtin:"):
        name = ref.split(":", 1)[1]
        try:
            text = resources.files("thermocircuit").joinpath("data", f"{name}.toml").read_text("utf-8")
        except FileNotFoundError:
            raise loc.error(f"unknown builtin library {name!r}", ref) from None
        src = f"builtin:{name}"
    else:
        p = Path(ref)
        if base is not None and not p.is_absolute():
            p = base / p
        if not p.exists():
            raise loc.error(f"included file {ref!r} not found", ref)
        text = p.read_text("utf-8")
        src = str(p)
    desc = parse_building_text(text, src, require_elements=False)
    lib = desc.merged_library()
    return lib


def load_library(ref: str = "builtin:twin_house") -> dict:
    """Library sections (materials, wall/window/airflow types) of a file."""
    return _load_include(ref, None, _Locator("", ref))


def parse_building(path) -> BuildingDescription:
    """Parse a building description file.

    Raises
    ------
    ParseError
        On syntax errors, unknown keys, unresolved labels and dangling
        connections, with the line and column of the offending token.
    """
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read building description: {exc}", path) from exc
    return parse_building_text(text, str(path), base=path.parent)


def parse_building_text(text: str, path=None, base=None, require_elements=True) -> BuildingDescription:
    loc = _Locator(text, path)
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+), column (\d+)", str(exc))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        msg = re.sub(r"\s*\(at line \d+, column \d+\)", "", str(exc))
        raise ParseError(f"syntax error: {msg}", path, line, col) from None

    _check_keys(loc, data, _TOP_KEYS, "document")
    desc = BuildingDescription(path=path)
    desc.title = data.get("title", "")
    desc.include = list(data.get("include", []))
    desc.unbound = data.get("unbound", "error")
    if desc.unbound not in ("error", "zero"):
        raise loc.error(f"unbound must be 'error' or 'zero', got {desc.unbound!r}", "unbound")

    for section, keys in (
        ("materials", _MATERIAL_KEYS),
        ("wall_types", _WALL_TYPE_KEYS),
        ("window_types", _WINDOW_TYPE_KEYS),
        ("airflow_types", _AIRFLOW_TYPE_KEYS),
    ):
        entries = data.get(section, {})
        _check_keys(loc, entries, set(entries), section, section)
        for name, entry in entries.items():
            _check_keys(loc, entry, keys, f"{section}.{name}", name)
            if section == "wall_types":
                for layer in entry.get("layers", []):
                    _check_keys(loc, layer, _LAYER_KEYS, f"layer of wall type {name!r}", name)
        setattr(desc, section, entries)

    library = {s: {} for s in _LIBRARY_SECTIONS}
    for ref in desc.include:
        lib = _load_include(ref, Path(base) if base else None, loc)
        for s in _LIBRARY_SECTIONS:
            library[s].update(lib[s])
    desc.library = library

    desc.elements = data.get("elements", {})
    if require_elements and not desc.elements:
        raise ParseError("no circuits declared", path, 1, 1)
    for name, decl in desc.elements.items():
        if not _NAME_RE.match(name):
            raise loc.error(f"element name {name!r} may only contain letters, digits, '_' and '-'", name)
        if not isinstance(decl, dict) or "kind" not in decl:
            raise loc.error(f"element {name!r} needs a kind", name)
        kind = decl["kind"]
        if kind not in _ELEMENT_KEYS:
            raise loc.error(f"element {name!r} has unknown kind {kind!r}", kind, name)
        _check_keys(loc, decl, _ELEMENT_KEYS[kind], f"element {name!r}", name)
        if kind == "circuit":
            for node in decl.get("nodes", []):
                _check_keys(loc, node, _NODE_KEYS, f"node of element {name!r}", name)
            for br in decl.get("branches", []):
                _check_keys(loc, br, _BRANCH_KEYS, f"branch of element {name!r}", name)

    raw_conn = data.get("connections", [])
    if not isinstance(raw_conn, list):
        raise loc.error("connections must be an array of label pairs", "connections")
    for pair in raw_conn:
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(p, str) for p in pair)):
            raise loc.error(f"connection {pair!r} must be a pair of 'element.node' labels", "connections")
    desc.connections = [list(p) for p in raw_conn]

    bindings = data.get("bindings", {})
    _check_keys(loc, bindings, set(bindings), "bindings", "bindings")
    norm = {}
    for channel, spec in bindings.items():
        terms = spec if isinstance(spec, list) else [spec]
        for term in terms:
            if isinstance(term, dict):
                _check_keys(loc, term, _TERM_KEYS, f"binding {channel!r}", channel)
                if "target" not in term:
                    raise loc.error(f"binding term of {channel!r} needs a target", channel)
            elif not isinstance(term, str):
                raise loc.error(f"binding {channel!r} must list labels or {{target, gain}} tables", channel)
        norm[channel] = terms
    desc.bindings = norm
    desc.outputs = data.get("outputs", {})
    _check_keys(loc, desc.outputs, set(desc.outputs), "outputs", "outputs")

    if desc.elements:
        _resolve_all(desc, loc)
    return desc


def serialize_building(desc: BuildingDescription) -> str:
    """TOML text that parses back to an equal description."""
    return tomli_w.dumps(desc.to_dict())


# --------------------------------------------------------------------------
# element construction

def _layer(spec, lib, where, thickness=None) -> LayerSpec:
    if "material" in spec:
        mat = lib["materials"].get(spec["material"])
        if mat is None:
            raise CircuitError(f"{where}: unknown material {spec['material']!r}")
        material = Material(mat["conductivity"], mat["density"], mat["specific_heat"], spec["material"])
    else:
        material = Material(spec["conductivity"], spec["density"], spec["specific_heat"], spec.get("name", ""))
    t = spec.get("thickness", thickness)
    if t is None:
        raise CircuitError(f"{where}: layer {spec.get('name', '')!r} has no thickness")
    return LayerSpec(material, t, spec.get("slices", 1))


def _dims_area(dims):
    return float(dims[0]) * float(dims[1])


def element_circuit(name: str, decl: dict, lib: dict) -> ThermalCircuit:
    """Circuit of one declared element.  ``lib`` holds the library sections."""
    kind = decl["kind"]
    where = f"element {name!r}"
    try:
        if kind == "circuit":
            circuit = _raw_circuit(decl, where)
        elif kind == "zone":
            circuit = zone_air_circuit(decl["volume"])
        elif kind == "wall":
            wtype = {}
            if "type" in decl:
                wtype = lib["wall_types"].get(str(decl["type"]))
                if wtype is None:
                    raise CircuitError(f"{where}: unknown wall type {decl['type']!r}")
            layers_spec = decl.get("layers", wtype.get("layers"))
            if not layers_spec:
                raise CircuitError(f"{where}: wall has no layers")
            layers = [_layer(l, lib, where, decl.get("thickness")) for l in layers_spec]
            if "slices" in decl:
                layers = [LayerSpec(l.material, l.thickness, decl["slices"]) for l in layers]
            spec = WallSpec(
                layers,
                decl["area"],
                h_out=decl.get("h_out", WallSpec.h_out),
                h_in=decl.get("h_in", WallSpec.h_in),
                absorptance=decl.get("absorptance", wtype.get("absorptance", 0.0)),
                emissivity=decl.get("emissivity", wtype.get("emissivity", 0.9)),
            )
            circuit = wall_circuit(spec, exterior=decl.get("exterior", True))
        elif kind == "window":
            spec = window_spec(decl, lib, where)
            circuit = window_circuit(spec, exterior=decl.get("exterior", True))
        elif kind == "airflow":
            circuit = airflow_circuit(airflow_spec(decl, lib, where), exterior=decl.get("exterior", True))
        else:
            raise CircuitError(f"{where}: unknown kind {kind!r}")
    except KeyError as exc:
        raise CircuitError(f"{where}: missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        if isinstance(exc, CircuitError):
            raise
        raise CircuitError(f"{where}: {exc}") from None

    if "flow_sources" in decl:
        keep = set(decl["flow_sources"])
        unknown = keep - set(circuit.node_labels)
        if unknown:
            raise CircuitError(f"{where}: flow_sources names unknown nodes {sorted(unknown)}")
        flags = [1 if lbl in keep else 0 for lbl in circuit.node_labels]
        circuit = circuit.replace(flow_source_flags=flags)
    return circuit


def window_spec(decl, lib, where) -> WindowSpec:
    wtype = {}
    if "type" in decl:
        wtype = lib["window_types"].get(str(decl["type"]))
        if wtype is None:
            raise CircuitError(f"{where}: unknown window type {decl['type']!r}")
    merged = {**wtype, **decl}
    area = merged.get("area")
    if area is None:
        area = _dims_area(merged["overall"])
    glass = merged.get("glass_area")
    if glass is None:
        glass = _dims_area(merged["glass"]) * merged.get("panes", 1)
    if "u_value" not in merged:
        raise CircuitError(f"{where}: window needs a u_value")
    kwargs = {}
    if "transmittance" in merged:
        kwargs["transmittance"] = tuple(tuple(p) for p in merged["transmittance"])
    return WindowSpec(
        area, glass, merged["u_value"],
        h_out=merged.get("h_out", WindowSpec.h_out),
        h_in=merged.get("h_in", WindowSpec.h_in),
        **kwargs,
    )


def airflow_spec(decl, lib, where) -> AirflowSpec:
    atype = {}
    if "type" in decl:
        atype = lib["airflow_types"].get(str(decl["type"]))
        if atype is None:
            raise CircuitError(f"{where}: unknown airflow type {decl['type']!r}")
    merged = {**atype, **decl}
    return AirflowSpec(
        flow_m3h=merged.get("flow_m3h"), ach=merged.get("ach"), volume=merged.get("volume")
    )


def _raw_circuit(decl, where) -> ThermalCircuit:
    nodes = decl.get("nodes", [])
    branches = decl.get("branches", [])
    names = [n["name"] for n in nodes]
    if len(set(names)) != len(names):
        raise CircuitError(f"{where}: duplicate node names")
    index = {n: j for j, n in enumerate(names)}
    inc = np.zeros((len(branches), len(nodes)), dtype=np.int64)
    for i, br in enumerate(branches):
        for key, sign in (("from", -1), ("to", 1)):
            if key in br:
                if br[key] not in index:
                    raise CircuitError(f"{where}: branch {br.get('name', i)!r} refers to unknown node {br[key]!r}")
                inc[i, index[br[key]]] = sign
    return ThermalCircuit(
        incidence=inc,
        conductances=[br["conductance"] for br in branches],
        capacities=[n.get("capacity", 0.0) for n in nodes],
        temp_source_flags=[int(bool(br.get("temp_source", False))) for br in branches],
        flow_source_flags=[int(bool(n.get("flow_source", False))) for n in nodes],
        output_flags=[int(bool(n.get("output", False))) for n in nodes],
        branch_labels=[br.get("name", f"q{i}") for i, br in enumerate(branches)],
        node_labels=names,
    )


# --------------------------------------------------------------------------
# label resolution

def _split(label):
    if not isinstance(label, str) or "." not in label:
        return None, None
    return label.split(".", 1)


def _resolve_all(desc: BuildingDescription, loc: _Locator):
    """Build every element once to check that all labels resolve."""
    lib = desc.merged_library()
    circuits = {}
    for name, decl in desc.elements.items():
        try:
            circuits[name] = element_circuit(name, decl, lib)
        except CircuitError as exc:
            raise loc.error(str(exc.args[0]), name) from None

    def node_of(label):
        elem, local = _split(label)
        if elem not in circuits or local not in circuits[elem].node_labels:
            raise loc.error(f"unresolved node label {label!r}", label)

    for a, b in desc.connections:
        node_of(a)
        node_of(b)
    for channel, terms in desc.bindings.items():
        for term in terms:
            target = term if isinstance(term, str) else term["target"]
            elem, local = _split(target)
            c = circuits.get(elem)
            if c is None or (local not in c.node_labels and local not in c.branch_labels):
                raise loc.error(f"unresolved binding target {target!r} for channel {channel!r}", target)
    for column, label in desc.outputs.items():
        if not isinstance(label, str):
            raise loc.error(f"output {column!r} must name a node label", column)
        node_of(label)


# --------------------------------------------------------------------------
# model

@dataclass(eq=False)
class BuildingModel:
    """Assembled circuit, its state-space model and the channel binding.

    ``input_gains`` is a matrix of shape (n_inputs, n_channels) mapping
    channel values to the model input vector ``u``.
    """

    circuit: ThermalCircuit
    state_space: StateSpace
    plan: AssemblyPlan
    element_names: tuple
    element_circuits: tuple
    channels: tuple
    input_gains: np.ndarray
    output_columns: tuple
    output_rows: tuple

    @property
    def n_states(self) -> int:
        return self.state_space.n_states

    def input_matrix(self, inputs: TimeSeries) -> np.ndarray:
        """``U`` with one row per sample and one column per model input."""
        missing = [c for c in self.channels if c not in inputs.channels]
        if missing:
            raise InputBindingError(f"input file lacks channels {missing}")
        if not self.channels:
            return np.zeros((len(inputs), self.state_space.n_inputs))
        values = np.column_stack([inputs[c] for c in self.channels])
        return values @ self.input_gains.T

    def simulate(self, inputs: TimeSeries, cfg: IntegratorConfig = None) -> Trajectory:
        u = self.input_matrix(inputs)
        traj = integrate(self.state_space, u, cfg or IntegratorConfig(), input_dt=inputs.dt)
        rows = list(self.output_rows)
        return Trajectory(
            times=inputs.start + traj.times,
            outputs=traj.outputs[:, rows],
            output_labels=tuple(self.output_columns),
            states=traj.states,
            state_labels=traj.state_labels,
        )


def build_model(desc: BuildingDescription, allow_unbound: bool = False) -> BuildingModel:
    """Assemble the elements, extract the state-space model and bind channels.

    Raises
    ------
    CircuitError, AssemblyError
        On invalid or ill-posed circuits.
    SingularityError, NoStatesError
        From the extraction.
    InputBindingError
        If a flagged source has no binding and unbound sources are not
        allowed, or a binding targets something that is not a source.
    """
    lib = desc.merged_library()
    names = list(desc.elements)
    circuits = [element_circuit(n, desc.elements[n], lib) for n in names]
    pos = {n: i for i, n in enumerate(names)}

    def node_ref(label):
        elem, local = _split(label)
        if elem not in pos or local not in circuits[pos[elem]].node_labels:
            raise AssemblyError(f"unresolved node label {label!r}")
        return pos[elem], circuits[pos[elem]].node_labels.index(local)

    # output flags are OR-ed by assembly, so setting them locally is equivalent
    for label in desc.outputs.values():
        ci, k = node_ref(label)
        flags = np.array(circuits[ci].output_flags)
        flags[k] = 1
        circuits[ci] = circuits[ci].replace(output_flags=flags)

    conn = [(node_ref(a), node_ref(b)) for a, b in desc.connections]
    plan = plan_assembly(circuits, conn)
    circuit = assemble(circuits, conn, names)
    validate(circuit).raise_for_errors()
    check_well_posed(circuit).raise_for_errors()
    ss = extract_state_space(build_dae(circuit), circuit)

    input_pos = {("b", int(i)): j for j, i in enumerate(ss.input_branches)}
    nb = len(ss.input_branches)
    for j, node in enumerate(ss.input_flow_nodes):
        input_pos[("f", int(node))] = nb + j

    channels = tuple(desc.bindings)
    gains = np.zeros((ss.n_inputs, len(channels)))
    bound = np.zeros(ss.n_inputs, dtype=bool)
    for c, channel in enumerate(channels):
        for term in desc.bindings[channel]:
            target, gain = (term, 1.0) if isinstance(term, str) else (term["target"], term.get("gain", 1.0))
            elem, local = _split(target)
            if elem not in pos:
                raise InputBindingError(f"unresolved binding target {target!r}")
            ec = circuits[pos[elem]]
            if local in ec.branch_labels:
                key = ("b", int(plan.branch_map[pos[elem]][ec.branch_labels.index(local)]))
                kind = "temperature-source branch"
            elif local in ec.node_labels:
                key = ("f", int(plan.node_map[pos[elem]][ec.node_labels.index(local)]))
                kind = "flow-source node"
            else:
                raise InputBindingError(f"unresolved binding target {target!r}")
            if key not in input_pos:
                raise InputBindingError(f"binding target {target!r} is not a {kind}")
            gains[input_pos[key], c] += gain
            bound[input_pos[key]] = True

    unbound = [ss.input_labels[j] for j in np.flatnonzero(~bound)]
    if unbound and not (allow_unbound or desc.unbound == "zero"):
        raise InputBindingError(
            f"{len(unbound)} source(s) without binding: {', '.join(unbound[:8])}"
            + (" ..." if len(unbound) > 8 else "")
            + " (use --allow-unbound or unbound = \"zero\")"
        )

    out_row = {int(n): r for r, n in enumerate(ss.output_nodes)}
    columns, rows = [], []
    named_nodes = set()
    for column, label in desc.outputs.items():
        ci, k = node_ref(label)
        g = int(plan.node_map[ci][k])
        columns.append(column)
        rows.append(out_row[g])
        named_nodes.add(g)
    for g in ss.output_nodes:
        if int(g) not in named_nodes:
            ci, k = plan.classes[int(g)][0]
            columns.append(f"{names[ci]}.{circuits[ci].node_labels[k]}")
            rows.append(out_row[int(g)])

    return BuildingModel(
        circuit=circuit,
        state_space=ss,
        plan=plan,
        element_names=tuple(names),
        element_circuits=tuple(circuits),
        channels=channels,
        input_gains=gains,
        output_columns=tuple(columns),
        output_rows=tuple(rows),
    )
