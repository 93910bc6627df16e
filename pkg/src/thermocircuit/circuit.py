"""Thermal circuit data model, validation, KKT and DAE forms.

A thermal circuit is a weighted directed graph.  It is described by six
arrays: the oriented incidence matrix ``A`` (branches x nodes), the branch
conductances ``G``, the node capacities ``C`` and three 0/1 indicator
vectors: ``b`` (temperature source on a branch), ``f`` (heat-flow source on
a node) and ``y`` (node temperature is an output).

Indicators only say *where* sources are.  Source magnitudes are carried by
:class:`SourceValues` so that one circuit can be simulated against many
input scenarios.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .exceptions import CircuitError

__all__ = [
    "ThermalCircuit",
    "SourceValues",
    "KktSystem",
    "DaeSystem",
    "Violation",
    "ValidationReport",
    "validate",
    "check_well_posed",
    "build_kkt",
    "build_dae",
    "heat_flows",
]

# relative tolerance for symmetry / definiteness checks
SYMMETRY_RTOL = 1e-10


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ThermalCircuit:
    """The six-array description {A, G, b, C, f, y} of one circuit.

    Construction only coerces the arrays; it does not validate them, so an
    invalid circuit can still be built and passed to :func:`validate`.

    Parameters
    ----------
    incidence : array-like of int, shape (n_branches, n_nodes)
        Oriented incidence matrix. ``-1`` where the branch leaves a node,
        ``+1`` where it enters.  A row with a single nonzero entry is a
        branch to the reference environment.
    conductances : array-like of float, shape (n_branches,)
        Branch conductances in W/K.
    capacities : array-like of float, shape (n_nodes,)
        Node capacities in J/K. Zero marks a massless node.
    temp_source_flags, flow_source_flags, output_flags : array-like of {0, 1}
        Indicator vectors. Default to all zeros.
    branch_labels, node_labels : sequence of str
        Default to ``q0, q1, ...`` and ``θ0, θ1, ...``.
    """

    incidence: np.ndarray
    conductances: np.ndarray
    capacities: np.ndarray
    temp_source_flags: np.ndarray = None
    flow_source_flags: np.ndarray = None
    output_flags: np.ndarray = None
    branch_labels: tuple = None
    node_labels: tuple = None

    def __post_init__(self):
        inc = np.array(self.incidence, dtype=float)
        if inc.ndim == 1 and inc.size:
            inc = inc.reshape(1, -1)
        elif inc.size == 0 and inc.ndim < 2:
            inc = inc.reshape(0, len(np.atleast_1d(self.capacities)))
        # integer-valued incidence is stored as int, otherwise keep float so
        # that validate() can report the offending entries
        if np.all(np.isfinite(inc)) and np.all(inc == np.round(inc)):
            inc = inc.astype(np.int64)
        inc.setflags(write=False)
        set_ = object.__setattr__
        set_(self, "incidence", inc)
        n_branches, n_nodes = inc.shape if inc.ndim == 2 else (0, 0)
        set_(self, "conductances", _frozen_array(np.atleast_1d(self.conductances), float))
        set_(self, "capacities", _frozen_array(np.atleast_1d(self.capacities), float))
        for name, n in (
            ("temp_source_flags", n_branches),
            ("flow_source_flags", n_nodes),
            ("output_flags", n_nodes),
        ):
            value = getattr(self, name)
            if value is None:
                value = np.zeros(n, dtype=np.int64)
            value = np.atleast_1d(np.asarray(value))
            if value.dtype == bool:
                value = value.astype(np.int64)
            set_(self, name, _frozen_array(value, value.dtype if value.size else np.int64))
        if self.branch_labels is None:
            set_(self, "branch_labels", tuple(f"q{i}" for i in range(n_branches)))
        else:
            set_(self, "branch_labels", tuple(str(s) for s in self.branch_labels))
        if self.node_labels is None:
            set_(self, "node_labels", tuple(f"θ{j}" for j in range(n_nodes)))
        else:
            set_(self, "node_labels", tuple(str(s) for s in self.node_labels))

    @property
    def n_branches(self) -> int:
        return self.incidence.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.incidence.shape[1]

    @property
    def massless_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.capacities == 0.0)

    @property
    def capacitive_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.capacities != 0.0)

    @property
    def temp_source_branches(self) -> np.ndarray:
        return np.flatnonzero(self.temp_source_flags)

    @property
    def flow_source_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.flow_source_flags)

    @property
    def output_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.output_flags)

    def replace(self, **changes) -> "ThermalCircuit":
        """Return a copy with some arrays replaced."""
        kwargs = {
            name: getattr(self, name)
            for name in (
                "incidence",
                "conductances",
                "capacities",
                "temp_source_flags",
                "flow_source_flags",
                "output_flags",
                "branch_labels",
                "node_labels",
            )
        }
        kwargs.update(changes)
        return ThermalCircuit(**kwargs)

    def __eq__(self, other):
        if not isinstance(other, ThermalCircuit):
            return NotImplemented
        return (
            self.incidence.shape == other.incidence.shape
            and np.array_equal(self.incidence, other.incidence)
            and np.array_equal(self.conductances, other.conductances)
            and np.array_equal(self.capacities, other.capacities)
            and np.array_equal(self.temp_source_flags, other.temp_source_flags)
            and np.array_equal(self.flow_source_flags, other.flow_source_flags)
            and np.array_equal(self.output_flags, other.output_flags)
            and self.branch_labels == other.branch_labels
            and self.node_labels == other.node_labels
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"ThermalCircuit(n_branches={self.n_branches}, n_nodes={self.n_nodes}, "
            f"massless={len(self.massless_nodes)})"
        )


@dataclass(frozen=True)
class SourceValues:
    """Source magnitudes for the flagged branches and nodes of a circuit.

    ``branch_temps`` holds one temperature (°C) per flagged branch and
    ``node_flows`` one heat flow (W) per flagged node, both in increasing
    branch / node index order.
    """

    branch_temps: np.ndarray = field(default_factory=lambda: np.zeros(0))
    node_flows: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "branch_temps", _frozen_array(np.atleast_1d(self.branch_temps), float))
        object.__setattr__(self, "node_flows", _frozen_array(np.atleast_1d(self.node_flows), float))

    @classmethod
    def zeros(cls, circuit: ThermalCircuit) -> "SourceValues":
        return cls(
            np.zeros(len(circuit.temp_source_branches)),
            np.zeros(len(circuit.flow_source_nodes)),
        )

    def expand(self, temp_source_flags, flow_source_flags):
        """Scatter the magnitudes into full-length ``b`` and ``f`` vectors."""
        b_idx = np.flatnonzero(temp_source_flags)
        f_idx = np.flatnonzero(flow_source_flags)
        if len(self.branch_temps) != len(b_idx):
            raise CircuitError(
                f"{len(self.branch_temps)} branch temperatures given for "
                f"{len(b_idx)} flagged branches"
            )
        if len(self.node_flows) != len(f_idx):
            raise CircuitError(
                f"{len(self.node_flows)} node flows given for {len(f_idx)} flagged nodes"
            )
        b = np.zeros(len(temp_source_flags))
        f = np.zeros(len(flow_source_flags))
        b[b_idx] = self.branch_temps
        f[f_idx] = self.node_flows
        return b, f


@dataclass(frozen=True)
class Violation:
    code: str
    index: Optional[int]
    message: str
    severity: str = "error"


# report ordering: by kind (this order), then by index
_CODE_ORDER = (
    "shape",
    "dimension",
    "incidence-value",
    "incidence-row",
    "conductance",
    "capacity",
    "flag-value",
    "label",
    "floating-node",
    "unreachable-node",
    "singular-component",
    "unanchored-component",
)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    def __post_init__(self):
        ordered = sorted(
            self.violations,
            key=lambda v: (
                _CODE_ORDER.index(v.code) if v.code in _CODE_ORDER else len(_CODE_ORDER),
                -1 if v.index is None else v.index,
            ),
        )
        object.__setattr__(self, "violations", tuple(ordered))

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def errors(self) -> tuple:
        return tuple(v for v in self.violations if v.severity == "error")

    @property
    def warnings(self) -> tuple:
        return tuple(v for v in self.violations if v.severity == "warning")

    def __bool__(self):
        return bool(self.violations)

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def codes(self) -> list:
        return [v.code for v in self.violations]

    def raise_for_errors(self, exc_type=CircuitError):
        if self.errors:
            msg = "; ".join(f"{v.code}[{v.index}]: {v.message}" for v in self.errors)
            raise exc_type(msg)

    def __str__(self):
        if self.ok:
            return "no violations"
        return "\n".join(
            f"{v.severity}: {v.code} at {v.index}: {v.message}" for v in self.violations
        )


def validate(circuit: ThermalCircuit) -> ValidationReport:
    """Check the structural invariants of a circuit.

    Violations are returned as data; this function never raises.
    """
    out = []
    inc = circuit.incidence
    if inc.ndim != 2:
        return ValidationReport((Violation("shape", None, "incidence must be a 2-D matrix"),))
    n_br, n_nd = inc.shape

    for name, expected in (
        ("conductances", n_br),
        ("temp_source_flags", n_br),
        ("capacities", n_nd),
        ("flow_source_flags", n_nd),
        ("output_flags", n_nd),
    ):
        got = len(getattr(circuit, name))
        if got != expected:
            out.append(
                Violation(
                    "dimension",
                    None,
                    f"{name} has length {got}, expected {expected}",
                )
            )
    for name, expected in (("branch_labels", n_br), ("node_labels", n_nd)):
        got = len(getattr(circuit, name))
        if got != expected:
            out.append(Violation("label", None, f"{name} has length {got}, expected {expected}"))

    for i, row in enumerate(np.asarray(inc, dtype=float)):
        bad = ~np.isin(row, (-1.0, 0.0, 1.0))
        if bad.any():
            out.append(
                Violation("incidence-value", i, f"branch {i} has entries outside {{-1, 0, 1}}")
            )
            continue
        nz = row[row != 0]
        if len(nz) == 0:
            out.append(Violation("incidence-row", i, f"branch {i} touches no node"))
        elif len(nz) > 2:
            out.append(Violation("incidence-row", i, f"branch {i} touches {len(nz)} nodes"))
        elif len(nz) == 2 and nz.sum() != 0:
            out.append(
                Violation(
                    "incidence-row",
                    i,
                    f"branch {i} must leave one node (-1) and enter another (+1)",
                )
            )

    for i, g in enumerate(circuit.conductances):
        if not (np.isfinite(g) and g > 0):
            out.append(Violation("conductance", i, f"conductance {g!r} of branch {i} is not > 0"))
    for j, c in enumerate(circuit.capacities):
        if not (np.isfinite(c) and c >= 0):
            out.append(Violation("capacity", j, f"capacity {c!r} of node {j} is negative"))

    for name in ("temp_source_flags", "flow_source_flags", "output_flags"):
        for k, v in enumerate(getattr(circuit, name)):
            if v not in (0, 1):
                out.append(Violation("flag-value", k, f"{name}[{k}] = {v!r} is not 0 or 1"))

    return ValidationReport(tuple(out))


def check_well_posed(circuit: ThermalCircuit) -> ValidationReport:
    """Detect node sets whose conduction equations are singular.

    Flags (a) nodes without any incident branch and (b) connected
    components that have neither a branch to the reference environment
    nor any capacity.  Capacitive-but-unanchored situations are reported
    with severity ``"warning"``.
    """
    inc = np.asarray(circuit.incidence)
    n_br, n_nd = inc.shape
    out = []

    _, cols = np.nonzero(inc)
    # adjacency from two-node branches
    pairs = [np.flatnonzero(inc[i]) for i in range(n_br)]
    src, dst = [], []
    for p in pairs:
        if len(p) == 2:
            src.append(p[0])
            dst.append(p[1])
    adj = csr_matrix((np.ones(len(src)), (src, dst)), shape=(n_nd, n_nd))
    n_comp, labels = connected_components(adj, directed=False)

    degree = np.bincount(cols, minlength=n_nd)
    anchored = np.zeros(n_comp, dtype=bool)
    for p in pairs:
        if len(p) == 1:
            anchored[labels[p[0]]] = True
    caps = np.asarray(circuit.capacities, dtype=float)

    for j in range(n_nd):
        if degree[j] == 0:
            if caps[j] == 0.0:
                out.append(
                    Violation(
                        "floating-node",
                        j,
                        f"node {circuit.node_labels[j]!r} has no branch and no capacity",
                    )
                )
            else:
                out.append(
                    Violation(
                        "unreachable-node",
                        j,
                        f"node {circuit.node_labels[j]!r} has no branch; its "
                        "temperature is unreachable from any source",
                        severity="warning",
                    )
                )

    for k in range(n_comp):
        members = np.flatnonzero(labels == k)
        if len(members) == 1 and degree[members[0]] == 0:
            continue
        if anchored[k]:
            continue
        first = int(members[0])
        names = ", ".join(circuit.node_labels[m] for m in members[:5])
        if not np.any(caps[members] > 0):
            out.append(
                Violation(
                    "singular-component",
                    first,
                    f"component {{{names}}} has no reference branch and no capacity",
                )
            )
        else:
            out.append(
                Violation(
                    "unanchored-component",
                    first,
                    f"component {{{names}}} has no reference branch; steady state is undefined",
                    severity="warning",
                )
            )
    return ValidationReport(tuple(out))


@dataclass(frozen=True)
class KktSystem:
    """Block system ``[[G^-1, A], [-A^T, C]] [q; θ] = [b; f]``.

    The capacity block is stored as data only; it multiplies the time
    derivative of θ in the dynamic reading of the system.
    """

    g_inv: np.ndarray
    incidence: np.ndarray
    capacity: np.ndarray
    temp_source_flags: np.ndarray
    flow_source_flags: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        nb = self.g_inv.shape[0]
        m = np.zeros((nb + self.capacity.shape[0],) * 2)
        m[:nb, :nb] = self.g_inv
        m[:nb, nb:] = self.incidence
        m[nb:, :nb] = -self.incidence.T
        m[nb:, nb:] = self.capacity
        return m

    @property
    def rhs(self) -> np.ndarray:
        return np.concatenate([self.temp_source_flags, self.flow_source_flags]).astype(float)

    @property
    def shape(self):
        return self.matrix.shape


@dataclass(frozen=True)
class DaeSystem:
    """``C dθ/dt = conduction θ + source_coupling b + f``."""

    conduction: np.ndarray
    source_coupling: np.ndarray
    capacities: np.ndarray
    flow_source_flags: np.ndarray
    temp_source_flags: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.conduction.shape[0]


def build_kkt(circuit: ThermalCircuit) -> KktSystem:
    inc = np.asarray(circuit.incidence, dtype=float)
    return KktSystem(
        g_inv=np.diag(1.0 / circuit.conductances),
        incidence=inc,
        capacity=np.diag(circuit.capacities),
        temp_source_flags=np.asarray(circuit.temp_source_flags),
        flow_source_flags=np.asarray(circuit.flow_source_flags),
    )


def build_dae(circuit: ThermalCircuit) -> DaeSystem:
    inc = np.asarray(circuit.incidence, dtype=float)
    coupling = inc.T * circuit.conductances  # A^T G
    conduction = -(coupling @ inc)
    # products of ±1 with g are exact; only BLAS summation order can break symmetry
    conduction = 0.5 * (conduction + conduction.T)
    return DaeSystem(
        conduction=conduction,
        source_coupling=coupling,
        capacities=np.array(circuit.capacities, dtype=float),
        flow_source_flags=np.asarray(circuit.flow_source_flags),
        temp_source_flags=np.asarray(circuit.temp_source_flags),
    )


def heat_flows(circuit: ThermalCircuit, temperatures, sources: Optional[SourceValues] = None):
    """Branch heat-flow rates ``q = G (b - A θ)`` in W."""
    if sources is None:
        sources = SourceValues.zeros(circuit)
    b, _ = sources.expand(circuit.temp_source_flags, circuit.flow_source_flags)
    e = b - np.asarray(circuit.incidence, dtype=float) @ np.asarray(temperatures, dtype=float)
    return circuit.conductances * e
