"""Assembling elementary circuits into one global circuit.

Nodes declared common to several circuits are merged; branches are never
merged.  The global circuit is obtained from the block-diagonal KKT matrix
of the elementary circuits through the disassembling matrix ``A_d``::

    u_d = A_d u,    K = A_d^T K_d A_d,    a = A_d^T a_d

and then partitioned back into ``G^-1``, ``A`` and ``C``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg, sparse

from .circuit import ThermalCircuit, build_kkt
from .exceptions import AssemblyError, SelfLoopError

__all__ = [
    "ConnectionSet",
    "ConnectionIndexError",
    "AssemblyPlan",
    "DisassemblyMatrix",
    "plan_assembly",
    "build_disassembly_matrix",
    "assemble",
]

# above this many disassembled rows the Galerkin product goes sparse
_DENSE_LIMIT = 400


class ConnectionIndexError(AssemblyError, IndexError):
    pass


@dataclass(frozen=True)
class ConnectionSet:
    """Node identifications ``((circuit i, node k), (circuit j, node l))``.

    Indices are 0-based.  Merging two distinct nodes of the same circuit is
    rejected unless ``allow_internal_merge`` is set.
    """

    pairs: tuple = ()
    allow_internal_merge: bool = False

    def __post_init__(self):
        norm = tuple(
            ((int(a[0]), int(a[1])), (int(b[0]), int(b[1]))) for a, b in self.pairs
        )
        object.__setattr__(self, "pairs", norm)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def _as_connections(connections) -> ConnectionSet:
    if connections is None:
        return ConnectionSet()
    if isinstance(connections, ConnectionSet):
        return connections
    return ConnectionSet(tuple(connections))


@dataclass(frozen=True)
class AssemblyPlan:
    """Global numbering of branches and nodes.

    Attributes
    ----------
    n_branches, n_nodes : int
        Size of the assembled circuit.
    branch_map : tuple of ndarray
        ``branch_map[i][k]`` is the global index of local branch ``k`` of
        circuit ``i``.
    node_map : tuple of ndarray
        Same for nodes.
    classes : tuple of tuple
        ``classes[g]`` lists the ``(circuit, local node)`` pairs merged into
        global node ``g`` in scan order.
    """

    n_branches: int
    n_nodes: int
    branch_map: tuple
    node_map: tuple
    classes: tuple

    def multiplicity(self) -> np.ndarray:
        return np.array([len(c) for c in self.classes])


@dataclass(frozen=True)
class DisassemblyMatrix:
    """0/1 matrix mapping ``[q; θ]`` (assembled) to stacked ``[q_1; θ_1; q_2; ...]``."""

    matrix: np.ndarray
    row_labels: tuple
    n_branches: int
    n_nodes: int

    @property
    def shape(self):
        return self.matrix.shape

    def disassemble(self, u) -> np.ndarray:
        return self.matrix @ np.asarray(u)

    def gather(self, u_d) -> np.ndarray:
        """``A_d^T u_d``: sums the disassembled entries of each assembled variable."""
        return self.matrix.T @ np.asarray(u_d)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller id as root so the representative is stable
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def plan_assembly(circuits: Sequence[ThermalCircuit], connections=None) -> AssemblyPlan:
    """Number the branches and nodes of the assembled circuit.

    Branches are numbered by concatenation in circuit order.  Nodes are
    numbered in order of first appearance when scanning the circuits in
    order, so that a node merged into an earlier class takes that class's
    number.

    Raises
    ------
    ConnectionIndexError
        If a connection refers to a circuit or node that does not exist.
    AssemblyError
        If two distinct nodes of one circuit would be merged and the
        connection set does not allow it.
    """
    connections = _as_connections(connections)
    circuits = list(circuits)
    sizes = [c.n_nodes for c in circuits]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    uf = _UnionFind(int(offsets[-1]))

    for a, b in connections:
        for ci, nk in (a, b):
            if not 0 <= ci < len(circuits):
                raise ConnectionIndexError(f"connection refers to circuit {ci}, have {len(circuits)}")
            if not 0 <= nk < sizes[ci]:
                raise ConnectionIndexError(
                    f"connection refers to node {nk} of circuit {ci}, which has {sizes[ci]} nodes"
                )
        if a[0] == b[0] and a[1] != b[1] and not connections.allow_internal_merge:
            raise AssemblyError(
                f"connection {a} ≡ {b} merges two nodes of the same circuit"
            )
        uf.union(offsets[a[0]] + a[1], offsets[b[0]] + b[1])

    root_to_global = {}
    classes = []
    node_map = []
    for ci, n in enumerate(sizes):
        local = np.empty(n, dtype=np.int64)
        for k in range(n):
            root = uf.find(offsets[ci] + k)
            if root not in root_to_global:
                root_to_global[root] = len(classes)
                classes.append([])
            g = root_to_global[root]
            classes[g].append((ci, k))
            local[k] = g
        node_map.append(local)

    if not connections.allow_internal_merge:
        for g, members in enumerate(classes):
            owners = [ci for ci, _ in members]
            if len(owners) != len(set(owners)):
                raise AssemblyError(
                    f"connections transitively merge distinct nodes of one circuit into global node {g}"
                )

    branch_map = []
    start = 0
    for c in circuits:
        branch_map.append(np.arange(start, start + c.n_branches, dtype=np.int64))
        start += c.n_branches

    return AssemblyPlan(
        n_branches=start,
        n_nodes=len(classes),
        branch_map=tuple(branch_map),
        node_map=tuple(node_map),
        classes=tuple(tuple(m) for m in classes),
    )


def build_disassembly_matrix(plan: AssemblyPlan, circuits: Sequence[ThermalCircuit]) -> DisassemblyMatrix:
    """The 0/1 matrix ``A_d`` with ``u_d = A_d u``.

    Rows follow the stacked elementary variables ``[q_1; θ_1; q_2; θ_2; ...]``,
    columns the assembled ``[q; θ]``.
    """
    n_cols = plan.n_branches + plan.n_nodes
    rows, cols, labels = [], [], []
    for ci, c in enumerate(circuits):
        for k in range(c.n_branches):
            rows.append(len(rows))
            cols.append(plan.branch_map[ci][k])
            labels.append(("q", ci, k))
        for k in range(c.n_nodes):
            rows.append(len(rows))
            cols.append(plan.n_branches + plan.node_map[ci][k])
            labels.append(("θ", ci, k))
    mat = np.zeros((len(rows), n_cols), dtype=np.int64)
    mat[rows, cols] = 1
    return DisassemblyMatrix(mat, tuple(labels), plan.n_branches, plan.n_nodes)


def _check_self_loops(plan: AssemblyPlan, circuits, names):
    for ci, c in enumerate(circuits):
        inc = np.asarray(c.incidence)
        for k in range(c.n_branches):
            ends = np.flatnonzero(inc[k])
            if len(ends) == 2 and plan.node_map[ci][ends[0]] == plan.node_map[ci][ends[1]]:
                raise SelfLoopError(
                    f"branch {names[ci]}.{c.branch_labels[k]} would connect global node "
                    f"{plan.node_map[ci][ends[0]]} to itself"
                )


def assemble(
    circuits: Sequence[ThermalCircuit],
    connections=None,
    names: Optional[Sequence[str]] = None,
) -> ThermalCircuit:
    """Assemble elementary circuits into one circuit.

    Parameters
    ----------
    circuits : sequence of ThermalCircuit
    connections : ConnectionSet or iterable of node pairs, optional
    names : sequence of str, optional
        Circuit names; assembled labels are prefixed with ``"<name>."``.
        Defaults to ``c0, c1, ...`` for several circuits; a single unnamed
        circuit keeps its labels.  Labels of merged nodes are joined with
        ``"|"``.

    Returns
    -------
    ThermalCircuit
        Capacities of merged nodes are summed, flow-source and output flags
        are OR-ed, branch arrays are stacked.
    """
    circuits = list(circuits)
    if not circuits:
        raise AssemblyError("no circuits to assemble")
    plan = plan_assembly(circuits, connections)
    if names is None and len(circuits) > 1:
        names = [f"c{i}" for i in range(len(circuits))]
    prefixes = [f"{n}." for n in names] if names is not None else [""]
    _check_self_loops(plan, circuits, names if names is not None else ["c0"])

    ad = build_disassembly_matrix(plan, circuits).matrix.astype(float)
    kkts = [build_kkt(c) for c in circuits]
    if ad.shape[0] > _DENSE_LIMIT:
        ad = sparse.csr_matrix(ad)
        k_d = sparse.block_diag([sparse.csr_matrix(k.matrix) for k in kkts], format="csr")
    else:
        k_d = linalg.block_diag(*[k.matrix for k in kkts])
    a_d = np.concatenate([k.rhs for k in kkts])
    y_d = np.concatenate(
        [np.concatenate([np.zeros(c.n_branches), c.output_flags]) for c in circuits]
    )

    g_d = np.concatenate(
        [np.concatenate([c.conductances, np.zeros(c.n_nodes)]) for c in circuits]
    )

    k = ad.T @ k_d @ ad
    if sparse.issparse(k):
        k = k.toarray()
    a = ad.T @ a_d
    y = ad.T @ y_d

    nb = plan.n_branches
    # branches are never merged, so gathering G directly is exact where
    # inverting the G^-1 block would not round-trip bit for bit
    conductances = (ad.T @ g_d)[:nb]
    if not np.allclose(np.diag(k[:nb, :nb]) * conductances, 1.0, rtol=1e-12):
        raise AssemblyError("inconsistent G^-1 block in the assembled KKT matrix")
    incidence = np.rint(k[:nb, nb:]).astype(np.int64)
    capacities = np.diag(k[nb:, nb:]).copy()

    branch_labels = [p + lbl for p, c in zip(prefixes, circuits) for lbl in c.branch_labels]
    node_labels = [
        "|".join(prefixes[ci] + circuits[ci].node_labels[k_] for ci, k_ in members)
        for members in plan.classes
    ]
    return ThermalCircuit(
        incidence=incidence,
        conductances=conductances,
        capacities=capacities,
        temp_source_flags=(a[:nb] > 0).astype(np.int64),
        flow_source_flags=(a[nb:] > 0).astype(np.int64),
        output_flags=(y[nb:] > 0).astype(np.int64),
        branch_labels=branch_labels,
        node_labels=node_labels,
    )
