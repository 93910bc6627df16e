"""State-space extraction by elimination of massless nodes.

Nodes are split into massless (capacity exactly 0) and capacitive ones.
With the conduction and source-coupling matrices permuted accordingly,

    [0   0 ] [dθ0/dt]   [K11 K12] [θ0]   [Kb1]     [I11  0 ] [f0]
    [0  C_C] [dθC/dt] = [K21 K22] [θC] + [Kb2] b + [ 0  I22] [fC]

the first block row is algebraic and gives the massless temperatures

    θ0 = -K11^-1 (K12 θC + Kb1 b + f0),

which substituted into the second row yields ``dθC/dt = A_s θC + B_s u``
with ``u = [b; f0; fC]`` restricted to the flagged sources.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg

from .circuit import DaeSystem, SourceValues, ThermalCircuit
from .exceptions import NoStatesError, SingularityError

__all__ = [
    "Partition",
    "StateSpace",
    "StiffnessWarning",
    "partition_capacities",
    "extract_state_space",
    "reconstruct_massless",
]

# capacities this far below the largest one make the extracted model stiff
NEAR_ZERO_CAPACITY_RATIO = 1e-9


class StiffnessWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class Partition:
    """Massless / capacitive split of a DAE system.

    ``permutation`` lists massless nodes first, then capacitive nodes, each
    group in increasing node order.
    """

    permutation: np.ndarray
    massless: np.ndarray
    capacitive: np.ndarray
    k11: np.ndarray
    k12: np.ndarray
    k21: np.ndarray
    k22: np.ndarray
    kb1: np.ndarray
    kb2: np.ndarray
    c_c: np.ndarray
    temp_source_flags: np.ndarray
    flow_source_flags: np.ndarray

    @property
    def n_massless(self) -> int:
        return len(self.massless)

    @property
    def n_capacitive(self) -> int:
        return len(self.capacitive)

    @cached_property
    def _k11_factor(self):
        if self.n_massless == 0:
            return None
        # -K11 is a principal block of a weighted graph Laplacian plus
        # reference terms: SPD exactly when every massless node is anchored
        try:
            return linalg.cho_factor(-self.k11, check_finite=True)
        except linalg.LinAlgError as exc:
            raise SingularityError(
                "massless sub-network is not resistively anchored "
                "(K11 is singular)"
            ) from exc

    def solve_k11(self, rhs) -> np.ndarray:
        """Return ``K11^-1 rhs``."""
        rhs = np.asarray(rhs, dtype=float)
        if self.n_massless == 0:
            return np.zeros((0,) + rhs.shape[1:])
        return -linalg.cho_solve(self._k11_factor, rhs)


@dataclass(frozen=True, eq=False)
class StateSpace:
    """``dθC/dt = A θC + B u``,  ``y = C θC + D u``.

    Attributes
    ----------
    A, B, C, D : ndarray
        State, input, output and feed-through matrices (SI units, time in s).
    state_nodes : ndarray
        Global node ids of the states (capacitive nodes, increasing).
    input_branches : ndarray
        Flagged temperature-source branch ids (first block of ``u``).
    input_massless_nodes, input_capacitive_nodes : ndarray
        Flagged flow-source node ids on massless / capacitive nodes.
    output_nodes : ndarray
        Flagged output node ids in increasing order.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    state_nodes: np.ndarray
    input_branches: np.ndarray
    input_massless_nodes: np.ndarray
    input_capacitive_nodes: np.ndarray
    output_nodes: np.ndarray
    partition: Partition
    state_labels: tuple = ()
    input_labels: tuple = ()
    output_labels: tuple = ()

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]

    @property
    def input_flow_nodes(self) -> np.ndarray:
        return np.concatenate([self.input_massless_nodes, self.input_capacitive_nodes])

    def input_vector(self, sources: SourceValues) -> np.ndarray:
        """Arrange source magnitudes in the ``u`` ordering of ``B``."""
        b, f = sources.expand(
            self.partition.temp_source_flags, self.partition.flow_source_flags
        )
        return np.concatenate([b[self.input_branches], f[self.input_flow_nodes]])

    def source_values(self, u) -> SourceValues:
        """Inverse of :meth:`input_vector`."""
        u = np.asarray(u, dtype=float)
        nb = len(self.input_branches)
        f_nodes = self.input_flow_nodes
        order = np.argsort(f_nodes, kind="stable")
        return SourceValues(u[:nb], u[nb:][order])


def partition_capacities(dae: DaeSystem) -> Partition:
    """Split nodes into massless (capacity == 0.0) and capacitive."""
    caps = np.asarray(dae.capacities, dtype=float)
    massless = np.flatnonzero(caps == 0.0)
    capacitive = np.flatnonzero(caps != 0.0)
    perm = np.concatenate([massless, capacitive])
    k = dae.conduction
    kb = dae.source_coupling
    m0 = massless
    mc = capacitive
    return Partition(
        permutation=perm,
        massless=m0,
        capacitive=mc,
        k11=k[np.ix_(m0, m0)],
        k12=k[np.ix_(m0, mc)],
        k21=k[np.ix_(mc, m0)],
        k22=k[np.ix_(mc, mc)],
        kb1=kb[m0, :],
        kb2=kb[mc, :],
        c_c=caps[mc],
        temp_source_flags=np.asarray(dae.temp_source_flags),
        flow_source_flags=np.asarray(dae.flow_source_flags),
    )


def extract_state_space(dae: DaeSystem, circuit: ThermalCircuit = None) -> StateSpace:
    """Eliminate massless nodes and return the state-space model.

    Parameters
    ----------
    dae : DaeSystem
    circuit : ThermalCircuit, optional
        Source of the output flags and labels.  Without it, every node is
        treated as unflagged for output and labels are generic.

    Raises
    ------
    NoStatesError
        If no node has a capacity.
    SingularityError
        If ``K11`` is singular.
    """
    part = partition_capacities(dae)
    if part.n_capacitive == 0:
        raise NoStatesError("circuit has no node with nonzero capacity")

    caps = part.c_c
    if np.any(caps < NEAR_ZERO_CAPACITY_RATIO * caps.max()):
        ratio = caps.max() / caps.min()
        warnings.warn(
            f"capacities span a ratio of {ratio:.3g}; extracted model will be stiff. "
            "Set capacities to exactly 0 to eliminate those nodes.",
            StiffnessWarning,
            stacklevel=2,
        )

    n0 = part.n_massless
    # one Cholesky factor of -K11, reused for K12, Kb1 and I11
    x12 = part.solve_k11(part.k12)            # K11^-1 K12
    xb1 = part.solve_k11(part.kb1)            # K11^-1 Kb1
    x11 = part.solve_k11(np.eye(n0))          # K11^-1

    inv_c = (1.0 / caps)[:, None]
    a_s = inv_c * (part.k22 - part.k21 @ x12)
    b_temp = inv_c * (part.kb2 - part.k21 @ xb1)
    b_flow0 = inv_c * (-part.k21 @ x11)
    b_flowc = np.diag(1.0 / caps)

    tflags = np.asarray(dae.temp_source_flags)
    fflags = np.asarray(dae.flow_source_flags)
    in_br = np.flatnonzero(tflags)
    in_f0 = part.massless[np.flatnonzero(fflags[part.massless])]
    in_fc = part.capacitive[np.flatnonzero(fflags[part.capacitive])]
    sel_f0 = np.flatnonzero(fflags[part.massless])
    sel_fc = np.flatnonzero(fflags[part.capacitive])

    b_s = np.hstack([b_temp[:, in_br], b_flow0[:, sel_f0], b_flowc[:, sel_fc]])

    if circuit is not None:
        out_nodes = np.flatnonzero(circuit.output_flags)
    else:
        out_nodes = np.zeros(0, dtype=np.int64)

    n_in = b_s.shape[1]
    c_rows, d_rows = [], []
    pos_c = {int(n): i for i, n in enumerate(part.capacitive)}
    pos_0 = {int(n): i for i, n in enumerate(part.massless)}
    # feed-through from θ0 = -K11^-1 (K12 θC + [Kb1 I11 0] u)
    d0_full = -np.hstack(
        [xb1[:, in_br], x11[:, sel_f0], np.zeros((n0, len(sel_fc)))]
    )
    for node in out_nodes:
        node = int(node)
        if node in pos_c:
            row = np.zeros(part.n_capacitive)
            row[pos_c[node]] = 1.0
            c_rows.append(row)
            d_rows.append(np.zeros(n_in))
        else:
            i = pos_0[node]
            c_rows.append(-x12[i])
            d_rows.append(d0_full[i])
    c_s = np.array(c_rows).reshape(len(out_nodes), part.n_capacitive)
    d_s = np.array(d_rows).reshape(len(out_nodes), n_in)

    if circuit is not None:
        node_labels = circuit.node_labels
        branch_labels = circuit.branch_labels
    else:
        node_labels = tuple(f"θ{j}" for j in range(dae.n_nodes))
        branch_labels = tuple(f"q{i}" for i in range(dae.source_coupling.shape[1]))

    return StateSpace(
        A=a_s,
        B=b_s,
        C=c_s,
        D=d_s,
        state_nodes=part.capacitive,
        input_branches=in_br,
        input_massless_nodes=in_f0,
        input_capacitive_nodes=in_fc,
        output_nodes=out_nodes,
        partition=part,
        state_labels=tuple(node_labels[n] for n in part.capacitive),
        input_labels=tuple(branch_labels[i] for i in in_br)
        + tuple(node_labels[n] for n in np.concatenate([in_f0, in_fc])),
        output_labels=tuple(node_labels[n] for n in out_nodes),
    )


def reconstruct_massless(partition: Partition, theta_c, inputs: SourceValues) -> np.ndarray:
    """Temperatures of the massless nodes from the states and the sources.

    Returns ``θ0 = -K11^-1 (K12 θC + Kb1 b + f0)`` in the order of
    ``partition.massless``.
    """
    b, f = inputs.expand(partition.temp_source_flags, partition.flow_source_flags)
    theta_c = np.asarray(theta_c, dtype=float)
    rhs = partition.k12 @ theta_c + partition.kb1 @ b + f[partition.massless]
    return -partition.solve_k11(rhs)
