import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import divider, random_circuit
from thermocircuit.assembly import assemble
from thermocircuit.circuit import SourceValues, ThermalCircuit, build_dae
from thermocircuit.datasets import figure1
from thermocircuit.exceptions import NoStatesError, SingularityError
from thermocircuit.simulate import steady_state
from thermocircuit.statespace import (
    StiffnessWarning,
    extract_state_space,
    partition_capacities,
    reconstruct_massless,
)


def figure1_circuit():
    circuits, conn = figure1()
    return assemble(circuits, conn)


def chain(g1=3.0, g2=1.0, c2=500.0):
    return ThermalCircuit(
        incidence=[[1, 0], [-1, 1]],
        conductances=[g1, g2],
        capacities=[0.0, c2],
        temp_source_flags=[1, 0],
        output_flags=[1, 1],
    )


def test_partition_figure1():
    p = partition_capacities(build_dae(figure1_circuit()))
    assert list(p.massless) == [1]
    assert list(p.capacitive) == [0, 2]
    assert list(p.permutation) == [1, 0, 2]
    assert np.array_equal(p.k12, p.k21.T)


def test_partition_all_capacitive():
    c = figure1_circuit().replace(capacities=[1.0, 2.0, 3.0])
    p = partition_capacities(build_dae(c))
    assert p.k11.shape == (0, 0) and p.k12.shape == (0, 3) and p.k21.shape == (3, 0)


def test_no_states():
    c = figure1_circuit().replace(capacities=[0.0, 0.0, 0.0])
    assert partition_capacities(build_dae(c)).n_capacitive == 0
    with pytest.raises(NoStatesError):
        extract_state_space(build_dae(c), c)


def test_chain_elimination():
    g1, g2, c2 = 3.0, 1.0, 500.0
    ss = extract_state_space(build_dae(chain(g1, g2, c2)), chain(g1, g2, c2))
    g = g1 * g2 / (g1 + g2)
    assert np.allclose(ss.A, [[-g / c2]], rtol=1e-15)
    assert np.allclose(ss.B, [[g / c2]], rtol=1e-15)


def test_chain_massless_output_divider():
    g1, g2 = 3.0, 1.0
    c = chain(g1, g2)
    ss = extract_state_space(build_dae(c), c)
    t = 1.0
    x = np.linalg.solve(ss.A, -ss.B @ [t])
    y = ss.C @ x + ss.D @ [t]
    # at steady state the capacitive node sits at T, so the divider gives T as well;
    # with the state pinned at 0 the massless node is g1/(g1+g2) T
    assert np.allclose(y, [t, t])
    y0 = ss.C @ [0.0] + ss.D @ [t]
    assert np.isclose(y0[0], g1 / (g1 + g2) * t, rtol=1e-15)
    assert y0[1] == 0.0


def test_all_capacitive_extraction():
    c = figure1_circuit().replace(capacities=[1.0, 2.0, 3.0], output_flags=[1, 1, 1])
    dae = build_dae(c)
    ss = extract_state_space(dae, c)
    caps = np.array([1.0, 2.0, 3.0])
    assert np.allclose(ss.A, dae.conduction / caps[:, None], rtol=1e-15)
    b_cols = dae.source_coupling[:, np.flatnonzero(c.temp_source_flags)] / caps[:, None]
    f_cols = np.diag(1 / caps)[:, np.flatnonzero(c.flow_source_flags)]
    assert np.allclose(ss.B, np.hstack([b_cols, f_cols]), rtol=1e-15)
    assert np.all(ss.D == 0)
    assert np.array_equal(ss.C, np.eye(3))


def test_unanchored_massless_subnetwork():
    c = ThermalCircuit(
        incidence=[[1, 0, 0], [0, -1, 1]],
        conductances=[1.0, 1.0],
        capacities=[1.0, 0.0, 0.0],
    )
    with pytest.raises(SingularityError) as exc:
        extract_state_space(build_dae(c), c)
    assert "[statespace]" in str(exc.value)


def test_near_zero_capacity_warns_and_is_kept():
    c = chain().replace(capacities=[1e-12, 500.0])
    with pytest.warns(StiffnessWarning):
        ss = extract_state_space(build_dae(c), c)
    assert ss.n_states == 2


def test_input_ordering_and_labels():
    c = figure1_circuit().replace(flow_source_flags=[1, 1, 1], output_flags=[1, 1, 1])
    ss = extract_state_space(build_dae(c), c)
    assert list(ss.input_branches) == [0, 3]
    assert list(ss.input_massless_nodes) == [1]
    assert list(ss.input_capacitive_nodes) == [0, 2]
    assert ss.B.shape == (2, 5)
    assert list(ss.output_nodes) == [0, 1, 2]
    assert ss.input_labels == ("c0.q1", "c2.q1", "c0.θ2|c1.θ1", "c0.θ1", "c1.θ2|c2.θ1")
    src = SourceValues([1.0, 2.0], [3.0, 4.0, 5.0])
    u = ss.input_vector(src)
    assert np.array_equal(u, [1.0, 2.0, 4.0, 3.0, 5.0])
    back = ss.source_values(u)
    assert np.array_equal(back.branch_temps, src.branch_temps)
    assert np.array_equal(back.node_flows, src.node_flows)


def test_reconstruct_massless_chain_and_zero():
    g1, g2 = 3.0, 1.0
    c = chain(g1, g2)
    ss = extract_state_space(build_dae(c), c)
    t = 2.0
    theta0 = reconstruct_massless(ss.partition, [t], SourceValues([t], []))
    assert np.isclose(theta0[0], t)
    theta0 = reconstruct_massless(ss.partition, [0.0], SourceValues([t], []))
    assert np.isclose(theta0[0], g1 / (g1 + g2) * t)
    assert np.array_equal(reconstruct_massless(ss.partition, [0.0], SourceValues([0.0], [])), [0.0])


def test_reconstruct_massless_figure1_matches_dense_solve():
    c = figure1_circuit()
    dae = build_dae(c)
    ss = extract_state_space(dae, c)
    src = SourceValues([1.0, 1.0], [1.0, 1.0])
    theta = steady_state(dae, src)
    theta0 = reconstruct_massless(ss.partition, theta[[0, 2]], src)
    assert np.isclose(theta0[0], theta[1], rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_massless_rows_have_zero_residual(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng)
    dae = build_dae(c)
    ss = extract_state_space(dae, c)
    src = SourceValues(rng.normal(0, 10, len(c.temp_source_branches)), rng.normal(0, 50, len(c.flow_source_nodes)))
    theta_c = rng.normal(15, 5, ss.n_states)
    theta = np.zeros(c.n_nodes)
    theta[ss.partition.capacitive] = theta_c
    theta[ss.partition.massless] = reconstruct_massless(ss.partition, theta_c, src)
    b, f = src.expand(c.temp_source_flags, c.flow_source_flags)
    terms = [dae.conduction * theta, dae.source_coupling * b, f[:, None]]
    residual = (dae.conduction @ theta + dae.source_coupling @ b + f)[ss.partition.massless]
    scale = max(np.abs(t).sum(axis=1).max() for t in terms) + 1e-300
    assert np.all(np.abs(residual) <= 1e-10 * scale)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_steady_state_consistency(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng)
    dae = build_dae(c)
    ss = extract_state_space(dae, c)
    src = SourceValues(rng.normal(0, 10, len(c.temp_source_branches)), rng.normal(0, 50, len(c.flow_source_nodes)))
    x = -np.linalg.solve(ss.A, ss.B @ ss.input_vector(src))
    dense = steady_state(dae, src)[ss.state_nodes]
    assert np.allclose(x, dense, rtol=1e-9, atol=1e-9 * (np.abs(dense).max() + 1e-300))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_shapes_and_capacitive_feedthrough(seed):
    c = random_circuit(np.random.default_rng(seed))
    ss = extract_state_space(build_dae(c), c)
    n_in = int(c.temp_source_flags.sum() + c.flow_source_flags.sum())
    assert ss.A.shape == (ss.n_states, ss.n_states)
    assert ss.n_states == int(np.count_nonzero(c.capacities))
    assert ss.B.shape == (ss.n_states, n_in)
    assert ss.C.shape[0] == ss.D.shape[0] == int(c.output_flags.sum())
    cap_rows = np.isin(ss.output_nodes, ss.state_nodes)
    assert np.all(ss.D[cap_rows] == 0.0)


def test_no_warning_on_regular_circuit():
    c = divider()
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        extract_state_space(build_dae(c), c)
