import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_circuit
from thermocircuit.circuit import (
    SourceValues,
    ThermalCircuit,
    build_dae,
    build_kkt,
    check_well_posed,
    heat_flows,
    validate,
)
from thermocircuit.datasets import figure1, figure1_expected
from thermocircuit.exceptions import CircuitError
from thermocircuit.simulate import steady_state


def test_figure1_tc1_is_valid():
    tc1 = figure1()[0][0]
    assert validate(tc1).ok
    assert np.array_equal(tc1.incidence, [[1, 0], [-1, 1]])


def test_conductance_count_mismatch_is_reported():
    c = ThermalCircuit(incidence=[[1, 0], [-1, 1]], conductances=[1.0, 2.0, 3.0], capacities=[1.0, 0.0])
    rep = validate(c)
    assert "dimension" in rep.codes()
    assert not rep.ok


def test_negative_conductance_is_reported_with_index():
    c = ThermalCircuit(incidence=[[1, 0], [-1, 1]], conductances=[1.0, -1.0], capacities=[1.0, 0.0])
    rep = validate(c)
    assert [(v.code, v.index) for v in rep] == [("conductance", 1)]


def test_other_structural_violations():
    c = ThermalCircuit(
        incidence=[[2, 0], [1, 1], [0, 0]],
        conductances=[1.0, 1.0, 1.0],
        capacities=[-1.0, 0.0],
        flow_source_flags=[0, 3],
    )
    codes = validate(c).codes()
    # deterministic ordering by kind then index
    assert codes == ["incidence-value", "incidence-row", "incidence-row", "capacity", "flag-value"]


def test_validate_is_idempotent_and_pure():
    c = random_circuit(np.random.default_rng(1))
    before = c.incidence.copy()
    assert validate(c) == validate(c)
    assert np.array_equal(c.incidence, before)
    with pytest.raises(ValueError):
        c.incidence[0, 0] = 5


def test_assembled_figure1_is_well_posed():
    from thermocircuit.assembly import assemble

    circuits, conn = figure1()
    assert check_well_posed(assemble(circuits, conn)).ok


def test_isolated_node_classification():
    capacitive = ThermalCircuit(incidence=np.zeros((0, 1)), conductances=[], capacities=[100.0])
    rep = check_well_posed(capacitive)
    assert rep.codes() == ["unreachable-node"] and not rep.errors
    massless = capacitive.replace(capacities=[0.0])
    assert check_well_posed(massless).codes() == ["floating-node"]


def test_unanchored_massless_pair_is_singular():
    c = ThermalCircuit(incidence=[[-1, 1]], conductances=[2.0], capacities=[0.0, 0.0])
    rep = check_well_posed(c)
    assert rep.codes() == ["singular-component"]
    # the 2x2 conduction matrix is rank one
    assert np.linalg.matrix_rank(build_dae(c).conduction) == 1
    with pytest.raises(CircuitError):
        rep.raise_for_errors()


def test_kkt_blocks_of_tc2():
    tc2 = figure1()[0][1]
    g21 = tc2.conductances[0]
    k = build_kkt(tc2)
    m = k.matrix
    assert m.shape == (3, 3)
    assert m[0, 0] == 1.0 / g21
    assert np.array_equal(m[0, 1:], [-1, 1])
    assert np.array_equal(m[1:, 0], [1, -1])
    assert np.array_equal(np.diag(m[1:, 1:]), tc2.capacities)


def test_kkt_smallest_circuit():
    c = ThermalCircuit(incidence=[[1]], conductances=[4.0], capacities=[10.0], temp_source_flags=[1])
    k = build_kkt(c)
    assert np.array_equal(k.matrix, [[0.25, 1.0], [-1.0, 10.0]])
    assert np.array_equal(k.rhs, [1, 0])


def test_dae_scalar_products():
    g = 3.5
    d = build_dae(ThermalCircuit(incidence=[[1]], conductances=[g], capacities=[1.0]))
    assert np.array_equal(d.conduction, [[-g]])
    assert np.array_equal(d.source_coupling, [[g]])


def test_dae_series_wall():
    g1, g2 = 2.0, 5.0
    d = build_dae(ThermalCircuit(incidence=[[1, 0], [-1, 1]], conductances=[g1, g2], capacities=[1.0, 1.0]))
    assert np.array_equal(d.conduction, [[-(g1 + g2), g2], [g2, -g2]])


def test_dae_figure1_hand_entries():
    from thermocircuit.assembly import assemble

    circuits, conn = figure1()
    v = figure1_expected()
    g11, g12, g21, gv, gc = v["conductances"]
    k = build_dae(assemble(circuits, conn)).conduction
    assert k[0, 0] == -(g11 + g12)
    assert k[2, 2] == -(g21 + gv + gc)
    assert k[0, 1] == g12 and k[1, 2] == g21 and k[0, 2] == 0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_conduction_symmetric_negative_semidefinite(seed):
    c = random_circuit(np.random.default_rng(seed))
    k = build_dae(c).conduction
    assert np.array_equal(k, k.T)
    lam = np.linalg.eigvalsh(k)
    assert lam.max() <= 1e-10 * np.abs(lam).max()
    # anchored components make it definite
    np.linalg.cholesky(-k)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_steady_state_heat_balance(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng)
    src = SourceValues(
        rng.normal(20, 5, len(c.temp_source_branches)), rng.normal(0, 100, len(c.flow_source_nodes))
    )
    theta = steady_state(build_dae(c), src)
    q = heat_flows(c, theta, src)
    _, f = src.expand(c.temp_source_flags, c.flow_source_flags)
    residual = c.incidence.T @ q + f
    scale = np.abs(c.incidence.T).dot(np.abs(q)).max() + np.abs(f).max() + 1e-300
    assert np.abs(residual).max() <= 1e-10 * scale


def test_source_values_length_checked():
    c = figure1()[0][0]
    with pytest.raises(CircuitError):
        SourceValues([1.0, 2.0], [0.0]).expand(c.temp_source_flags, c.flow_source_flags)


def test_circuit_equality_and_replace():
    a = figure1()[0][0]
    b = figure1()[0][0]
    assert a == b
    assert a.replace(conductances=[1.0, 1.0]) != a
    assert a.node_labels == ("θ1", "θ2")
