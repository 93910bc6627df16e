import sys

import numpy as np
import pytest

from thermocircuit.circuit import ThermalCircuit


def random_circuit(rng, max_nodes=12, max_branches=20, massless_fraction=0.4):
    """Random connected circuit anchored to the reference by 1-3 branches.

    Every component is resistively anchored, so it is well posed whatever
    the massless subset.  At least one node keeps a capacity.
    """
    n = int(rng.integers(2, max_nodes + 1))
    n_ref = int(rng.integers(1, 4))
    edges = [(int(rng.integers(0, j)), j) for j in range(1, n)]  # spanning tree
    n_extra = int(rng.integers(0, max(0, max_branches - len(edges) - n_ref) + 1))
    for _ in range(n_extra):
        a, b = rng.choice(n, size=2, replace=False)
        edges.append((int(a), int(b)))
    rows = []
    for a, b in edges:
        row = np.zeros(n, dtype=int)
        s = 1 if rng.random() < 0.5 else -1
        row[a], row[b] = -s, s
        rows.append(row)
    for node in rng.choice(n, size=n_ref):
        row = np.zeros(n, dtype=int)
        row[node] = 1
        rows.append(row)
    m = len(rows)
    caps = 10 ** rng.uniform(3, 6, n)
    massless = rng.random(n) < massless_fraction
    if massless.all():
        massless[rng.integers(n)] = False
    caps[massless] = 0.0
    order = rng.permutation(m)
    inc = np.array(rows)[order]
    tflags = (rng.random(m) < 0.4).astype(int)
    return ThermalCircuit(
        incidence=inc,
        conductances=10 ** rng.uniform(-1, 2, m),
        capacities=caps,
        temp_source_flags=tflags,
        flow_source_flags=(rng.random(n) < 0.4).astype(int),
        output_flags=np.ones(n, dtype=int),
    )


def single_rc(g=2.0, cap=1000.0):
    """Reference --g--> node with capacity C; the branch carries the source T."""
    return ThermalCircuit(
        incidence=[[1]],
        conductances=[g],
        capacities=[cap],
        temp_source_flags=[1],
        output_flags=[1],
    )


def divider(g1=3.0, g2=1.0, cap=500.0):
    """T --g1--> massless m --g2--> capacitive c; flow source on m, output m."""
    return ThermalCircuit(
        incidence=[[1, 0], [-1, 1]],
        conductances=[g1, g2],
        capacities=[0.0, cap],
        temp_source_flags=[1, 0],
        flow_source_flags=[1, 0],
        output_flags=[1, 0],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
