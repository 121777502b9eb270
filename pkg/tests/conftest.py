import sys

import numpy as np
import pytest

from multmodel import _kernels, oracle
from multmodel.engine import run_query
from multmodel.builders import DecisionGraphSpec, from_decision_graph, from_table
from multmodel.lattice import Domains, canonicalize

# A=0 B=1 C=2 D=3, rows in A,B,C,D order with D fastest
CSI_TABLE = np.array([
    0.4, 0.4, 0.4, 0.4,
    0.8, 0.8, 0.8, 0.8,
    0.1, 0.1, 0.032, 0.08,
    0.1, 0.1, 0.65, 0.08,
])

CSI_PATHS = [
    ({0: [0], 1: [0]}, 0.4),
    ({0: [0], 1: [1]}, 0.8),
    ({0: [1], 2: [0]}, 0.1),
    ({0: [1], 2: [1], 3: [1]}, 0.08),
    ({0: [1], 2: [1], 3: [0], 1: [0]}, 0.032),
    ({0: [1], 2: [1], 3: [0], 1: [1]}, 0.65),
]


@pytest.fixture
def csi_domains():
    return Domains((2, 2, 2, 2))


@pytest.fixture
def csi_table(csi_domains):
    return from_table(csi_domains, (0, 1, 2, 3), CSI_TABLE)


@pytest.fixture
def csi_dgraph(csi_domains):
    paths = tuple((canonicalize(raw, csi_domains), v) for raw, v in CSI_PATHS)
    return from_decision_graph(csi_domains, DecisionGraphSpec((0, 1, 2, 3), paths))


@pytest.fixture(params=_kernels.available_backends())
def backend(request):
    previous = _kernels.BACKEND
    _kernels.set_backend(request.param)
    yield request.param
    _kernels.set_backend(previous)


def rel_error(got, want) -> float:
    """Largest per-cell relative error; cells the reference puts at exactly zero
    are measured against the largest reference magnitude instead."""
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    assert got.shape == want.shape
    scale = np.abs(want)
    floor = np.max(scale) if scale.size else 0.0
    scale = np.where(scale == 0, floor if floor > 0 else 1.0, scale)
    return float(np.max(np.abs(got - want) / scale)) if got.size else 0.0


def random_query(rng, net, max_q=2, max_e=3):
    n = net.n_vars
    perm = [int(v) for v in rng.permutation(n)]
    q = perm[: int(rng.integers(1, max_q + 1))]
    e_vars = perm[len(q): len(q) + int(rng.integers(0, max_e + 1))]
    ev = {v: int(rng.integers(net.domains[v])) for v in e_vars}
    return q, ev


def step_errors(net, query, evidence, **kw):
    """Run a query and compare every elimination step against dense summation."""
    d = net.domains
    remaining = [v for v in range(net.n_vars) if v not in evidence]
    errors = []

    def observe(var, before, after):
        scope = list(remaining)
        prev = oracle.product_table(before, scope, d)
        summed = prev.sum(axis=scope.index(var))
        rest = [v for v in scope if v != var]
        now = oracle.product_table(after, rest, d)
        errors.append(rel_error(now.ravel(), summed.ravel()))
        remaining.remove(var)

    run_query(net, query, evidence, observer=observe, **kw)
    return errors


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.verdict_lines():
        terminalreporter.write_line(line)
