"""Seeded random networks for tests and benchmarks."""
from __future__ import annotations

import math

import numpy as np

from .builders import (
    DecisionGraphSpec,
    LogLinearSpec,
    NoisyOrSpec,
    from_decision_graph,
    from_loglinear,
    from_noisy_or,
    from_table,
)
from .engine import Network
from .lattice import Domains, from_masks

FACTOR_KINDS = ("table", "dgraph", "noisyor", "loglin")


def _random_domains(rng: np.random.Generator, n: int, max_card: int, max_joint: int) -> Domains:
    while True:
        # about half binary so noisy-OR factors have room
        cards = [2 if rng.random() < 0.5 else int(rng.integers(2, max_card + 1))
                 for _ in range(n)]
        if math.prod(cards) <= max_joint:
            return Domains(tuple(cards))


def _positive(rng, size, zero_prob=0.0):
    vals = rng.uniform(0.05, 1.0, size=size)
    if zero_prob:
        vals[rng.random(size) < zero_prob] = 0.0
    return vals


def random_table(rng, domains: Domains, scope, zero_prob=0.0):
    return from_table(domains, scope, _positive(rng, domains.joint_size(scope), zero_prob))


def random_decision_tree(rng, domains: Domains, scope, zero_prob=0.05):
    """Random tree over ``scope``; each edge carries a subset of its variable's values."""
    paths = []

    def grow(masks, free, depth):
        if not free or depth == 0 or (masks and rng.random() < 0.25):
            val = 0.0 if rng.random() < zero_prob else float(rng.uniform(0.05, 1.0))
            paths.append((from_masks(masks, domains), val))
            return
        var = free[int(rng.integers(len(free)))]
        rest = [v for v in free if v != var]
        k = domains[var]
        n_groups = int(rng.integers(2, k + 1))
        labels = rng.permutation(np.arange(k) % n_groups)
        for g in range(n_groups):
            mask = sum(1 << j for j in range(k) if labels[j] == g)
            grow({**masks, var: mask}, rest, depth - 1)

    grow({}, list(scope), len(scope))
    return from_decision_graph(domains, DecisionGraphSpec(tuple(scope), tuple(paths)))


def random_noisy_or(rng, domains: Domains, child, parents):
    leak = float(rng.uniform(0.5, 1.0))
    q = tuple(float(x) for x in rng.uniform(0.05, 0.95, size=len(parents)))
    return from_noisy_or(domains, NoisyOrSpec(child, tuple(parents), leak, q))


def random_loglinear(rng, domains: Domains, scope, n_terms=None):
    n_terms = n_terms if n_terms is not None else int(rng.integers(1, 5))
    terms = {}
    for _ in range(n_terms):
        size = int(rng.integers(1, len(scope) + 1))
        vars_ = sorted(rng.choice(scope, size=size, replace=False).tolist())
        lits = tuple((v, int(rng.integers(domains[v]))) for v in vars_)
        terms[lits] = float(rng.normal(0.0, 1.0))
    spec = LogLinearSpec(tuple(scope), float(rng.normal(0.0, 0.5)), tuple(terms.items()))
    return from_loglinear(domains, spec)


def random_network(rng: np.random.Generator, *, max_vars=12, max_card=4,
                   n_factors=(3, 8), kinds=FACTOR_KINDS, max_scope=3,
                   max_joint=1 << 16, binary=False) -> Network:
    """Mixed-kind network with at most ``max_vars`` variables."""
    n = int(rng.integers(3, max_vars + 1))
    domains = (Domains((2,) * n) if binary
               else _random_domains(rng, n, max_card, max_joint))
    binary_vars = [v for v in range(n) if domains[v] == 2]
    factors = []
    target = int(rng.integers(n_factors[0], n_factors[1] + 1))
    while len(factors) < target:
        kind = kinds[int(rng.integers(len(kinds)))]
        size = int(rng.integers(1, max_scope + 1))
        if kind == "noisyor":
            if len(binary_vars) < 2:
                continue
            size = max(2, size)
            vs = rng.choice(binary_vars, size=min(size, len(binary_vars)), replace=False)
            factors.append(random_noisy_or(rng, domains, int(vs[0]), [int(v) for v in vs[1:]]))
            continue
        scope = [int(v) for v in rng.choice(n, size=min(size, n), replace=False)]
        if kind == "table":
            factors.append(random_table(rng, domains, scope))
        elif kind == "dgraph":
            factors.append(random_decision_tree(rng, domains, scope))
        else:
            factors.append(random_loglinear(rng, domains, scope))
    return Network(domains, tuple(factors))


def random_table_network(rng, *, n_vars=(4, 8), max_card=3, n_factors=(3, 7),
                         max_scope=3) -> Network:
    n = int(rng.integers(n_vars[0], n_vars[1] + 1))
    domains = Domains(tuple(int(rng.integers(2, max_card + 1)) for _ in range(n)))
    factors = []
    for _ in range(int(rng.integers(n_factors[0], n_factors[1] + 1))):
        size = int(rng.integers(1, max_scope + 1))
        scope = [int(v) for v in rng.choice(n, size=min(size, n), replace=False)]
        factors.append(random_table(rng, domains, scope))
    return Network(domains, tuple(factors))


def bipartite_noisy_or(rng, n_diseases=10, n_findings=15, parent_counts=(4, 8),
                       exact_counts=None):
    """Two-level diagnosis network: disease priors plus one noisy-OR per finding.

    Diseases are variables ``0..n_diseases-1``; findings follow.  Each finding
    gets a parent count drawn from ``parent_counts`` (inclusive) unless
    ``exact_counts`` lists them.  Returns ``(network, findings, parents)``.
    """
    n = n_diseases + n_findings
    domains = Domains((2,) * n)
    factors = []
    for d in range(n_diseases):
        p = float(rng.uniform(0.01, 0.2))
        factors.append(from_table(domains, (d,), (1.0 - p, p)))
    findings = list(range(n_diseases, n))
    parents = []
    for i, f in enumerate(findings):
        if exact_counts is not None:
            k = exact_counts[i]
        else:
            k = int(rng.integers(parent_counts[0], parent_counts[1] + 1))
        ps = sorted(int(v) for v in rng.choice(n_diseases, size=k, replace=False))
        parents.append(ps)
        factors.append(random_noisy_or(rng, domains, f, ps))
    return Network(domains, tuple(factors)), findings, parents


def random_positive_table(rng, n_vars):
    domains = Domains((2,) * n_vars)
    return domains, tuple(range(n_vars)), rng.uniform(0.05, 2.0, size=2 ** n_vars)


def potts_table(rng, n_vars=6):
    """``c0 * prod_{i<j} psi_ij(v_i, v_j)`` over binary variables, flat."""
    domains = Domains((2,) * n_vars)
    shape = (2,) * n_vars
    table = np.full(shape, float(rng.uniform(0.5, 2.0)))
    for i in range(n_vars):
        for j in range(i + 1, n_vars):
            pair = rng.uniform(0.2, 3.0, size=(2, 2))
            idx = [1] * n_vars
            idx[i] = 2
            idx[j] = 2
            table = table * pair.reshape(idx)
    return domains, tuple(range(n_vars)), table.ravel()
