import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import CSI_TABLE
from multmodel import generate
from multmodel.builders import (
    DecisionGraphSpec,
    LogLinearSpec,
    NoisyOrSpec,
    from_decision_graph,
    from_loglinear,
    from_noisy_or,
    from_table,
    positive_from_table,
    to_positive,
    to_table,
)
from multmodel.errors import (
    DuplicateTerm,
    FormatError,
    NonPositiveTable,
    NotAPartition,
    TooLarge,
    TooManyParents,
)
from multmodel.lattice import TOP, Domains, canonicalize, map_instance
from multmodel.model import evaluate, prune_units


def mobius_oracle(domains, scope, table):
    """Log parameters straight from the subset formula: alternating sums over sub-instantiations."""
    shape = tuple(domains[v] for v in scope)
    logt = np.log(np.asarray(table, dtype=float)).reshape(shape)
    out = {}
    for z in itertools.product(*[range(k) for k in shape]):
        nz = [i for i, val in enumerate(z) if val]
        total = 0.0
        for r in range(len(nz) + 1):
            for sub in itertools.combinations(nz, r):
                idx = tuple(z[i] if i in sub else 0 for i in range(len(z)))
                total += (-1) ** (len(nz) - r) * logt[idx]
        clause = map_instance({scope[i]: z[i] for i in nz}, domains)
        out[clause] = math.exp(total)
    return out


# frozen from mobius_oracle on CSI_TABLE, units removed
CSI_POSITIVE = {
    (): 0.4,
    ((0, 1),): 0.25,
    ((1, 1),): 2.0,
    ((0, 1), (1, 1)): 0.5,
    ((0, 1), (2, 1)): 0.32,
    ((0, 1), (1, 1), (2, 1)): 20.3125,
    ((0, 1), (2, 1), (3, 1)): 2.5,
    ((0, 1), (1, 1), (2, 1), (3, 1)): 0.032 / 0.65,
}


def lit_clause(domains, lits):
    return map_instance(dict(lits), domains)


class TestFromTable:
    def test_csi4(self, csi_table):
        assert len(csi_table) == 16
        for idx, inst in enumerate(csi_table.instances()):
            assert evaluate(csi_table, inst) == CSI_TABLE[idx]

    def test_constant_one(self):
        d = Domains((2, 3))
        m = from_table(d, (0, 1), np.ones(6))
        assert len(prune_units(m, 0.0)) == 0

    def test_direct_placement(self):
        d = Domains((2, 2))
        m = from_table(d, (0, 1), [0.8, 0.2, 0.4, 0.6])
        assert dict(m.elements)[canonicalize({0: [1], 1: [1]}, d)] == 0.6

    def test_length_mismatch(self):
        with pytest.raises(FormatError):
            from_table(Domains((2, 2)), (0, 1), [1.0, 2.0])
        with pytest.raises(FormatError):
            from_table(Domains((2,)), (0,), [1.0, float("nan")])

    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(0)
        d = Domains((3, 2, 4))
        vals = rng.uniform(-3, 3, size=24)
        assert np.array_equal(to_table(from_table(d, (2, 0, 1), vals)), vals)

    def test_to_table_cap(self, csi_table):
        with pytest.raises(TooLarge):
            to_table(csi_table, cap=8)


class TestPositive:
    def test_oracle_reproduces_frozen_csi4(self, csi_domains):
        oracle = {c: g for c, g in mobius_oracle(csi_domains, (0, 1, 2, 3), CSI_TABLE).items()
                  if abs(g - 1) > 1e-9}
        frozen = {lit_clause(csi_domains, k): v for k, v in CSI_POSITIVE.items()}
        assert oracle.keys() == frozen.keys()
        for c in frozen:
            assert oracle[c] == pytest.approx(frozen[c], rel=1e-12)

    def test_csi4_structure(self, csi_domains):
        m = positive_from_table(csi_domains, (0, 1, 2, 3), CSI_TABLE, tol=1e-9)
        assert len(m) == 8
        got = dict(m.elements)
        for lits, val in CSI_POSITIVE.items():
            assert got[lit_clause(csi_domains, lits)] == pytest.approx(val, rel=1e-12)
        assert np.allclose(to_table(m), CSI_TABLE, rtol=1e-9, atol=0)

    def test_example2_pair_parameter(self):
        d = Domains((2, 2))
        psi = [0.3, 0.9, 0.5, 0.2]  # psi(0,0) psi(0,1) psi(1,0) psi(1,1)
        m = positive_from_table(d, (0, 1), psi, tol=0.0)
        g = dict(m.elements)[canonicalize({0: [1], 1: [1]}, d)]
        assert g == pytest.approx(psi[0] * psi[3] / (psi[1] * psi[2]), rel=1e-14)

    def test_independent_pair_pruned(self):
        d = Domains((2, 2))
        g, h = np.array([0.3, 0.7]), np.array([1.5, 0.25])
        m = positive_from_table(d, (0, 1), np.outer(g, h).ravel())
        assert canonicalize({0: [1], 1: [1]}, d) not in m.clauses
        assert max(c.arity for c in m.clauses) == 1

    def test_multivalued_against_oracle(self):
        rng = np.random.default_rng(11)
        d = Domains((3, 2, 4))
        table = rng.uniform(0.1, 2.0, size=24)
        m = positive_from_table(d, (0, 1, 2), table, tol=0.0)
        oracle = mobius_oracle(d, (0, 1, 2), table)
        assert len(m) == len(oracle) == 24
        for c, gam in m.elements:
            assert gam == pytest.approx(oracle[c], rel=1e-12)
            assert all(not (mask & 1) for _, mask in c.items)  # never mentions value 0

    def test_non_positive(self):
        with pytest.raises(NonPositiveTable):
            positive_from_table(Domains((2,)), (0,), [1.0, 0.0])

    def test_from_model(self, csi_dgraph):
        m = to_positive(csi_dgraph)
        assert len(m) == 8 and m.kind == "positive"

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4).flatmap(
        lambda n: st.lists(st.floats(1e-3, 1e3), min_size=2 ** n, max_size=2 ** n)))
    def test_round_trip_hypothesis(self, values):
        n = int(math.log2(len(values)))
        d = Domains((2,) * n)
        m = positive_from_table(d, tuple(range(n)), values)
        assert all(np.isfinite(g) and g > 0 for g in m.gammas)
        assert np.allclose(to_table(m), values, rtol=1e-9, atol=0)


class TestDecisionGraph:
    def test_csi4(self, csi_dgraph):
        assert len(csi_dgraph) == 6
        assert np.array_equal(to_table(csi_dgraph), CSI_TABLE)

    def test_single_path(self):
        d = Domains((2, 2))
        m = from_decision_graph(d, DecisionGraphSpec((0, 1), ((TOP, 3.5),)))
        assert np.array_equal(to_table(m), [3.5] * 4)

    def test_value_set_edge(self):
        d = Domains((3,))
        spec = DecisionGraphSpec((0,), ((canonicalize({0: [0, 1]}, d), 0.2),
                                        (canonicalize({0: [2]}, d), 0.7)))
        m = from_decision_graph(d, spec)
        assert len(m) == 2
        assert np.array_equal(to_table(m), [0.2, 0.2, 0.7])

    def test_not_a_partition(self):
        d = Domains((2,))
        with pytest.raises(NotAPartition):
            from_decision_graph(d, DecisionGraphSpec((0,), ((canonicalize({0: [0]}, d), 1.0),)))


class TestNoisyOr:
    SPEC = NoisyOrSpec(2, (0, 1), 1.0, (0.2, 0.4))

    def test_values(self):
        d = Domains((2, 2, 2))
        m = from_noisy_or(d, self.SPEC)
        assert evaluate(m, {2: 0, 0: 1, 1: 1}) == pytest.approx(0.08, rel=1e-15)
        assert evaluate(m, {2: 1, 0: 1, 1: 0}) == pytest.approx(0.8, rel=1e-15)

    def test_table_rows(self):
        d = Domains((2, 2, 2))
        m = from_noisy_or(d, self.SPEC)
        e0 = [evaluate(m, {0: a, 1: b, 2: 0}) for a, b in itertools.product((0, 1), repeat=2)]
        assert e0 == pytest.approx([1.0, 0.4, 0.2, 0.08], rel=1e-15)
        # to_table layout is (C1, C2, E) with E fastest
        assert to_table(m)[0::2] == pytest.approx([1.0, 0.4, 0.2, 0.08], rel=1e-15)

    @pytest.mark.parametrize("m", [0, 1, 3, 6])
    def test_element_count_and_cpt(self, m):
        rng = np.random.default_rng(m)
        d = Domains((2,) * (m + 1))
        q = tuple(rng.uniform(0, 1, size=m))
        leak = 0.9
        model = from_noisy_or(d, NoisyOrSpec(m, tuple(range(m)), leak, q))
        assert len(model) == 2 ** m + m + 1
        for bits in itertools.product((0, 1), repeat=m):
            off = leak * math.prod(qi for qi, b in zip(q, bits) if b)
            inst = dict(enumerate(bits))
            assert evaluate(model, {**inst, m: 0}) == pytest.approx(off, rel=1e-14)
            assert evaluate(model, {**inst, m: 1}) == pytest.approx(1 - off, rel=1e-14)

    def test_errors(self):
        d = Domains((2,) * 4 + (3,))
        with pytest.raises(TooManyParents):
            from_noisy_or(d, NoisyOrSpec(3, (0, 1, 2), 1.0, (0.5,) * 3), max_parents=2)
        with pytest.raises(FormatError):
            from_noisy_or(d, NoisyOrSpec(4, (0,), 1.0, (0.5,)))  # ternary child
        with pytest.raises(FormatError):
            from_noisy_or(d, NoisyOrSpec(3, (0,), 0.0, (0.5,)))
        with pytest.raises(FormatError):
            from_noisy_or(d, NoisyOrSpec(3, (0, 1), 1.0, (0.5,)))


class TestLogLinear:
    def test_empty(self):
        d = Domains((2,))
        m = from_loglinear(d, LogLinearSpec((0,), 0.0, ()))
        assert m.elements == ((TOP, 1.0),)
        assert len(prune_units(m)) == 0

    def test_single_term(self):
        d = Domains((2,))
        m = from_loglinear(d, LogLinearSpec((0,), 0.0, ((((0, 1),), math.log(2)),)))
        assert dict(m.elements)[canonicalize({0: [1]}, d)] == pytest.approx(2.0, rel=1e-15)

    def test_full_three_variable_model(self):
        rng = np.random.default_rng(5)
        d = Domains((2, 2, 2))
        terms = []
        for r in (1, 2, 3):
            for vs in itertools.combinations(range(3), r):
                for vals in itertools.product((0, 1), repeat=r):
                    terms.append((tuple(zip(vs, vals)), float(rng.normal())))
        mu = 0.3
        m = from_loglinear(d, LogLinearSpec((0, 1, 2), mu, tuple(terms)))
        assert len(m) == len(terms) + 1 == 27
        for a, b, c in itertools.product((0, 1), repeat=3):
            inst = {0: a, 1: b, 2: c}
            expo = mu + sum(lam for lits, lam in terms if all(inst[v] == x for v, x in lits))
            assert evaluate(m, inst) == pytest.approx(math.exp(expo), rel=1e-13)

    def test_duplicate(self):
        d = Domains((2, 2))
        with pytest.raises(DuplicateTerm):
            from_loglinear(d, LogLinearSpec((0, 1), 0.0, ((((0, 1),), 1.0), (((0, 1),), 2.0))))


@pytest.mark.parametrize("seed", range(10))
def test_potts_positive_arity_at_most_two(seed):
    rng = np.random.default_rng(seed)
    d, scope, table = generate.potts_table(rng, 5)
    m = positive_from_table(d, scope, table)
    assert max(c.arity for c in m.clauses) <= 2
    assert np.allclose(to_table(m), table, rtol=1e-9, atol=0)
