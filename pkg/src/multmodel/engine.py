"""Variable elimination over multiplicative models.

:func:`run_query` is the bucket loop: condition on evidence, then for each
non-query variable gather the elements it is relevant to, replace them by the
output of :func:`eliminate`, and finally multiply whatever is left at every
query instance.  :func:`eliminate` builds the candidate contexts from the
conjunction closures of the projected bucket elements, then assigns each
candidate its parameter by dividing the summed-out numerator by the
parameters already emitted below it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import (
    CapacityExceeded,
    DegenerateZero,
    OrderError,
    QueryError,
    ZeroEvidenceProbability,
)
from .lattice import (
    TOP,
    Clause,
    Domains,
    conjoin,
    covers,
    leq,
    map_instance,
    mask_matrix,
    project,
    relevance,
)
from .model import MultiplicativeModel, condition, instance_array

HEURISTICS = ("given", "min-degree", "min-fill")
CANDIDATE_MODES = ("reduced", "full")

DEFAULT_TOL = 1e-12
DEFAULT_CAP = 10**6

Element = tuple[Clause, float]


@dataclass(frozen=True)
class Network:
    """A roster of variables plus the factors whose product is the distribution."""

    domains: Domains
    factors: tuple[MultiplicativeModel, ...] = ()

    def __post_init__(self):
        factors = tuple(self.factors)
        for f in factors:
            if f.domains != self.domains:
                raise ValueError("factor built over a different variable roster")
        object.__setattr__(self, "factors", factors)

    @property
    def n_vars(self) -> int:
        return len(self.domains)


@dataclass
class StepTrace:
    variable: int
    candidate_count: int
    closure_sizes: tuple[int, ...]
    multiplications: int
    additions: int
    emitted_elements: int
    bucket_count: int
    gathered_elements: int
    merged_scope: tuple[int, ...]


@dataclass
class EliminationTrace:
    order: tuple[int, ...] = ()
    steps: list[StepTrace] = field(default_factory=list)
    final_multiplications: int = 0
    epsilon_retry: bool = False

    @property
    def multiplications(self) -> int:
        return sum(s.multiplications for s in self.steps) + self.final_multiplications

    @property
    def additions(self) -> int:
        return sum(s.additions for s in self.steps)

    @property
    def max_candidates(self) -> int:
        return max((s.candidate_count for s in self.steps), default=0)


@dataclass(frozen=True)
class QueryResult:
    """Joint-indexed values over ``query`` (last variable fastest)."""

    query: tuple[int, ...]
    values: np.ndarray
    normalizer: float
    trace: EliminationTrace
    normalized: bool = False


def normalize(r: QueryResult) -> QueryResult:
    if r.normalizer == 0:
        raise ZeroEvidenceProbability("evidence has probability zero")
    return QueryResult(r.query, r.values / r.normalizer, r.normalizer, r.trace, normalized=True)


# ------------------------------------------------------------------ ordering


def interaction_graph(models: Iterable[MultiplicativeModel], variables: Iterable[int]):
    """Adjacency sets; two variables are adjacent when one element constrains both."""
    graph: dict[int, set[int]] = {v: set() for v in variables}
    for m in models:
        for clause in m.clauses:
            vs = clause.variables
            for v in vs:
                graph.setdefault(v, set())
            for a, b in itertools.combinations(vs, 2):
                graph[a].add(b)
                graph[b].add(a)
    return graph


def greedy_order(graph: Mapping[int, set[int]], eliminable: Iterable[int],
                 heuristic: str) -> list[int]:
    g = {v: set(nb) for v, nb in graph.items()}
    remaining = set(eliminable)
    order = []

    def cost(v):
        nb = g[v]
        if heuristic == "min-degree":
            return (len(nb), v)
        fill = sum(1 for a, b in itertools.combinations(nb, 2) if b not in g[a])
        return (fill, len(nb), v)

    while remaining:
        v = min(remaining, key=cost)
        nb = g.pop(v)
        for a in nb:
            g[a].discard(v)
            g[a] |= nb - {a}
        remaining.remove(v)
        order.append(v)
    return order


def _resolve_order(models, domains: Domains, query, evidence, heuristic, order):
    eliminable = [v for v in range(len(domains)) if v not in query and v not in evidence]
    if order is not None:
        order = [int(v) for v in order]
        if sorted(order) != eliminable:
            raise OrderError(
                f"explicit order {order} is not a permutation of {eliminable}")
        return order
    if heuristic not in HEURISTICS:
        raise OrderError(f"unknown heuristic {heuristic!r}")
    if heuristic == "given":
        return eliminable
    graph = interaction_graph(models, range(len(domains)))
    return greedy_order(graph, eliminable, heuristic)


def interaction_order(net: Network, query: Sequence[int], heuristic: str = "min-fill",
                      order: Sequence[int] | None = None,
                      evidence: Mapping[int, int] | None = None) -> list[int]:
    """Elimination order over every variable outside the query and evidence."""
    evidence = dict(evidence or {})
    models = [condition(f, evidence) for f in net.factors]
    return _resolve_order(models, net.domains, set(query), evidence, heuristic, order)


# --------------------------------------------------------------- elimination


def _conjunction_closure(gens: Sequence[Clause], cap: int) -> set[Clause]:
    """Conjunctions of every nonempty subset of ``gens``, unsatisfiable ones dropped."""
    result = set(gens)
    frontier = list(result)
    while frontier:
        fresh = []
        for a in frontier:
            for b in gens:
                c = conjoin(a, b)
                if not c.bottom and c not in result:
                    result.add(c)
                    fresh.append(c)
        if len(result) > cap:
            raise CapacityExceeded(f"closure exceeded {cap} clauses")
        frontier = fresh
    return result


def closure(S: Iterable[Clause], var: int, cap: int = DEFAULT_CAP) -> set[Clause]:
    """The conjunction closure of the elements of ``S`` projected off ``var``, with TOP."""
    gens = sorted({project(s, var) for s in S}, key=Clause.sort_key)
    out = _conjunction_closure(gens, cap)
    out.add(TOP)
    return out


def _bucket_candidates(elements: Sequence[Element], var: int, domains: Domains,
                       mode: str, cap: int) -> set[Clause]:
    gens = sorted({project(s, var) for s, _ in elements}, key=Clause.sort_key)
    out = _conjunction_closure(gens, cap)
    # TOP is only needed as a context for instances no projected element covers
    if mode == "full" or not covers(gens, domains):
        out.add(TOP)
    return out


def _check_unique_maximum(R: Sequence[Clause], scope: Sequence[int], domains: Domains):
    for vals in itertools.product(*[range(domains[v]) for v in scope]):
        fu = map_instance(dict(zip(scope, vals)), domains)
        below = [r for r in R if leq(r, fu)]
        tops = [m for m in below if all(leq(r, m) for r in below)]
        if len(tops) != 1:
            raise AssertionError(
                f"instance {dict(zip(scope, vals))} has {len(tops)} maximal candidates")


def eliminate(var: int, buckets: Sequence[Sequence[Element]], domains: Domains, *,
              tol: float = DEFAULT_TOL, cap: int = DEFAULT_CAP,
              candidates: str = "reduced", debug: bool = False,
              ) -> tuple[MultiplicativeModel, StepTrace]:
    """Sum ``var`` out of the product of the bucket elements.

    Every element must be relevant to ``var``.  Returns a model over the
    other variables mentioned by the buckets such that, for each instance
    ``u`` of them, the product of its implied parameters equals the sum over
    ``var`` of the implied bucket parameters.

    ``candidates="full"`` adds TOP to every bucket's closure as the textbook
    construction does; ``"reduced"`` adds it only to buckets whose
    projections fail to cover the space, so a bucket of full tables yields
    exactly the cells of the marginalized table.
    """
    if candidates not in CANDIDATE_MODES:
        raise ValueError(f"candidates must be one of {CANDIDATE_MODES}")
    flat: list[Element] = []
    for b in buckets:
        for s, g in b:
            if not relevance(s, var):
                raise ValueError(f"bucket element {s} is not relevant to variable {var}")
            flat.append((s, g))
    merged = sorted({v for s, _ in flat for v in s.variables if v != var})

    closures = [_bucket_candidates(b, var, domains, candidates, cap) for b in buckets if b]
    R: set[Clause] = {TOP}
    for Ri in closures:
        nxt = set()
        for a in R:
            for b in Ri:
                c = conjoin(a, b)
                if not c.bottom:
                    nxt.add(c)
        if len(nxt) > cap:
            raise CapacityExceeded(f"candidate set exceeded {cap} clauses")
        R = nxt
    ordered = sorted(R, key=lambda c: c.sort_key(domains))
    if debug:
        _check_unique_maximum(ordered, merged, domains)

    cols = [*merged, var]
    r_masks = mask_matrix(ordered, cols, domains)
    e_masks = mask_matrix([s for s, _ in flat], cols, domains)
    gammas = np.array([g for _, g in flat], dtype=float)
    num, m_num = _kernels.numerators(e_masks, gammas, r_masks, len(cols) - 1, domains[var])
    gam, emitted, m_tel, bad = _kernels.telescope(r_masks, num, tol)
    if bad >= 0:
        raise DegenerateZero(
            f"eliminating {var}: zero denominator for non-zero numerator at {ordered[bad]}")

    elements = tuple((ordered[i], float(gam[i])) for i in np.flatnonzero(emitted))
    model = MultiplicativeModel(domains, tuple(merged), elements)
    step = StepTrace(
        variable=var,
        candidate_count=len(ordered),
        closure_sizes=tuple(len(c) for c in closures),
        multiplications=int(m_num) + int(m_tel),
        additions=len(ordered) * (domains[var] - 1),
        emitted_elements=len(elements),
        bucket_count=len(closures),
        gathered_elements=len(flat),
        merged_scope=tuple(merged),
    )
    return model, step


# --------------------------------------------------------------------- query


def _check_query(net: Network, query, evidence):
    if not query:
        raise QueryError("query must name at least one variable")
    if len(set(query)) != len(query):
        raise QueryError(f"repeated query variable in {query}")
    for v in query:
        net.domains.check_var(v)
    for v, val in evidence.items():
        net.domains.check_value(v, val)
    overlap = set(query) & set(evidence)
    if overlap:
        raise QueryError(f"variables {sorted(overlap)} are both queried and observed")


def _drop_var(m: MultiplicativeModel, var: int) -> MultiplicativeModel:
    if var not in m.scope:
        return m
    return MultiplicativeModel(m.domains, tuple(v for v in m.scope if v != var), m.elements,
                               kind=m.kind)


def _replace_zeros(net: Network, eps: float) -> Network:
    factors = []
    for f in net.factors:
        elements = tuple((c, eps if g == 0.0 else g) for c, g in f.elements)
        factors.append(MultiplicativeModel(f.domains, f.scope, elements, kind=f.kind))
    return Network(net.domains, tuple(factors))


Observer = Callable[[int, list, list], None]


def run_query(net: Network, query: Sequence[int], evidence: Mapping[int, int] | None = None,
              *, heuristic: str = "min-fill", order: Sequence[int] | None = None,
              tol: float = DEFAULT_TOL, cap: int = DEFAULT_CAP,
              candidates: str = "reduced", debug: bool = False,
              epsilon_zero: float | None = None,
              observer: Observer | None = None) -> QueryResult:
    """Unnormalized ``P(query, evidence)`` by variable elimination.

    ``observer(var, live_before, live_after)`` is called after each
    elimination with the lists of live models.  With ``epsilon_zero`` set, a
    :class:`DegenerateZero` failure triggers one retry with every exact-zero
    input parameter replaced by that value.
    """
    query = tuple(int(v) for v in query)
    evidence = {int(k): int(v) for k, v in (evidence or {}).items()}
    _check_query(net, query, evidence)
    opts = dict(heuristic=heuristic, order=order, tol=tol, cap=cap,
                candidates=candidates, debug=debug, observer=observer)
    try:
        return _run(net, query, evidence, **opts)
    except DegenerateZero:
        if epsilon_zero is None:
            raise
    result = _run(_replace_zeros(net, epsilon_zero), query, evidence, **opts)
    result.trace.epsilon_retry = True
    return result


def _run(net, query, evidence, *, heuristic, order, tol, cap, candidates, debug, observer):
    domains = net.domains
    live = [condition(f, evidence) for f in net.factors]
    elim = _resolve_order(live, domains, set(query), evidence, heuristic, order)
    trace = EliminationTrace(order=tuple(elim))

    for var in elim:
        buckets = []
        nxt = []
        for m in live:
            rel = tuple(e for e in m.elements if relevance(e[0], var))
            if not rel:
                nxt.append(_drop_var(m, var))
                continue
            buckets.append(rel)
            rest = tuple(e for e in m.elements if not relevance(e[0], var))
            if rest:
                nxt.append(MultiplicativeModel(
                    domains, tuple(v for v in m.scope if v != var), rest, kind=m.kind))
        model, step = eliminate(var, buckets, domains, tol=tol, cap=cap,
                                candidates=candidates, debug=debug)
        if model.elements:
            nxt.append(model)
        trace.steps.append(step)
        if observer is not None:
            observer(var, live, nxt)
        live = nxt

    flat = [e for m in live for e in m.elements]
    masks = mask_matrix([c for c, _ in flat], query, domains)
    gammas = np.array([g for _, g in flat], dtype=float)
    values, mults = _kernels.eval_products(masks, gammas, instance_array(domains, query))
    trace.final_multiplications = int(mults)
    values = np.asarray(values, dtype=float)
    return QueryResult(query, values, float(values.sum()), trace)
