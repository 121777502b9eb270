"""Multiplicative models: a structure of clauses with one real parameter each.

The value of an instance ``d`` is the product of the parameters of every
element whose clause is implied by ``d``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import FormatError, ScopeError, TooLarge, ValidationSkipped
from .lattice import (
    Clause,
    Domains,
    clause_count,
    conjoin,
    map_instance,
    mask_matrix,
    project_many,
    satisfies,
)

KINDS = ("general", "table", "positive", "decision-graph", "noisy-or", "log-linear")

DEFAULT_ENUM_CAP = 1 << 24


@dataclass(frozen=True)
class MultiplicativeModel:
    """A factor as a structure of clauses plus their parameters.

    ``scope`` keeps the caller's variable order; it fixes the layout of
    :func:`to_table` output.  ``kind`` and ``source`` record provenance only
    and take no part in equality.
    """

    domains: Domains
    scope: tuple[int, ...]
    elements: tuple[tuple[Clause, float], ...]
    kind: str = field(default="general", compare=False)
    source: Any = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        scope = tuple(int(v) for v in self.scope)
        if len(set(scope)) != len(scope):
            raise FormatError(f"repeated variable in scope {scope}")
        for v in scope:
            self.domains.check_var(v)
        inscope = set(scope)
        seen = set()
        elements = []
        for clause, gamma in self.elements:
            if clause.bottom:
                raise FormatError("model element is the unsatisfiable clause")
            if clause in seen:
                raise FormatError(f"duplicate element {clause}")
            for v in clause.variables:
                if v not in inscope:
                    raise FormatError(f"element {clause} mentions {v} outside scope")
            seen.add(clause)
            elements.append((clause, float(gamma)))
        if self.kind not in KINDS:
            raise FormatError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "elements", tuple(elements))

    def __len__(self):
        return len(self.elements)

    @property
    def clauses(self) -> tuple[Clause, ...]:
        return tuple(c for c, _ in self.elements)

    @property
    def gammas(self) -> np.ndarray:
        return np.array([g for _, g in self.elements], dtype=float)

    def joint_size(self) -> int:
        return self.domains.joint_size(self.scope)

    def instances(self):
        """Full instances of the scope in row-major order, last variable fastest."""
        ranges = [range(self.domains[v]) for v in self.scope]
        for vals in itertools.product(*ranges):
            yield dict(zip(self.scope, vals))

    def replace(self, **changes) -> "MultiplicativeModel":
        fields = dict(domains=self.domains, scope=self.scope, elements=self.elements,
                      kind=self.kind, source=self.source)
        fields.update(changes)
        return MultiplicativeModel(**fields)


@dataclass(frozen=True)
class ModelStats:
    element_count: int
    max_arity: int
    naive_op_count: int
    scope_size: int
    naive_exact: bool = True


def evaluate(m: MultiplicativeModel, d: Mapping[int, int]) -> float:
    """Product of the parameters whose clauses ``d`` satisfies (1 if none)."""
    for v in m.scope:
        if v not in d:
            raise ScopeError(f"instance does not assign scope variable {v}")
    value = 1.0
    for clause, gamma in m.elements:
        if satisfies(d, clause):
            value *= gamma
    return value


def prune_units(m: MultiplicativeModel, tol: float = 1e-9) -> MultiplicativeModel:
    """Drop elements whose parameter is within ``tol`` of 1."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    kept = tuple((c, g) for c, g in m.elements if abs(g - 1.0) > tol)
    if len(kept) == len(m.elements):
        return m
    return m.replace(elements=kept)


def condition(m: MultiplicativeModel, evidence: Mapping[int, int]) -> MultiplicativeModel:
    """Substitute observed values and drop the evidence variables from the model.

    Each clause is conjoined with the evidence literals; clauses that become
    unsatisfiable vanish, the rest are projected off the evidence variables.
    Elements that collapse onto the same clause are merged by multiplying
    their parameters, which leaves every instance's value unchanged.
    """
    ev = {v: val for v, val in evidence.items() if v in set(m.scope)}
    if not ev:
        return m
    e_clause = map_instance(ev, m.domains)
    merged: dict[Clause, float] = {}
    for clause, gamma in m.elements:
        c = conjoin(clause, e_clause)
        if c.bottom:
            continue
        c = project_many(c, ev)
        merged[c] = merged[c] * gamma if c in merged else gamma
    scope = tuple(v for v in m.scope if v not in ev)
    return MultiplicativeModel(m.domains, scope, tuple(merged.items()), kind=m.kind)


def instance_array(domains: Domains, scope: Sequence[int]) -> np.ndarray:
    """All full instances of ``scope`` as an (N, len(scope)) int array, last column fastest."""
    shape = tuple(domains[v] for v in scope)
    if not shape:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices(shape).reshape(len(shape), -1).T
    return np.ascontiguousarray(grids, dtype=np.int64)


def _table_and_ops(m: MultiplicativeModel, cap: int):
    size = m.joint_size()
    if size > cap:
        raise TooLarge(f"joint size {size} exceeds cap {cap}")
    cols = list(m.scope)
    masks = mask_matrix(m.clauses, cols, m.domains)
    inst = instance_array(m.domains, cols)
    return _kernels.eval_products(masks, m.gammas, inst)


def validate_partition(m: MultiplicativeModel, cap: int = 1 << 20,
                       max_pairs: int = 50_000_000) -> bool:
    """True iff every full instance of the scope satisfies exactly one element.

    Small scopes are checked by enumeration.  Larger ones use the equivalent
    test "pairwise conjunctions are all unsatisfiable and the satisfying
    counts add up to the joint size".
    """
    size = m.joint_size()
    clauses = m.clauses
    if size <= cap:
        cols = list(m.scope)
        masks = mask_matrix(clauses, cols, m.domains)
        inst = instance_array(m.domains, cols)
        counts = np.zeros(inst.shape[0], dtype=np.int64)
        if masks.shape[0]:
            bits = np.left_shift(np.uint64(1), inst.astype(np.uint64))
            for row in masks:
                counts += np.all((bits & row[None, :]) != 0, axis=1)
        return bool(np.all(counts == 1))
    k = len(clauses)
    if k * (k - 1) // 2 > max_pairs:
        raise ValidationSkipped(
            f"{k} elements over a joint of {size} cells is beyond both checks")
    for i in range(k):
        for j in range(i + 1, k):
            if not conjoin(clauses[i], clauses[j]).bottom:
                return False
    total = sum(clause_count(c, m.scope, m.domains) for c in clauses)
    return total == size


def stats(m: MultiplicativeModel, cap: int = DEFAULT_ENUM_CAP) -> ModelStats:
    size = m.joint_size()
    max_arity = max((c.arity for c in m.clauses), default=0)
    if size <= cap:
        _, ops = _table_and_ops(m, cap)
        exact = True
    else:
        ops = len(m.elements) * size
        exact = False
    return ModelStats(
        element_count=len(m.elements),
        max_arity=max_arity,
        naive_op_count=int(ops),
        scope_size=len(m.scope),
        naive_exact=exact,
    )


def make_model(domains: Domains, scope: Iterable[int],
               elements: Iterable[tuple[Clause, float]], kind: str = "general",
               source=None) -> MultiplicativeModel:
    return MultiplicativeModel(domains, tuple(scope), tuple(elements), kind=kind, source=source)


__all__ = [
    "KINDS",
    "ModelStats",
    "MultiplicativeModel",
    "condition",
    "evaluate",
    "instance_array",
    "make_model",
    "prune_units",
    "stats",
    "validate_partition",
]
