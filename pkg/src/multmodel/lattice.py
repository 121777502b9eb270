"""Product-form propositional clauses.

A clause is a conjunction, over some variables, of per-variable value
disjunctions ``V in {v1, v2, ...}``.  Allowed value sets are stored as
integer bitmasks (bit ``j`` set means value ``j`` is allowed).  Clauses are
kept in canonical form: no stored mask is empty and no stored mask equals the
variable's full domain.  The unsatisfiable clause is a distinct flag.

The order ``leq(c, c2)`` means *c is implied by c2*: every instance that
satisfies ``c2`` satisfies ``c``.  ``TOP`` is the least element and
``BOTTOM`` the greatest.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import BottomProjection, FormatError, InvalidValue, ScopeError

MAX_CARDINALITY = 64


@dataclass(frozen=True)
class Domains:
    """Cardinalities of the variables in a roster; values are ``0..k-1``."""

    cardinalities: tuple[int, ...]

    def __post_init__(self):
        cards = tuple(int(k) for k in self.cardinalities)
        for i, k in enumerate(cards):
            if k < 1:
                raise FormatError(f"variable {i} has cardinality {k} < 1")
            if k > MAX_CARDINALITY:
                raise FormatError(
                    f"variable {i} has cardinality {k} > {MAX_CARDINALITY}")
        object.__setattr__(self, "cardinalities", cards)

    def __len__(self):
        return len(self.cardinalities)

    def __getitem__(self, var: int) -> int:
        return self.cardinalities[var]

    def full_mask(self, var: int) -> int:
        return (1 << self.cardinalities[var]) - 1

    def check_var(self, var: int) -> None:
        if not 0 <= var < len(self.cardinalities):
            raise InvalidValue(f"unknown variable {var}")

    def check_value(self, var: int, value: int) -> None:
        self.check_var(var)
        if not 0 <= value < self.cardinalities[var]:
            raise InvalidValue(
                f"value {value} out of domain for variable {var} "
                f"(cardinality {self.cardinalities[var]})")

    def joint_size(self, variables: Iterable[int]) -> int:
        size = 1
        for v in variables:
            size *= self.cardinalities[v]
        return size


def mask_values(mask: int) -> tuple[int, ...]:
    """Values whose bits are set in ``mask``, ascending."""
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return tuple(out)


def values_mask(values: Iterable[int]) -> int:
    mask = 0
    for v in values:
        mask |= 1 << v
    return mask


@dataclass(frozen=True)
class Clause:
    """Canonical product-form clause.

    ``items`` is a tuple of ``(var, mask)`` pairs sorted by variable id.
    Build clauses through :func:`canonicalize` or the helpers below rather
    than by hand; the constructor does not re-check canonical form.
    """

    items: tuple[tuple[int, int], ...] = ()
    bottom: bool = False

    @property
    def is_top(self) -> bool:
        return not self.bottom and not self.items

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.items)

    @property
    def arity(self) -> int:
        return len(self.items)

    def allowed(self, var: int) -> int | None:
        """Mask of allowed values for ``var``, or None when unconstrained."""
        for v, m in self.items:
            if v == var:
                return m
        return None

    def as_dict(self) -> dict[int, int]:
        return dict(self.items)

    def sort_key(self, domains: Domains | None = None):
        """Canonical total order.

        Sorted by (bottom, arity, specificity, variables, value sets), where
        specificity is the number of excluded values.  Any clause strictly
        below another in the lattice order sorts first, so sorting by this
        key yields a linear extension of ``leq``.
        """
        if domains is None:
            excluded = sum(-bin(m).count("1") for _, m in self.items)
        else:
            excluded = sum(domains[v] - bin(m).count("1") for v, m in self.items)
        return (self.bottom, len(self.items), excluded, self.variables,
                tuple(mask_values(m) for _, m in self.items))

    def __str__(self):
        if self.bottom:
            return "BOTTOM"
        if not self.items:
            return "TOP"
        parts = []
        for v, m in self.items:
            vals = mask_values(m)
            if len(vals) == 1:
                parts.append(f"X{v}={vals[0]}")
            else:
                parts.append(f"X{v}in{{{','.join(map(str, vals))}}}")
        return "(" + " & ".join(parts) + ")"


TOP = Clause()
BOTTOM = Clause((), True)


def canonicalize(raw: Mapping[int, Iterable[int]], domains: Domains) -> Clause:
    """Build a canonical clause from per-variable allowed value sets.

    >>> d = Domains((2, 3))
    >>> canonicalize({0: [0, 1]}, d) == TOP
    True
    >>> canonicalize({0: []}, d) == BOTTOM
    True
    """
    masks = {}
    for var, values in raw.items():
        domains.check_var(var)
        mask = 0
        for val in values:
            domains.check_value(var, val)
            mask |= 1 << val
        masks[var] = mask
    return from_masks(masks, domains)


def from_masks(masks: Mapping[int, int], domains: Domains) -> Clause:
    items = []
    for var in sorted(masks):
        domains.check_var(var)
        full = domains.full_mask(var)
        mask = masks[var]
        if mask & ~full:
            raise InvalidValue(f"mask {mask:#b} has bits outside domain of {var}")
        if mask == 0:
            return BOTTOM
        if mask != full:
            items.append((var, mask))
    return Clause(tuple(items))


def conjoin(a: Clause, b: Clause) -> Clause:
    """Least upper bound: per-variable intersection of allowed sets."""
    if a.bottom or b.bottom:
        return BOTTOM
    if not a.items:
        return b
    if not b.items:
        return a
    out = []
    ia = ib = 0
    ai, bi = a.items, b.items
    while ia < len(ai) and ib < len(bi):
        va, ma = ai[ia]
        vb, mb = bi[ib]
        if va == vb:
            m = ma & mb
            if m == 0:
                return BOTTOM
            out.append((va, m))
            ia += 1
            ib += 1
        elif va < vb:
            out.append(ai[ia])
            ia += 1
        else:
            out.append(bi[ib])
            ib += 1
    out.extend(ai[ia:])
    out.extend(bi[ib:])
    return Clause(tuple(out))


def project(s: Clause, var: int) -> Clause:
    """Drop whatever ``s`` says about ``var``."""
    if s.bottom:
        raise BottomProjection("cannot project the unsatisfiable clause")
    return Clause(tuple(item for item in s.items if item[0] != var))


def project_many(s: Clause, variables) -> Clause:
    if s.bottom:
        raise BottomProjection("cannot project the unsatisfiable clause")
    drop = set(variables)
    return Clause(tuple(item for item in s.items if item[0] not in drop))


def leq(c: Clause, c2: Clause) -> bool:
    """True iff ``c`` is implied by ``c2``."""
    if c2.bottom:
        return True
    if c.bottom:
        return False
    other = dict(c2.items)
    for var, mask in c.items:
        m2 = other.get(var)
        if m2 is None or m2 & ~mask:
            return False
    return True


def map_instance(z: Mapping[int, int], domains: Domains) -> Clause:
    """The mapping function: a partial instance becomes a conjunction of literals."""
    masks = {}
    for var, val in z.items():
        domains.check_value(var, val)
        masks[var] = 1 << val
    return from_masks(masks, domains)


def relevance(s: Clause, var: int) -> bool:
    """Whether flipping ``var`` alone can change satisfaction of ``s``."""
    if s.bottom:
        return False
    return any(v == var for v, _ in s.items)


def satisfies(d: Mapping[int, int], s: Clause) -> bool:
    if s.bottom:
        return False
    for var, mask in s.items:
        try:
            val = d[var]
        except KeyError:
            raise ScopeError(f"instance does not assign variable {var}") from None
        if not (mask >> val) & 1:
            return False
    return True


def clause_count(s: Clause, scope: Sequence[int], domains: Domains) -> int:
    """Number of full instances of ``scope`` that satisfy ``s``."""
    if s.bottom:
        return 0
    masks = dict(s.items)
    n = 1
    for v in scope:
        m = masks.get(v)
        n *= domains[v] if m is None else bin(m).count("1")
    return n


def covers(clauses: Iterable[Clause], domains: Domains, budget: int = 200_000):
    """Decide whether every full instance satisfies at least one clause.

    Splits on the most frequently constrained variable, grouping values that
    every clause treats alike.  Returns True/False, or None when ``budget``
    recursive calls were not enough to decide.
    """
    calls = [0]

    def rec(cls: list[Clause]):
        calls[0] += 1
        if calls[0] > budget:
            raise _Budget
        if not cls:
            return False
        if any(not c.items for c in cls):
            return True
        counts = Counter(v for c in cls for v, _ in c.items)
        var = min(counts, key=lambda v: (-counts[v], v))
        constraining = [c for c in cls if c.allowed(var) is not None]
        free = [c for c in cls if c.allowed(var) is None]
        groups: dict[tuple[bool, ...], None] = {}
        for val in range(domains[var]):
            sig = tuple(bool((c.allowed(var) >> val) & 1) for c in constraining)
            groups.setdefault(sig, None)
        for sig in groups:
            sub = list(free)
            sub.extend(project(c, var) for c, ok in zip(constraining, sig) if ok)
            if not rec(sub):
                return False
        return True

    cls = [c for c in clauses if not c.bottom]
    try:
        return rec(cls)
    except _Budget:
        return None


class _Budget(Exception):
    pass


def mask_matrix(clauses: Sequence[Clause], columns: Sequence[int], domains: Domains):
    """Bitmask rows for ``clauses`` over ``columns`` (full mask when unconstrained)."""
    import numpy as np

    col_index = {v: j for j, v in enumerate(columns)}
    full = np.array([domains.full_mask(v) for v in columns], dtype=np.uint64)
    out = np.tile(full, (len(clauses), 1)) if clauses else np.zeros((0, len(columns)), dtype=np.uint64)
    for i, c in enumerate(clauses):
        for var, mask in c.items:
            out[i, col_index[var]] = mask
    return out
