"""Compile common factor representations into multiplicative models, and back."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DuplicateTerm,
    FormatError,
    NonPositiveTable,
    NotAPartition,
    TooManyParents,
)
from .lattice import TOP, Clause, Domains, map_instance
from .model import (
    DEFAULT_ENUM_CAP,
    MultiplicativeModel,
    _table_and_ops,
    prune_units,
    validate_partition,
)

DEFAULT_MAX_PARENTS = 20


@dataclass(frozen=True)
class NoisyOrSpec:
    """P(child=0 | parents) = leak * prod of inhibitors over active parents."""

    child: int
    parents: tuple[int, ...]
    leak: float
    inhibitors: tuple[float, ...]


@dataclass(frozen=True)
class DecisionGraphSpec:
    scope: tuple[int, ...]
    paths: tuple[tuple[Clause, float], ...]


@dataclass(frozen=True)
class LogLinearSpec:
    scope: tuple[int, ...]
    mu: float
    terms: tuple[tuple[tuple[tuple[int, int], ...], float], ...]


def _as_values(domains: Domains, scope: Sequence[int], values) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    size = domains.joint_size(scope)
    if arr.size != size:
        raise FormatError(f"table over {tuple(scope)} needs {size} values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise FormatError("table values must be finite")
    return arr


def from_table(domains: Domains, scope: Sequence[int], values) -> MultiplicativeModel:
    """One element per full instance; ``values`` is row-major, last variable fastest."""
    scope = tuple(scope)
    arr = _as_values(domains, scope, values)
    ranges = [range(domains[v]) for v in scope]
    elements = []
    for idx, vals in enumerate(itertools.product(*ranges)):
        elements.append((map_instance(dict(zip(scope, vals)), domains), float(arr[idx])))
    return MultiplicativeModel(domains, scope, tuple(elements), kind="table")


def to_table(m: MultiplicativeModel, cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
    """Evaluate ``m`` at every full instance of its scope (flat, last variable fastest)."""
    values, _ = _table_and_ops(m, cap)
    return values


def positive_from_table(domains: Domains, scope: Sequence[int], values,
                        tol: float = 1e-9) -> MultiplicativeModel:
    """Parameterize a strictly positive table by its non-zero instantiations.

    The log table is differenced against value 0 along every axis; the entry
    at index ``z`` is then the alternating sum over sub-instantiations of the
    non-zero part of ``z``, which is the log parameter of that clause.
    """
    scope = tuple(scope)
    arr = _as_values(domains, scope, values)
    if np.any(arr <= 0):
        raise NonPositiveTable("positive models need strictly positive tables")
    shape = tuple(domains[v] for v in scope)
    coef = np.log(arr).reshape(shape) if shape else np.log(arr).reshape(())
    for axis in range(len(shape)):
        base = np.take(coef, [0], axis=axis)
        coef = np.concatenate(
            [base, np.take(coef, range(1, shape[axis]), axis=axis) - base], axis=axis)
    elements = []
    for idx in itertools.product(*[range(k) for k in shape]):
        z = {v: val for v, val in zip(scope, idx) if val != 0}
        clause = map_instance(z, domains) if z else TOP
        elements.append((clause, math.exp(float(coef[idx]))))
    model = MultiplicativeModel(domains, scope, tuple(elements), kind="positive")
    return prune_units(model, tol)


def to_positive(m: MultiplicativeModel, tol: float = 1e-9,
                cap: int = DEFAULT_ENUM_CAP) -> MultiplicativeModel:
    return positive_from_table(m.domains, m.scope, to_table(m, cap), tol)


def from_decision_graph(domains: Domains, spec: DecisionGraphSpec) -> MultiplicativeModel:
    """One element per root-to-leaf path; the paths must partition the scope."""
    model = MultiplicativeModel(domains, tuple(spec.scope), tuple(spec.paths),
                                kind="decision-graph")
    if not validate_partition(model):
        raise NotAPartition("decision-graph paths do not partition the instance space")
    return model


def from_noisy_or(domains: Domains, spec: NoisyOrSpec,
                  max_parents: int = DEFAULT_MAX_PARENTS) -> MultiplicativeModel:
    """Noisy-OR CPT as a multiplicative model.

    Elements: ``{E=0}`` carries the leak, ``{E=0, C_i=1}`` carries inhibitor
    ``q_i``, and one ``{E=1} & f(c)`` element per parent configuration holds
    ``1 - leak * prod q_i``.
    """
    parents = tuple(spec.parents)
    q = tuple(float(x) for x in spec.inhibitors)
    if len(q) != len(parents):
        raise FormatError("one inhibitor per parent is required")
    if len(set(parents)) != len(parents) or spec.child in parents:
        raise FormatError("noisy-OR variables must be distinct")
    if len(parents) > max_parents:
        raise TooManyParents(f"{len(parents)} parents exceeds cap {max_parents}")
    for v in (spec.child, *parents):
        domains.check_var(v)
        if domains[v] != 2:
            raise FormatError(f"noisy-OR variable {v} must be binary")
    if not 0.0 < spec.leak <= 1.0:
        raise FormatError(f"leak {spec.leak} not in (0, 1]")
    if any(not 0.0 <= x <= 1.0 for x in q):
        raise FormatError("inhibitors must lie in [0, 1]")

    child = spec.child
    elements = [(map_instance({child: 0}, domains), float(spec.leak))]
    for p, qi in zip(parents, q):
        elements.append((map_instance({child: 0, p: 1}, domains), qi))
    for config in itertools.product((0, 1), repeat=len(parents)):
        off = float(spec.leak)
        for bit, qi in zip(config, q):
            if bit:
                off *= qi
        z = dict(zip(parents, config))
        z[child] = 1
        elements.append((map_instance(z, domains), 1.0 - off))
    scope = (*parents, child)
    return MultiplicativeModel(domains, scope, tuple(elements), kind="noisy-or",
                               source=NoisyOrSpec(child, parents, float(spec.leak), q))


def from_loglinear(domains: Domains, spec: LogLinearSpec) -> MultiplicativeModel:
    scope = tuple(spec.scope)
    inscope = set(scope)
    elements = [(TOP, math.exp(spec.mu))]
    seen = set()
    terms = []
    for literals, lam in spec.terms:
        lits = tuple(sorted((int(v), int(val)) for v, val in dict(literals).items()))
        if not lits:
            raise FormatError("log-linear terms need at least one literal")
        if len(lits) != len(literals):
            raise FormatError(f"repeated variable in term {literals}")
        if any(v not in inscope for v, _ in lits):
            raise FormatError(f"term {lits} leaves the scope {scope}")
        if lits in seen:
            raise DuplicateTerm(f"duplicate log-linear term {lits}")
        seen.add(lits)
        clause = map_instance(dict(lits), domains)
        if clause.is_top:
            raise FormatError(f"term {lits} constrains nothing")
        terms.append((lits, float(lam)))
        elements.append((clause, math.exp(lam)))
    src = LogLinearSpec(scope, float(spec.mu), tuple(terms))
    return MultiplicativeModel(domains, scope, tuple(elements), kind="log-linear", source=src)

