"""Plain table-based variable elimination, the baseline the engine is compared to."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .engine import Network
from .oracle import factor_table


@dataclass
class TableFactor:
    variables: tuple[int, ...]
    values: np.ndarray  # one axis per variable


@dataclass
class TableTrace:
    product_sizes: list[int] = field(default_factory=list)
    multiplications: int = 0
    additions: int = 0


def _expand(f: TableFactor, variables: Sequence[int]) -> np.ndarray:
    perm = [f.variables.index(v) for v in variables if v in f.variables]
    arr = np.transpose(f.values, perm)
    shape = [f.values.shape[f.variables.index(v)] if v in f.variables else 1
             for v in variables]
    return arr.reshape(shape)


def _multiply(factors: Sequence[TableFactor], variables: Sequence[int], domains, trace):
    shape = tuple(domains[v] for v in variables)
    out = np.ones(shape)
    for f in factors:
        out = out * _expand(f, variables)
    trace.multiplications += int(np.prod(shape, dtype=np.int64)) * len(factors)
    return out


def table_query(net: Network, query: Sequence[int], evidence: Mapping[int, int] | None,
                order: Sequence[int]) -> tuple[np.ndarray, TableTrace]:
    """Unnormalized ``P(query, evidence)`` with dense tables, eliminating in ``order``."""
    evidence = dict(evidence or {})
    domains = net.domains
    trace = TableTrace()
    live = []
    for m in net.factors:
        arr = factor_table(m).reshape(tuple(domains[v] for v in m.scope))
        index = tuple(evidence[v] if v in evidence else slice(None) for v in m.scope)
        arr = arr[index] if m.scope else arr
        live.append(TableFactor(tuple(v for v in m.scope if v not in evidence),
                                np.asarray(arr, dtype=float)))
    for var in order:
        bucket = [f for f in live if var in f.variables]
        live = [f for f in live if var not in f.variables]
        scope = sorted({v for f in bucket for v in f.variables})
        if not scope:
            scope = [var]
        prod = _multiply(bucket, scope, domains, trace)
        trace.product_sizes.append(prod.size)
        axis = scope.index(var)
        trace.additions += prod.size - prod.size // domains[var]
        summed = prod.sum(axis=axis)
        live.append(TableFactor(tuple(v for v in scope if v != var), summed))
    query = tuple(query)
    final = _multiply(live, query, domains, trace)
    return np.ascontiguousarray(final).ravel(), trace
