"""Brute-force reference semantics: full joint enumeration and direct marginals.

Deliberately shares no code path with the engine or the bitmask kernels:
each element is expanded into a dense boolean tensor as the outer product of
its per-variable allowed-value indicators.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .engine import Network
from .errors import TooLarge
from .lattice import Domains
from .model import MultiplicativeModel

DEFAULT_CAP = 1 << 24


@dataclass(frozen=True)
class JointTable:
    scope: tuple[int, ...]
    values: np.ndarray


def _indicator(mask: int, card: int) -> np.ndarray:
    return np.array([(mask >> j) & 1 for j in range(card)], dtype=bool)


def product_table(models: Sequence[MultiplicativeModel], variables: Sequence[int],
                  domains: Domains) -> np.ndarray:
    """Dense product of ``models`` with one axis per entry of ``variables``."""
    variables = tuple(variables)
    axis = {v: i for i, v in enumerate(variables)}
    shape = tuple(domains[v] for v in variables)
    out = np.ones(shape)
    for m in models:
        for clause, gamma in m.elements:
            sat = np.ones(shape, dtype=bool)
            for var, mask in clause.items:
                ind_shape = [1] * len(shape)
                ind_shape[axis[var]] = domains[var]
                sat = sat & _indicator(mask, domains[var]).reshape(ind_shape)
            out = np.where(sat, out * gamma, out)
    return out


def factor_table(m: MultiplicativeModel) -> np.ndarray:
    """Values of one model over its own scope, flat, last variable fastest."""
    return product_table([m], m.scope, m.domains).ravel()


def joint(net: Network, cap: int = DEFAULT_CAP) -> JointTable:
    scope = tuple(range(net.n_vars))
    size = net.domains.joint_size(scope)
    if size > cap:
        raise TooLarge(f"joint of {size} cells exceeds cap {cap}")
    values = product_table(net.factors, scope, net.domains)
    return JointTable(scope, values.ravel())


def marginal(net: Network, query: Sequence[int], evidence: Mapping[int, int] | None = None,
             cap: int = DEFAULT_CAP) -> np.ndarray:
    """Unnormalized ``P(query, evidence)`` by summing the joint (query order, last fastest)."""
    evidence = dict(evidence or {})
    jt = joint(net, cap)
    shape = tuple(net.domains[v] for v in jt.scope)
    arr = jt.values.reshape(shape) if shape else jt.values.reshape(())
    index = tuple(slice(evidence[v], evidence[v] + 1) if v in evidence else slice(None)
                  for v in jt.scope)
    arr = arr[index]
    query = tuple(query)
    other = tuple(i for i, v in enumerate(jt.scope) if v not in query)
    arr = arr.sum(axis=other, keepdims=True) if other else arr
    arr = arr.reshape(tuple(net.domains[v] for v in jt.scope if v in query))
    present = [v for v in jt.scope if v in query]
    arr = np.transpose(arr, [present.index(v) for v in query])
    return np.ascontiguousarray(arr).ravel()
