"""MULTMODEL text format and UAI table ingestion.

MULTMODEL is whitespace tokenized; ``#`` starts a comment::

    MULTMODEL 1
    VARS 2
    DOMS 2 2
    TABLE 2 0 1
    0.56 0.14 0.12 0.18
    MULT 1 0 2
    0.25 1 0:{1}
    2 0
    DGRAPH ...        (same body as MULT; must partition the scope)
    NOISYOR child m p_1 .. p_m c0 q_1 .. q_m
    LOGLIN a v_1 .. v_a t
    mu 0
    lambda m var:{j} ..

TABLE values are row-major with the last listed variable fastest.  An
element line is ``gamma m`` followed by ``m`` literals ``var:{j|j|..}``;
``m = 0`` is TOP.  Reals are written with 17 significant digits so doubles
survive a round trip bit for bit.
"""
from __future__ import annotations

import math
import re
from typing import Iterator

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
from .errors import FormatError, MultModelError, ParseError
from .lattice import Clause, Domains, from_masks, map_instance, mask_values
from .model import MultiplicativeModel

_LITERAL = re.compile(r"^(\d+):\{(\d+(?:\|\d+)*)?\}$")
BLOCKS = ("TABLE", "MULT", "DGRAPH", "NOISYOR", "LOGLIN")


class _Tokens:
    def __init__(self, text: str):
        self.toks: list[tuple[str, int]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0]
            self.toks.extend((t, lineno) for t in line.split())
        self.pos = 0

    def done(self) -> bool:
        return self.pos >= len(self.toks)

    @property
    def line(self) -> int | None:
        if self.done():
            return self.toks[-1][1] if self.toks else None
        return self.toks[self.pos][1]

    def next(self, what: str) -> str:
        if self.done():
            raise ParseError(f"unexpected end of input, expected {what}", self.line)
        tok = self.toks[self.pos][0]
        self.pos += 1
        return tok

    def int(self, what: str) -> int:
        line = self.line
        tok = self.next(what)
        try:
            return int(tok)
        except ValueError:
            raise ParseError(f"expected integer {what}, got {tok!r}", line) from None

    def float(self, what: str) -> float:
        line = self.line
        tok = self.next(what)
        try:
            return float(tok)
        except ValueError:
            raise ParseError(f"expected real {what}, got {tok!r}", line) from None

    def literal(self) -> tuple[int, tuple[int, ...]]:
        line = self.line
        tok = self.next("literal var:{j|..}")
        match = _LITERAL.match(tok)
        if not match:
            raise ParseError(f"malformed literal {tok!r}", line)
        values = tuple(int(x) for x in match.group(2).split("|")) if match.group(2) else ()
        return int(match.group(1)), values


def _scope(tk: _Tokens, domains: Domains, line) -> tuple[int, ...]:
    a = tk.int("scope size")
    scope = tuple(tk.int("scope variable") for _ in range(a))
    for v in scope:
        if not 0 <= v < len(domains):
            raise FormatError(f"line {line}: unknown variable {v}")
    if len(set(scope)) != len(scope):
        raise FormatError(f"line {line}: repeated variable in scope {scope}")
    return scope


def _elements(tk: _Tokens, domains: Domains, scope, count: int):
    inscope = set(scope)
    out = []
    for _ in range(count):
        line = tk.line
        gamma = tk.float("element parameter")
        m = tk.int("literal count")
        masks: dict[int, int] = {}
        for _ in range(m):
            var, values = tk.literal()
            if var not in inscope:
                raise FormatError(f"line {line}: variable {var} not in block scope {scope}")
            if var in masks:
                raise FormatError(f"line {line}: variable {var} repeated in one element")
            if not values:
                raise FormatError(f"line {line}: empty value set for variable {var}")
            mask = 0
            for j in values:
                if not 0 <= j < domains[var]:
                    raise FormatError(f"line {line}: value {j} out of domain for {var}")
                mask |= 1 << j
            masks[var] = mask
        out.append((from_masks(masks, domains), gamma))
    return out


def _block(tk: _Tokens, kind: str, domains: Domains) -> MultiplicativeModel:
    line = tk.line
    if kind == "TABLE":
        scope = _scope(tk, domains, line)
        n = domains.joint_size(scope)
        values = [tk.float("table value") for _ in range(n)]
        return from_table(domains, scope, values)
    if kind in ("MULT", "DGRAPH"):
        scope = _scope(tk, domains, line)
        e = tk.int("element count")
        elements = _elements(tk, domains, scope, e)
        if kind == "MULT":
            return MultiplicativeModel(domains, scope, tuple(elements))
        return from_decision_graph(domains, DecisionGraphSpec(scope, tuple(elements)))
    if kind == "NOISYOR":
        child = tk.int("child")
        m = tk.int("parent count")
        parents = tuple(tk.int("parent") for _ in range(m))
        leak = tk.float("leak")
        q = tuple(tk.float("inhibitor") for _ in range(m))
        for v in (child, *parents):
            if not 0 <= v < len(domains):
                raise FormatError(f"line {line}: unknown variable {v}")
        return from_noisy_or(domains, NoisyOrSpec(child, parents, leak, q))
    if kind == "LOGLIN":
        scope = _scope(tk, domains, line)
        t = tk.int("term count")
        mu = None
        terms = []
        for _ in range(t):
            tline = tk.line
            lam = tk.float("term weight")
            m = tk.int("literal count")
            lits = []
            for _ in range(m):
                var, values = tk.literal()
                if len(values) != 1:
                    raise FormatError(f"line {tline}: log-linear literals take one value")
                lits.append((var, values[0]))
            if m == 0:
                if mu is not None:
                    raise FormatError(f"line {tline}: more than one mean term")
                mu = lam
            else:
                if len({v for v, _ in lits}) != len(lits):
                    raise FormatError(f"line {tline}: variable repeated in term")
                terms.append((tuple(lits), lam))
        return from_loglinear(domains, LogLinearSpec(scope, mu or 0.0, tuple(terms)))
    raise ParseError(f"unknown block {kind!r}", line)


def parse_model(text: str) -> Network:
    """Parse MULTMODEL text, or a UAI MARKOV/BAYES file (tables only)."""
    tk = _Tokens(text)
    if tk.done():
        raise ParseError("empty model file", 1)
    head = tk.toks[0][0]
    if head in ("MARKOV", "BAYES"):
        return _parse_uai(tk)
    if head != "MULTMODEL":
        raise ParseError(f"expected MULTMODEL header, got {head!r}", tk.line)
    tk.next("header")
    version = tk.int("format version")
    if version != 1:
        raise ParseError(f"unsupported format version {version}", tk.toks[1][1])
    if tk.next("VARS") != "VARS":
        raise ParseError("expected VARS", tk.toks[tk.pos - 1][1])
    n = tk.int("variable count")
    if tk.next("DOMS") != "DOMS":
        raise ParseError("expected DOMS", tk.toks[tk.pos - 1][1])
    try:
        domains = Domains(tuple(tk.int("cardinality") for _ in range(n)))
    except FormatError as exc:
        raise FormatError(f"line {tk.line}: {exc}") from None
    factors = []
    while not tk.done():
        line = tk.line
        kind = tk.next("block keyword")
        if kind not in BLOCKS:
            raise ParseError(f"unknown block keyword {kind!r}", line)
        try:
            factors.append(_block(tk, kind, domains))
        except (ParseError, FormatError):
            raise
        except MultModelError as exc:
            raise FormatError(f"line {line}: {exc}") from exc
    return Network(domains, tuple(factors))


def _parse_uai(tk: _Tokens) -> Network:
    tk.next("network type")
    n = tk.int("variable count")
    try:
        domains = Domains(tuple(tk.int("cardinality") for _ in range(n)))
    except FormatError as exc:
        raise FormatError(f"line {tk.line}: {exc}") from None
    n_factors = tk.int("factor count")
    scopes = []
    for _ in range(n_factors):
        line = tk.line
        scopes.append((_scope(tk, domains, line), line))
    factors = []
    for scope, line in scopes:
        count = tk.int("table size")
        if count != domains.joint_size(scope):
            raise FormatError(
                f"line {line}: factor over {scope} declares {count} entries, "
                f"needs {domains.joint_size(scope)}")
        values = [tk.float("table value") for _ in range(count)]
        factors.append(from_table(domains, scope, values))
    return Network(domains, tuple(factors))


# ------------------------------------------------------------------- writing


def _num(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise FormatError(f"cannot serialize non-finite value {x}")
    return format(x, ".17g")


def _literal(var: int, mask: int) -> str:
    return f"{var}:{{{'|'.join(map(str, mask_values(mask)))}}}"


def _element_line(clause: Clause, gamma: float) -> str:
    parts = [_num(gamma), str(clause.arity)]
    parts.extend(_literal(v, m) for v, m in clause.items)
    return " ".join(parts)


def _table_values(m: MultiplicativeModel):
    """Cell values if ``m`` holds exactly one element per full instance, else None."""
    if len(m.elements) != m.joint_size():
        return None
    lookup = dict(m.elements)
    values = []
    for inst in m.instances():
        c = map_instance(inst, m.domains)
        if c not in lookup:
            return None
        values.append(lookup[c])
    return values


def _write_factor(m: MultiplicativeModel) -> Iterator[str]:
    scope = f"{len(m.scope)} {' '.join(map(str, m.scope))}".rstrip()
    if m.kind == "table":
        values = _table_values(m)
        if values is not None:
            yield f"TABLE {scope}"
            yield " ".join(_num(v) for v in values)
            return
    if m.kind == "noisy-or" and isinstance(m.source, NoisyOrSpec):
        s = m.source
        yield " ".join(["NOISYOR", str(s.child), str(len(s.parents)), *map(str, s.parents),
                        _num(s.leak), *map(_num, s.inhibitors)])
        return
    if m.kind == "log-linear" and isinstance(m.source, LogLinearSpec):
        s = m.source
        yield f"LOGLIN {scope} {len(s.terms) + 1}"
        yield f"{_num(s.mu)} 0"
        for lits, lam in s.terms:
            yield " ".join([_num(lam), str(len(lits)), *(f"{v}:{{{j}}}" for v, j in lits)])
        return
    keyword = "DGRAPH" if m.kind == "decision-graph" else "MULT"
    yield f"{keyword} {scope} {len(m.elements)}"
    for clause, gamma in m.elements:
        yield _element_line(clause, gamma)


def write_model(net: Network) -> str:
    lines = ["MULTMODEL 1", f"VARS {net.n_vars}",
             " ".join(["DOMS", *map(str, net.domains.cardinalities)]).rstrip()]
    for f in net.factors:
        lines.extend(_write_factor(f))
    return "\n".join(lines) + "\n"


def read_model(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())
