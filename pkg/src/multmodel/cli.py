"""Command-line entry point: ``multmodel {query,convert,stats,validate,bench,oracle}``.

Exit codes: 0 success, 1 usage, 2 parse error, 3 invalid model,
4 numeric degeneracy, 5 capacity exceeded.
"""
from __future__ import annotations

import argparse
import itertools
import sys
import time

import numpy as np

from . import _kernels, generate, oracle
from .builders import from_table, to_positive, to_table
from .engine import (
    HEURISTICS,
    Network,
    interaction_graph,
    normalize,
    run_query,
)
from .errors import (
    CapacityExceeded,
    DegenerateZero,
    FormatError,
    MultModelError,
    OrderError,
    ParseError,
    QueryError,
    InvalidValue,
    TooLarge,
    ZeroEvidenceProbability,
)
from .io import read_model, write_model
from .model import MultiplicativeModel, stats, validate_partition
from .reference import table_query

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_INVALID, EXIT_NUMERIC, EXIT_CAPACITY = range(6)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated variable ids, got {text!r}") from None


def _evidence(text: str | None) -> dict[int, int]:
    if not text:
        return {}
    out = {}
    for part in text.split(","):
        if not part.strip():
            continue
        try:
            var, val = part.split("=")
            out[int(var)] = int(val)
        except ValueError:
            raise UsageError(f"bad evidence item {part!r}; use var=value") from None
    return out


def _fmt(x: float) -> str:
    return format(x, ".12g")


def _instances(net: Network, query):
    return itertools.product(*[range(net.domains[v]) for v in query])


def _print_table(net, query, columns, out):
    header = " ".join(f"X{v}" for v in query)
    print(f"{header}  " + "  ".join(name for name, _ in columns), file=out)
    for i, vals in enumerate(_instances(net, query)):
        cells = "  ".join(_fmt(col[i]) for _, col in columns)
        print(" ".join(f"{x:>{len(f'X{v}')}}" for x, v in zip(vals, query)) + "  " + cells,
              file=out)


def _describe(query, evidence):
    q = ",".join(f"X{v}" for v in query)
    if not evidence:
        return f"P({q})"
    e = ",".join(f"X{v}={val}" for v, val in sorted(evidence.items()))
    return f"P({q} | {e})"


# ------------------------------------------------------------------ commands


def cmd_query(args, out):
    net = read_model(args.model)
    query = _int_list(args.query)
    evidence = _evidence(args.evidence)
    order = _int_list(args.order) if args.order else None
    res = run_query(net, query, evidence, heuristic=args.heuristic, order=order,
                    candidates=args.candidates, debug=args.debug,
                    epsilon_zero=args.epsilon_zero)
    print(f"# {_describe(query, evidence)}  heuristic={args.heuristic} "
          f"order={','.join(map(str, res.trace.order)) or '-'}", file=out)
    columns = [("unnormalized", res.values)]
    if res.normalizer > 0:
        columns.append(("normalized", normalize(res).values))
    _print_table(net, query, columns, out)
    print(f"normalizer {_fmt(res.normalizer)}", file=out)
    for s in res.trace.steps:
        print(f"eliminate X{s.variable}: buckets={s.bucket_count} gathered={s.gathered_elements} "
              f"candidates={s.candidate_count} emitted={s.emitted_elements} "
              f"mults={s.multiplications} adds={s.additions}", file=out)
    t = res.trace
    print(f"total multiplications={t.multiplications} additions={t.additions} "
          f"max_candidates={t.max_candidates}"
          + (" epsilon_retry=yes" if t.epsilon_retry else ""), file=out)
    if res.normalizer == 0:
        raise ZeroEvidenceProbability("evidence has probability zero")
    return EXIT_OK


def _convert_factor(m: MultiplicativeModel, target: str, tol: float) -> MultiplicativeModel:
    if target == "table":
        return from_table(m.domains, m.scope, to_table(m))
    if target == "positive":
        return to_positive(m, tol)
    return MultiplicativeModel(m.domains, m.scope, m.elements)


def cmd_convert(args, out):
    net = read_model(args.model)
    factors = tuple(_convert_factor(f, args.to, args.tol) for f in net.factors)
    text = write_model(Network(net.domains, factors))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_stats(args, out):
    net = read_model(args.model)
    print(f"variables {net.n_vars}  factors {len(net.factors)}", file=out)
    print("factor kind scope elements max_arity naive_ops", file=out)
    for i, f in enumerate(net.factors):
        st = stats(f)
        ops = str(st.naive_op_count) + ("" if st.naive_exact else " (bound)")
        print(f"{i} {f.kind} {','.join(map(str, f.scope)) or '-'} {st.element_count} "
              f"{st.max_arity} {ops}", file=out)
    graph = interaction_graph(net.factors, range(net.n_vars))
    edges = sum(len(nb) for nb in graph.values()) // 2
    max_deg = max((len(nb) for nb in graph.values()), default=0)
    print(f"interaction graph: nodes={len(graph)} edges={edges} max_degree={max_deg}", file=out)
    return EXIT_OK


def cmd_validate(args, out):
    net = read_model(args.model)
    bad = 0
    for i, f in enumerate(net.factors):
        problems = []
        if not np.all(np.isfinite(f.gammas)):
            problems.append("non-finite parameter")
        if f.kind == "decision-graph" and not validate_partition(f):
            problems.append("paths do not partition the scope")
        if f.kind in ("table", "decision-graph", "noisy-or") and np.any(f.gammas < 0):
            problems.append("negative value")
        status = "ok" if not problems else "; ".join(problems)
        bad += bool(problems)
        print(f"factor {i} ({f.kind}): {status}", file=out)
    print("valid" if not bad else f"invalid: {bad} factor(s)", file=out)
    return EXIT_OK if not bad else EXIT_INVALID


def _bench_network(args):
    if args.model:
        return read_model(args.model)
    rng = np.random.default_rng(args.seed)
    if args.kind == "table":
        return generate.random_table_network(rng)
    if args.kind == "noisyor":
        net, _, _ = generate.bipartite_noisy_or(rng)
        return net
    return generate.random_network(rng)


def cmd_bench(args, out):
    net = _bench_network(args)
    query = _int_list(args.query) if args.query else [0]
    evidence = _evidence(args.evidence)
    if args.kind == "noisyor" and not args.model and not args.evidence:
        evidence = {v: 0 for v in range(10, net.n_vars)}
    t0 = time.perf_counter()
    res = run_query(net, query, evidence, heuristic=args.heuristic)
    t1 = time.perf_counter()
    ref, rtrace = table_query(net, query, evidence, res.trace.order)
    t2 = time.perf_counter()
    scale = np.maximum(np.abs(ref), np.finfo(float).tiny)
    rel = float(np.max(np.abs(res.values - ref) / scale)) if ref.size else 0.0
    print(f"# {_describe(query, evidence)}  variables={net.n_vars} factors={len(net.factors)} "
          f"kernels={_kernels.BACKEND}", file=out)
    if rel <= 1e-12:
        print(f"values agree <= 1e-12 (max relative difference {rel:.3g})", file=out)
    else:
        print(f"values differ: max relative difference {rel:.3g}", file=out)
    cands = [s.candidate_count for s in res.trace.steps]
    sizes = [sz // net.domains[s.variable] for sz, s in zip(rtrace.product_sizes, res.trace.steps)]
    print("step var candidates table_cells", file=out)
    for s, c, z in zip(res.trace.steps, cands, sizes):
        print(f"  X{s.variable} {c} {z}", file=out)
    print("candidate counts equal table sizes" if cands == sizes
          else "candidate counts differ from table sizes", file=out)
    print(f"multiplicative engine: multiplications={res.trace.multiplications} "
          f"additions={res.trace.additions} time={t1 - t0:.4f}s", file=out)
    print(f"table engine:          multiplications={rtrace.multiplications} "
          f"additions={rtrace.additions} time={t2 - t1:.4f}s", file=out)
    return EXIT_OK


def cmd_oracle(args, out):
    net = read_model(args.model)
    query = _int_list(args.query)
    evidence = _evidence(args.evidence)
    for v in query:
        net.domains.check_var(v)
    for v, val in evidence.items():
        net.domains.check_value(v, val)
    values = oracle.marginal(net, query, evidence)
    total = float(values.sum())
    print(f"# {_describe(query, evidence)}  brute force", file=out)
    columns = [("unnormalized", values)]
    if total > 0:
        columns.append(("normalized", values / total))
    _print_table(net, query, columns, out)
    print(f"normalizer {_fmt(total)}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="multmodel", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    q = sub.add_parser("query", help="exact posterior by variable elimination")
    q.add_argument("--model", required=True)
    q.add_argument("--query", required=True, help="comma-separated variable ids")
    q.add_argument("--evidence", help="var=value,...")
    q.add_argument("--heuristic", choices=HEURISTICS, default="min-fill")
    q.add_argument("--order", help="explicit elimination order, comma-separated")
    q.add_argument("--candidates", choices=("reduced", "full"), default="reduced")
    q.add_argument("--epsilon-zero", type=float, default=None,
                   help="retry degenerate eliminations with zeros replaced by this value")
    q.add_argument("--debug", action="store_true", help="check the unique-maximum invariant")
    q.set_defaults(func=cmd_query)

    c = sub.add_parser("convert", help="rewrite every factor as another kind")
    c.add_argument("--model", required=True)
    c.add_argument("--to", choices=("table", "positive", "mult"), required=True)
    c.add_argument("--tol", type=float, default=1e-9)
    c.add_argument("--output", "-o")
    c.set_defaults(func=cmd_convert)

    s = sub.add_parser("stats", help="per-factor structure statistics")
    s.add_argument("--model", required=True)
    s.set_defaults(func=cmd_stats)

    v = sub.add_parser("validate", help="partition and value checks")
    v.add_argument("--model", required=True)
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bench", help="compare against table-based elimination")
    b.add_argument("--model")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--kind", choices=("table", "mixed", "noisyor"), default="table")
    b.add_argument("--query")
    b.add_argument("--evidence")
    b.add_argument("--heuristic", choices=HEURISTICS, default="min-fill")
    b.set_defaults(func=cmd_bench)

    o = sub.add_parser("oracle", help="brute-force marginal")
    o.add_argument("--model", required=True)
    o.add_argument("--query", required=True)
    o.add_argument("--evidence")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    err = sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        return args.func(args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=err)
        return EXIT_USAGE
    except (QueryError, OrderError, InvalidValue) as exc:
        print(f"usage error: {exc}", file=err)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=err)
        return EXIT_PARSE
    except (DegenerateZero, ZeroEvidenceProbability) as exc:
        print(f"numeric error: {exc}", file=err)
        return EXIT_NUMERIC
    except (CapacityExceeded, TooLarge) as exc:
        print(f"capacity exceeded: {exc}", file=err)
        return EXIT_CAPACITY
    except (FormatError, MultModelError) as exc:
        print(f"invalid model: {exc}", file=err)
        return EXIT_INVALID
    except OSError as exc:
        print(f"usage error: {exc}", file=err)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
