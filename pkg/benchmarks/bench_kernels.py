"""Compare the numba and numpy kernel backends.

Two measurements:

* direct kernel calls on synthetic clause matrices (after a warm-up call so
  JIT compilation is excluded), and
* end-to-end queries in fresh subprocesses with ``MULTMODEL_DISABLE_NUMBA``
  toggled, which includes import and cached-compilation cost.

Usage: ``python benchmarks/bench_kernels.py [--repeat N] [--sizes 200,800]``
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from multmodel import _kernels
from multmodel.lattice import Domains, from_masks, mask_matrix
from multmodel.model import instance_array

END_TO_END = """
import time
import numpy as np
from multmodel import _kernels, generate
from multmodel.engine import run_query
t0 = time.perf_counter()
for seed in range({n}):
    net = generate.random_network(np.random.default_rng(seed), max_vars=12)
    run_query(net, [0])
net, findings, _ = generate.bipartite_noisy_or(np.random.default_rng(0))
for d in range(10):
    run_query(net, [d], {{f: 0 for f in findings}})
print(_kernels.BACKEND, time.perf_counter() - t0)
"""


def synthetic(rng, n_rows, domains):
    rows = []
    for _ in range(n_rows):
        masks = {}
        for v in range(len(domains)):
            if rng.random() < 0.4:
                m = int(rng.integers(1, domains.full_mask(v)))
                masks[v] = m
        rows.append(from_masks(masks, domains))
    return mask_matrix(rows, list(range(len(domains))), domains)


def time_kernels(n_rows, repeat):
    rng = np.random.default_rng(n_rows)
    d = Domains((3, 2, 4, 2, 3, 2, 4))
    elems = synthetic(rng, n_rows, d)
    gammas = rng.uniform(0.5, 1.5, size=n_rows)
    cands = synthetic(rng, n_rows, d)
    vcol = len(d) - 1
    cands[:, vcol] = d.full_mask(vcol)
    inst = instance_array(d, range(len(d)))
    rows = []
    for name in _kernels.available_backends():
        ev, nu, te = _kernels._IMPLS[name]
        num, _ = nu(elems, gammas, cands, vcol, d[vcol])
        # more allowed bits means more general: a valid minimal-first order
        bits = np.array([sum(bin(int(x)).count("1") for x in row) for row in cands])
        order = np.argsort(-bits, kind="stable")
        sorted_cands = cands[order]
        calls = {
            "eval_products": lambda: ev(elems, gammas, inst),
            "numerators": lambda: nu(elems, gammas, cands, vcol, d[vcol]),
            "telescope": lambda: te(sorted_cands, num[order], 1e-12),
        }
        for kernel, fn in calls.items():
            fn()  # warm-up: compile or load from cache
            best = min(timeit.repeat(fn, number=1, repeat=repeat))
            rows.append((n_rows, kernel, name, best))
    return rows


def end_to_end(n_networks):
    out = {}
    for flag in ("1", "0"):
        env = {**os.environ, "MULTMODEL_DISABLE_NUMBA": flag}
        proc = subprocess.run([sys.executable, "-c", END_TO_END.format(n=n_networks)],
                              env=env, capture_output=True, text=True, check=True)
        backend, seconds = proc.stdout.split()
        out[backend] = float(seconds)
    return out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--sizes", default="100,400,1600")
    p.add_argument("--networks", type=int, default=100)
    args = p.parse_args(argv)

    print(f"{'rows':>6} {'kernel':<14} {'backend':<7} {'seconds':>10}")
    for n in (int(s) for s in args.sizes.split(",")):
        for rows, kernel, name, sec in time_kernels(n, args.repeat):
            print(f"{rows:>6} {kernel:<14} {name:<7} {sec:>10.5f}")
    print()
    print("end-to-end (fresh process, includes import):")
    for backend, sec in end_to_end(args.networks).items():
        print(f"  {backend:<7} {sec:.3f}s")


if __name__ == "__main__":
    main()
