"""Witness kernel and end-to-end timings, compiled kernels vs the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 2000 8000] [--repeat 3]

The end-to-end part runs each backend in a child process, since the backend
is fixed when ``ckdecide.kernels`` is imported.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from ckdecide import kernels

END_TO_END = r"""
import json, random, time
from ckdecide import decide
from ckdecide.genformulas import FreshPropPool, phi_Gp, psi_G, psi_m, random_nested, random_table
from ckdecide.setalgebra import Name
rng = random.Random(7)
table = random_table(rng, 3, 4)
names = [Name(n) for n in table.names]
nested = random_nested(rng, table, 1)
cases = {
    "phi_Gp depth 1": phi_Gp(nested, FreshPropPool()),
    "psi_G depth 1": psi_G(nested, FreshPropPool()),
    "psi_m m=1": psi_m(1, names[0], names[1:2], FreshPropPool()),
}
decide(cases["phi_Gp depth 1"], table, "s4")  # load compiled kernels before timing
out = {}
for label, f in cases.items():
    for logic in ("s4", "s5", "kd45"):
        t0 = time.perf_counter()
        v = decide(f, table, logic)
        out[f"{logic}: {label} ({v.engine.n_initial} states)"] = [v.sat, time.perf_counter() - t0]
print(json.dumps(out))
"""


def random_keys(rng: np.random.Generator, n: int, bits: int) -> np.ndarray:
    return rng.integers(0, 1 << bits, size=n, dtype=np.uint64)


def time_kernel(n: int, repeat: int, numpy_only: bool) -> float:
    rng = np.random.default_rng(n)
    qa, qb = random_keys(rng, n, 20), random_keys(rng, n, 20)
    ta, tb = random_keys(rng, n, 20), random_keys(rng, n, 20)
    tv = random_keys(rng, n, 40)
    kernels.witness_or(qa[:8], qb[:8], ta[:8], tb[:8], tv[:8], numpy_only=numpy_only)  # warm-up / compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        kernels.witness_or(qa, qb, ta, tb, tv, numpy_only=numpy_only)
        best = min(best, time.perf_counter() - t0)
    return best


def end_to_end(no_numba: bool) -> dict:
    env = dict(os.environ)
    if no_numba:
        env["CKDECIDE_NO_NUMBA"] = "1"
    else:
        env.pop("CKDECIDE_NO_NUMBA", None)
    res = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[2000, 8000])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"numba kernels available: {kernels.USE_NUMBA}")
    print(f"{'n':>8} {'numba s':>10} {'numpy s':>10} {'speedup':>8}")
    for n in args.sizes:
        fast = time_kernel(n, args.repeat, numpy_only=False) if kernels.USE_NUMBA else float("nan")
        slow = time_kernel(n, args.repeat, numpy_only=True)
        print(f"{n:>8} {fast:>10.4f} {slow:>10.4f} {slow / fast:>8.1f}")
    a, b = end_to_end(False), end_to_end(True)
    print(f"\n{'case':<48} {'numba s':>9} {'numpy s':>9}")
    for key in a:
        if a[key][0] != b[key][0]:
            raise SystemExit(f"backends disagree on {key}")
        print(f"{key:<48} {a[key][1]:>9.4f} {b[key][1]:>9.4f}")


if __name__ == "__main__":
    main()
