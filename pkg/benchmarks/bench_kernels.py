"""Compare the numba kernels with the plain numpy fallback.

Two measurements:

* per kernel, the compiled function against its ``.py_func`` on the same
  small random inputs (in process, after a warm-up call);
* end to end, a short appendix fuzz run in fresh interpreters with
  ``RELCALC_NUMBA=1`` and ``RELCALC_NUMBA=0``.

Usage::

    python3 benchmarks/bench_kernels.py [--dim 6] [--repeat 5] [--trials 20]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from relcalc import _kernels as K


def kernel_cases(rng, n):
    a = rng.standard_normal((n, n))
    sym = a @ a.T
    q, _ = np.linalg.qr(rng.standard_normal((2 * n, n)))
    q2, _ = np.linalg.qr(rng.standard_normal((2 * n, n)))
    return {
        "_range_basis": (a, 1e-9, 1.0),
        "_rank": (a, 1e-9, 1.0),
        "_complement_basis": (q, 1e-9),
        "_null_space": (a[: n - 1], 1e-9, 1.0),
        "_pinv": (a, 1e-9, 1.0),
        "_graph_split": (q, n, 1e-9),
        "_sym_eig": (sym,),
        "_psd_sqrt": (sym, 1e-9),
        "_proj_dist": (q, q2),
    }


def bench_kernels(n, repeat, number):
    rows = []
    cases = kernel_cases(np.random.default_rng(0), n)
    for name, args in cases.items():
        fn = getattr(K, name)
        py = getattr(fn, "py_func", fn)
        fn(*args)  # compile / warm the cache
        t_fast = min(timeit.repeat(lambda: fn(*args), repeat=repeat, number=number)) / number
        t_py = min(timeit.repeat(lambda: py(*args), repeat=repeat, number=number)) / number
        rows.append((name, t_fast, t_py))
    return rows


FUZZ_SNIPPET = (
    "import time; from relcalc.fuzz import fuzz; "
    "fuzz('appendix', (1, 4), 1, 0, jobs=1); "  # warm-up (numba compile / cache load)
    "t = time.perf_counter(); fuzz('appendix', (1, 4), {trials}, 42, jobs=1); "
    "print(time.perf_counter() - t)"
)


def bench_fuzz(trials):
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, RELCALC_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", FUZZ_SNIPPET.format(trials=trials)],
                             env=env, capture_output=True, text=True, check=True)
        out[flag] = float(res.stdout.strip().splitlines()[-1])
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=6)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=2000)
    ap.add_argument("--trials", type=int, default=20, help="fuzz trials per dimension pair")
    args = ap.parse_args(argv)

    if not K.USE_NUMBA:
        print("numba disabled or missing; kernel timings compare numpy with itself")
    print(f"kernels at n = {args.dim} (best of {args.repeat} x {args.number} calls)")
    print(f"  {'kernel':<20}{'numba us':>12}{'numpy us':>12}{'speedup':>10}")
    for name, fast, py in bench_kernels(args.dim, args.repeat, args.number):
        print(f"  {name:<20}{fast * 1e6:12.2f}{py * 1e6:12.2f}{py / fast:10.2f}")

    t = bench_fuzz(args.trials)
    print(f"appendix fuzz, dims 1..4, {args.trials} trials: "
          f"numba {t['1']:.2f}s, numpy {t['0']:.2f}s, speedup {t['0'] / t['1']:.2f}")


if __name__ == "__main__":
    main()
