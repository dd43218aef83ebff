"""Timing comparison of the exhaustive-enumeration backends.

Runs the same tilted-average workload (m_n for the depth-4 spin model)
under THERMOFORM_KERNEL=py and, when the extension is built,
THERMOFORM_KERNEL=c, printing the best-of wall times and the speedup:

    python benchmarks/bench_kernels.py --ns 12 16 20 22 --threads 4
"""

import argparse
import os
import time

import numpy as np

from thermoform.kernels import backend_name
from thermoform.meanfield import cylinder_indicator, enumerate_m_n
from thermoform.shift import SPINS, Product

DEPTH = 4


def geometric_product(u: float, depth: int) -> Product:
    weights = np.array([2.0 ** -(j + 1) for j in range(depth)])
    return Product(SPINS, 2.0, 0.0, tuple(u * weights / weights.sum()))


def best_of(n: int, repeats: int):
    direction = geometric_product(1.2, DEPTH)
    psi = cylinder_indicator(SPINS, (1.0, 1.0))
    best = float("inf")
    value = None
    for _ in range(repeats):
        start = time.perf_counter()
        est = enumerate_m_n(psi, n, 1.0, None, direction)
        best = min(best, time.perf_counter() - start)
        value = est.value
    return best, value


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--ns", type=int, nargs="+", default=[12, 16, 20, 22],
                        help="Birkhoff lengths to enumerate (words have n+3 spins)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: the library's own choice)")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timed repetitions per size; best is reported")
    args = parser.parse_args()
    if args.threads is not None:
        os.environ["THERMOFORM_THREADS"] = str(args.threads)

    modes = ["py"]
    os.environ["THERMOFORM_KERNEL"] = "c"
    try:
        backend_name(2)
        modes.append("c")
    except RuntimeError:
        print("compiled kernel not built; timing the NumPy backend only")

    print("%4s %12s %12s %12s %9s" % ("n", "words", "numpy[s]", "compiled[s]", "speedup"))
    for n in args.ns:
        timings = {}
        values = {}
        for mode in modes:
            os.environ["THERMOFORM_KERNEL"] = mode
            timings[mode], values[mode] = best_of(n, args.repeats)
        if "c" in values and abs(values["c"] - values["py"]) > 1e-12:
            print("backend values disagree at n=%d: %r vs %r"
                  % (n, values["py"], values["c"]))
            return 1
        compiled = "%12.4f" % timings["c"] if "c" in timings else "%12s" % "-"
        speedup = "%8.1fx" % (timings["py"] / timings["c"]) if "c" in timings else "%9s" % "-"
        print("%4d %12d %12.4f %s %s" % (n, 2 ** (n + DEPTH - 1), timings["py"], compiled, speedup))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
