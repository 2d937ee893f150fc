"""Time the compiled kernels against the pure-Python ones on identical inputs."""

import argparse
import statistics
import time

from ndsched import kernels
from ndsched.mdtopt import build_ilp, solve_exact
from ndsched.model import BpSet
from ndsched.rng import DrawStream
from ndsched.schedulers import TiebreakerRule, chan_train, greedy
from ndsched.sim import generate_neighbors, run_trial


def timed(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times), result


def cases(B, C, n, bb_B, bb_C):
    L = greedy(B, C, backend="python")
    nbs = generate_neighbors(B, C, n, DrawStream(1))
    model = build_ilp(bb_B, bb_C)
    return {
        "greedy-rnd-swt": lambda be: greedy(B, C, rule=TiebreakerRule("rnd-swt", 3), backend=be),
        "chan-train": lambda be: chan_train(B, C, backend=be),
        "branch-and-bound": lambda be: solve_exact(model, backend=be).mdt,
        "simulate": lambda be: run_trial(L, nbs, backend=be),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bp", default="16,27,35", help="beacon periods")
    ap.add_argument("--channels", "-c", type=int, default=12)
    ap.add_argument("--neighbors", "-n", type=int, default=200)
    ap.add_argument("--bb-bp", default="2,5,8,9,10", help="periods for the exact solver")
    ap.add_argument("--bb-channels", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if not kernels.compiled_available():
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    B = BpSet.parse(args.bp)
    bb_B = BpSet.parse(args.bb_bp)
    print(f"B={B} |C|={args.channels} neighbors={args.neighbors}; exact solver on B={bb_B} |C|={args.bb_channels}")
    print(f"{'kernel':<18}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for name, fn in cases(B, args.channels, args.neighbors, bb_B, args.bb_channels).items():
        tp, rp = timed(lambda: fn("python"), args.repeat)
        tc, rc = timed(lambda: fn("cython"), args.repeat)
        if rp != rc:
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<18}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
