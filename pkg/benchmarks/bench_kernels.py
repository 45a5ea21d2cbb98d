"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py --size 64 --channels 4 --regions 5
"""

import argparse
import timeit

import numpy as np

from cxd.kernels import _numpy

try:
    from cxd.kernels import _numba
except ImportError:  # numba missing
    _numba = None


def cases(size: int, channels: int, regions: int, tokens: int, seed: int):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(size, size, channels))
    mask = rng.random((size, size)) < 0.3
    stack = rng.normal(size=(regions, size, size, channels))
    masks = rng.random((regions, size, size)) < 0.3
    q = rng.normal(size=(size * size, 8))
    k = rng.normal(size=(tokens, 8))
    v = rng.normal(size=(tokens, channels))
    return {
        "enhance": lambda m: m.enhance(z, mask, 0.5),
        "suppress": lambda m: m.suppress(z, mask, 0.5),
        "composite": lambda m: m.composite(stack, masks, z),
        "blend": lambda m: m.blend(z, stack[0], 0.7),
        "attention": lambda m: m.attention(q, k, v, 0.35),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--channels", type=int, default=4)
    ap.add_argument("--regions", type=int, default=5)
    ap.add_argument("--tokens", type=int, default=77)
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    impls = {"numpy": _numpy}
    if _numba is not None:
        impls["numba"] = _numba
    table = cases(args.size, args.channels, args.regions, args.tokens, args.seed)

    print(f"grid {args.size}x{args.size}x{args.channels}, {args.regions} regions, "
          f"{args.tokens} tokens, best of 5 x {args.repeat} calls")
    print(f"{'kernel':<10}" + "".join(f"{name + ' (us)':>14}" for name in impls) + f"{'speedup':>10}")
    for kernel, fn in table.items():
        times = {}
        for name, mod in impls.items():
            fn(mod)  # compile / warm caches
            best = min(timeit.repeat(lambda: fn(mod), number=args.repeat, repeat=5))
            times[name] = best / args.repeat * 1e6
        row = f"{kernel:<10}" + "".join(f"{t:>14.1f}" for t in times.values())
        if "numba" in times:
            row += f"{times['numpy'] / times['numba']:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
