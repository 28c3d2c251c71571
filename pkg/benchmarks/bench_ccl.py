"""Compare the compiled and pure Python connected-component backends.

    python benchmarks/bench_ccl.py [--size 64] [--repeat 20]

Also times the full segment pipeline on the default phantom with whichever
backend is active.
"""
import argparse
import time

import numpy as np

from dmdseg import _ccl_py, kernels, pipeline, synthetic


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--density", type=float, default=0.5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    mask = (rng.random((args.size, args.size)) < args.density).astype(np.uint8)
    try:
        from dmdseg import _ccl
    except ImportError:
        _ccl = None

    print(f"active backend: {kernels.BACKEND}")
    print(f"{args.size}x{args.size} random mask, density {args.density}, best of {args.repeat}")
    for conn in (4, 8):
        t_py = best_of(lambda: _ccl_py.label(mask, conn), args.repeat)
        line = f"  connectivity {conn}: python {t_py * 1e3:9.3f} ms"
        if _ccl is not None:
            assert np.array_equal(_ccl.label(mask, conn)[0], _ccl_py.label(mask, conn)[0])
            t_c = best_of(lambda: _ccl.label(mask, conn), args.repeat)
            line += f"   cython {t_c * 1e3:9.3f} ms   speedup {t_py / t_c:7.1f}x"
        print(line)

    ph = synthetic.generate(synthetic.PhantomSpec())
    t = best_of(lambda: pipeline.run(ph.sequence, top_k=2, rank="auto"), max(1, args.repeat // 4))
    print(f"segment pipeline on the default phantom: {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
