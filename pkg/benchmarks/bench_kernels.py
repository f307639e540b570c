"""Compare the numba and numpy p-Laplacian kernels.

Kernel timings call both variants directly on grid domains of growing
size. The end-to-end timing runs one blow-up integration in a subprocess
per backend, selected with PLAPLAB_BACKEND.

    python benchmarks/bench_kernels.py [--sizes 5 10 20 40] [--repeat 5] [--p 3.0]

Integer and half-integer p - 2 take a multiply/sqrt path in the numba
kernel; other p (e.g. --p 3.3) time the generic pow path.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from plaplab import _kernels, dirichlet_domain, generate_graph, stencil

E2E = """
import time
from plaplab import *
g = generate_graph("grid", {m}, {m})
dom = dirichlet_domain(g, [x for x in g.vertices if len(g.neighbors(x)) == 4])
u0 = VertexField.constant(dom.interior, 1.0)
spec = ProblemSpec(g, dom, 3.0, u0, f=PowerLaw.single(1.5, 2.0), delta=1.0)
integrate(spec, horizon=0.01)  # compile / warm up
t = time.perf_counter()
traj, rep = integrate(spec)
print(BACKEND, time.perf_counter() - t, len(traj.times), rep.detected)
"""


def best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def kernel_rows(sizes, repeat, p=3.0, batch=64):
    rng = np.random.default_rng(0)
    print(f"{'grid':>8} {'m':>6} {'numpy row':>12} {'numba row':>12} {'speedup':>8} "
          f"{'numpy batch':>12} {'numba batch':>12} {'speedup':>8}")
    for k in sizes:
        g = generate_graph("grid", k, k)
        dom = dirichlet_domain(g, [x for x in g.vertices if len(g.neighbors(x)) == 4])
        s = stencil(g, dom)
        f = rng.uniform(0, 1, size=dom.m)
        f_ext = np.concatenate((f, np.zeros(len(dom.boundary))))
        F = rng.uniform(0, 1, size=(batch, dom.m))
        F_ext = np.ascontiguousarray(np.concatenate((F, np.zeros((batch, len(dom.boundary)))), axis=1))
        row = (s.indptr, s.cols, s.weights, s.mu, f_ext, f, p)
        rows = (s.indptr, s.cols, s.weights, s.mu, F_ext, F, p)
        _kernels.plap_rows_numba(*row)
        _kernels.plap_rows_batch_numba(*rows)
        number = max(1, 20000 // dom.m)
        a = best(lambda: _kernels.plap_rows_numpy(*row), repeat, number)
        b = best(lambda: _kernels.plap_rows_numba(*row), repeat, number)
        c = best(lambda: _kernels.plap_rows_batch_numpy(*rows), repeat, max(1, number // batch))
        d = best(lambda: _kernels.plap_rows_batch_numba(*rows), repeat, max(1, number // batch))
        print(f"{k:>4}x{k:<3} {dom.m:>6} {a * 1e6:>10.1f}us {b * 1e6:>10.1f}us {a / b:>7.1f}x "
              f"{c * 1e6:>10.1f}us {d * 1e6:>10.1f}us {c / d:>7.1f}x")


def end_to_end(m):
    print(f"\nend-to-end blow-up run on grid {m}x{m}:")
    for backend in ("numpy", "numba"):
        env = dict(os.environ, PLAPLAB_BACKEND=backend)
        out = subprocess.run([sys.executable, "-c", E2E.format(m=m)], env=env, capture_output=True,
                             text=True, check=True).stdout.split()
        print(f"  {out[0]:>6}: {float(out[1]):.3f}s, {out[2]} steps, detected={out[3]}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[5, 10, 20, 40])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--p", type=float, default=3.0)
    ap.add_argument("--e2e-grid", type=int, default=12)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")
    kernel_rows(args.sizes, args.repeat, p=args.p)
    end_to_end(args.e2e_grid)


if __name__ == "__main__":
    main()
