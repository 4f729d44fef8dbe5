"""Compare the compiled and numpy kernels, alone and inside a Newton resolvent solve.

    python benchmarks/bench_kernels.py [--nodes 257 1025 4097] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from splitstep import OperatorSpec, ResolventConfig, build_uniform_mesh, manufactured_problem, solve_resolvent
from splitstep import _kernels
from splitstep._kernels import _pykernels

try:
    from splitstep._kernels import _ckernels
except ImportError:
    _ckernels = None


def best_of(stmt, repeat, number):
    return min(timeit.repeat(stmt, repeat=repeat, number=number)) / number


def kernel_rows(n, repeat):
    rng = np.random.default_rng(0)
    u = rng.normal(size=n)
    coef = rng.uniform(0.5, 1.0, n - 1)
    lower = -rng.uniform(0.5, 1.0, n - 1)
    diag = 3.0 + rng.uniform(size=n)
    rhs = rng.normal(size=n)
    rows = []
    for name, backend in (("python", _pykernels), ("cython", _ckernels)):
        if backend is None:
            continue
        rows.append((f"edge_flux p=4 n={n}", name,
                     best_of(lambda: backend.edge_flux(u, coef, 4.0, float(n - 1), 1e-12), repeat, 200)))
        rows.append((f"tridiag_solve n={n}", name,
                     best_of(lambda: backend.tridiag_solve(lower, diag, lower, rhs), repeat, 200)))
    return rows


def resolvent_rows(n, repeat):
    mesh = build_uniform_mesh((0.0, 1.0), n)
    b = manufactured_problem("free_decay", 4.0).initial_state(mesh)
    spec = OperatorSpec("p_laplace", 4.0)
    tau = 1.0 / 64
    # Newton iterations grow with the mesh size and the max-norm residual
    # hits rounding near 1e-10 on fine meshes
    cfg = ResolventConfig(tol_abs=1e-8, tol_rel=1e-8, max_newton_iters=1000)
    rows = []
    saved = _kernels._backend
    try:
        for name, backend in (("python", _pykernels), ("cython", _ckernels)):
            if backend is None:
                continue
            _kernels._backend = backend
            rows.append((f"resolvent p=4 n={n}", name,
                         best_of(lambda: solve_resolvent(spec, mesh, tau, 0.0, b, cfg), repeat, 3)))
    finally:
        _kernels._backend = saved
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, nargs="+", default=[257, 1025, 4097])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; timing the numpy fallback only")
    rows = []
    for n in args.nodes:
        rows += kernel_rows(n, args.repeat) + resolvent_rows(n, args.repeat)
    timings = {}
    for case, backend, seconds in rows:
        timings.setdefault(case, {})[backend] = seconds
    print(f"{'case':<28}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for case, t in timings.items():
        py, cy = t.get("python"), t.get("cython")
        speed = f"{py / cy:9.1f}x" if py and cy else "        -"
        print(f"{case:<28}{1e3 * py:14.4f}" + (f"{1e3 * cy:14.4f}" if cy else f"{'-':>14}") + speed)


if __name__ == "__main__":
    main()
