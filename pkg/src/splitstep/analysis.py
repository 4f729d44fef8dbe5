"""A priori monitors, manufactured solutions, error norms and order fits."""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .decomposition import SourceDescriptor
from .errors import ConfigError, DataError, DegenerateDataError
from .integrators import run
from .mesh import dual_norm_surrogate, gradient_seminorm, h_inner
from .operators import Alpha
from .resolvent import ResolventConfig


@dataclass
class AprioriReport:
    k: float
    term1: float
    term2: float
    term3: float
    term4_surrogate: float

    def terms(self):
        return (self.term1, self.term2, self.term3, self.term4_surrogate)


def _hnorm(mesh, v):
    return np.sqrt(max(h_inner(mesh, v, v), 0.0))


def apriori_quantities(traj, pou, p):
    """Monitored left-hand sides of the step-size independent bounds.

    term1: ``max_n mean_l |U_l^n|_H^2``; term2: ``(1/s) sum_{i,l} |U_l^i - U^{i-1}|_H^2``;
    term3: ``k sum_{i,l} |U_l^i|_{V_l}^p``; term4: ``k^(1-q) sum_i |U^i - U^{i-1}|_*^q``
    with the surrogate dual norm and ``q = p / (p - 1)``.
    """
    if traj.sublevels is None:
        raise DataError("trajectory was recorded without per-subdomain states")
    mesh = pou.mesh
    s = traj.sublevels.shape[1]
    k, N = traj.grid.k, traj.grid.N
    q = p / (p - 1.0)
    t1 = t2 = t3 = t4 = 0.0
    for i in range(1, N + 1):
        prev = traj.states[i - 1]
        level = 0.0
        for ell in range(s):
            U = traj.sublevels[i, ell]
            level += h_inner(mesh, U, U)
            t2 += h_inner(mesh, U - prev, U - prev)
            t3 += (_hnorm(mesh, U) + gradient_seminorm(mesh, U, p, pou.weights[ell])) ** p
        t1 = max(t1, level / s)
        t4 += dual_norm_surrogate(mesh, traj.states[i] - prev, q) ** q
    return AprioriReport(k, t1, t2 / s, k * t3, k ** (1.0 - q) * t4)


@dataclass(frozen=True, eq=False)
class Manufactured:
    """Ingredients of a test problem; ``exact`` is ``None`` when no closed form exists."""

    name: str
    kind: str
    p: float
    alpha: Alpha
    source: SourceDescriptor
    initial: object  # callable(*coords)
    exact: object = None  # callable(t, *coords)

    def exact_state(self, mesh, t):
        return mesh.interpolate(lambda *x: self.exact(t, *x))

    def initial_state(self, mesh):
        return mesh.interpolate(self.initial)


@lru_cache(maxsize=None)
def _plaplace_forcing(p, alpha_slope):
    """Forcing ``u_t - (alpha |u_x|^(p-2) u_x)_x`` for ``u = exp(-t) cos(pi x)`` by symbolic differentiation."""
    import sympy

    t, x = sympy.symbols("t x", real=True)
    u = sympy.exp(-t) * sympy.cos(sympy.pi * x)
    ux = sympy.diff(u, x)
    alpha = 1 + sympy.Rational(alpha_slope).limit_denominator(10**6) * t
    flux = alpha * (ux**2) ** sympy.Rational(p - 2, 2) * ux if p != 2 else alpha * ux
    g = sympy.simplify(sympy.diff(u, t) - sympy.diff(flux, x))
    return sympy.lambdify((t, x), g, "numpy")


def manufactured_problem(name, p=None, alpha=None):
    """Named test problems on ``(0, 1)`` (extended constantly in further axes).

    ``heat_neumann``: p = 2, alpha = 1, ``u = exp(-t) cos(pi x)``.
    ``plaplace_steady_forcing``: p = 4, alpha = 1 + t/2, same ``u``.
    ``free_decay``: no source, ``u0 = cos(pi x) + cos(3 pi x) / 2``; p and alpha free.
    ``zero``: no source, zero initial data; p and alpha free.
    """

    def cos_mode(t, x, *rest):
        return np.exp(-t) * np.cos(np.pi * x)

    if name == "heat_neumann":
        _fixed(name, p, 2.0, alpha, Alpha("constant", (1.0,)))

        def g(t, x, *rest):
            return (np.pi**2 - 1.0) * np.exp(-t) * np.cos(np.pi * x)

        return Manufactured(name, "p_laplace", 2.0, Alpha("constant", (1.0,)), SourceDescriptor(g),
                            lambda x, *rest: np.cos(np.pi * x), cos_mode)
    if name == "plaplace_steady_forcing":
        a = Alpha("affine", (0.5,))
        _fixed(name, p, 4.0, alpha, a)
        forcing = _plaplace_forcing(4, 0.5)

        def g(t, x, *rest):
            return np.broadcast_to(forcing(t, x), np.shape(x))

        return Manufactured(name, "p_laplace", 4.0, a, SourceDescriptor(g),
                            lambda x, *rest: np.cos(np.pi * x), cos_mode)
    if name == "free_decay":
        return Manufactured(name, "p_laplace", 2.0 if p is None else p, alpha or Alpha(), SourceDescriptor.zero(),
                            lambda x, *rest: np.cos(np.pi * x) + 0.5 * np.cos(3 * np.pi * x))
    if name == "zero":
        return Manufactured(name, "p_laplace", 2.0 if p is None else p, alpha or Alpha(), SourceDescriptor.zero(),
                            lambda x, *rest: np.zeros_like(x), lambda t, x, *rest: np.zeros_like(x))
    raise ConfigError(f"unknown problem '{name}'", key="problem")


def _fixed(name, p, p_fixed, alpha, alpha_fixed):
    if p is not None and p != p_fixed:
        raise ConfigError(f"problem '{name}' is defined for p = {p_fixed:g} only", key="p")
    if alpha is not None and alpha != alpha_fixed:
        raise ConfigError(f"problem '{name}' fixes alpha to '{alpha_fixed.describe()}'", key="alpha")


def reference_solve(problem, T, fine_N, cfg=ResolventConfig(), threads=1):
    """Unsplit backward Euler on the fine grid ``T / fine_N``."""
    from .mesh import TimeGrid

    return run("backward_euler", problem, TimeGrid(T, fine_N), cfg, threads=threads)


def _reference_states(traj, reference, mesh):
    """Reference values at the trajectory's grid times, shape ``(N+1, n)``."""
    grid = traj.grid
    if callable(reference):
        return np.stack([reference(mesh, t) for t in grid.times])
    ref_grid = reference.grid
    if abs(ref_grid.T - grid.T) > 1e-12 * grid.T or ref_grid.N % grid.N:
        raise DataError(f"reference grid N={ref_grid.N} does not contain the study grid N={grid.N}")
    stride = ref_grid.N // grid.N
    return reference.states[::stride]


@dataclass
class ErrorNorms:
    error_LinfH: float
    error_LpV: float
    per_subdomain: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.error_LinfH, self.error_LpV))


def error_norms(traj, reference, mesh, p, pou=None):
    """Max-in-time H error and the L^p(0,T;V) error of the piecewise-constant prolongation.

    ``reference`` is either a trajectory on a grid containing ``traj``'s grid,
    or a callable ``(mesh, t) -> state``. With a partition and recorded
    sublevels, per-subdomain ``L^p(0,T;V_l)`` errors of ``U_l`` are added.
    """
    ref = _reference_states(traj, reference, mesh)
    if ref.shape != traj.states.shape:
        raise DataError("trajectory and reference have incompatible shapes")
    k = traj.grid.k
    err = traj.states - ref
    linf = max(_hnorm(mesh, e) for e in err)
    lp = (k * sum((_hnorm(mesh, e) + gradient_seminorm(mesh, e, p)) ** p for e in err[1:])) ** (1.0 / p)
    per = []
    if pou is not None and traj.sublevels is not None:
        for ell, chi in enumerate(pou.weights):
            e_l = traj.sublevels[1:, ell] - ref[1:]
            per.append((k * sum((_hnorm(mesh, e) + gradient_seminorm(mesh, e, p, chi)) ** p for e in e_l)) ** (1.0 / p))
    return ErrorNorms(float(linf), float(lp), per)


def estimate_order(points):
    """Least-squares slope of ``log(error)`` against ``log(k)``."""
    pts = list(points)
    if len(pts) < 3:
        raise DegenerateDataError("need at least three (k, error) points")
    k = np.array([a for a, _ in pts], dtype=float)
    e = np.array([b for _, b in pts], dtype=float)
    if np.any(e <= 0) or np.any(k <= 0):
        raise DegenerateDataError("step sizes and errors must be positive")
    if np.unique(k).size != k.size:
        raise DegenerateDataError("step sizes must be distinct")
    slope, _ = np.polyfit(np.log(k), np.log(e), 1)
    return float(slope)
