"""Backward Euler, sum splitting and Lie splitting time steppers."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .decomposition import averaged_source, check_source_split, split_source
from .errors import StepFailure, SolverFailure, TimeRangeError
from .operators import check_sum_property
from .resolvent import ResolventConfig, solve_resolvent

SCHEMES = ("backward_euler", "sum_splitting", "lie_splitting")


@dataclass(frozen=True, eq=False)
class SplitProblem:
    """``u' + sum_l A_l(t) u = sum_l f_l`` with ``A = sum_l A_l`` and ``f = sum_l f_l``."""

    mesh: object
    whole: object
    parts: tuple
    source: object
    sources: tuple
    u0: np.ndarray

    @property
    def s(self):
        return len(self.parts)

    @property
    def p(self):
        return self.whole.p

    def validate(self, samples=3, seed=0):
        if self.s < 1 or len(self.sources) != self.s:
            raise ValueError("need one source part per operator part")
        self.mesh.check(self.u0)
        if self.whole.kind != "zero":
            for t in (0.0, self.whole.T):
                report = check_sum_property(self.parts, self.whole, self.mesh, t, samples, seed)
                if not report.passed:
                    raise ValueError(f"sum property fails at t={t}: {report.constants}")
        report = check_source_split(self.source, self.sources, self.mesh, np.linspace(0.0, self.whole.T, 3))
        if not report.passed:
            raise ValueError(f"source split fails: {report.constants}")
        return self


def build_split_problem(mesh, whole, pou, source, u0):
    """Decompose ``whole`` and ``source`` with the partition weights."""
    parts = tuple(whole.weighted(chi) for chi in pou.weights)
    return SplitProblem(mesh, whole, parts, source, tuple(split_source(source, pou)),
                        mesh.check(u0).copy())


@dataclass
class Trajectory:
    grid: object
    states: np.ndarray  # (N+1, n_nodes)
    sublevels: np.ndarray = None  # (N+1, s, n_nodes); row 0 repeats u0
    stats: list = field(default_factory=list)  # per step: list of SolveStats

    @property
    def final(self):
        return self.states[-1]


def _fail(exc, n, ell=None):
    where = f"step {n}" + (f", subdomain {ell}" if ell is not None else "")
    return StepFailure(f"{where}: {exc}", n, ell, getattr(exc, "stats", None))


def backward_euler_step(problem, grid, n, U_prev, cfg=ResolventConfig()):
    k = grid.k
    rhs = U_prev + k * averaged_source(problem.source, problem.mesh, grid, n)
    try:
        return solve_resolvent(problem.whole, problem.mesh, k, grid.t(n), rhs, cfg, guess=U_prev)
    except SolverFailure as exc:
        raise _fail(exc, n) from exc


def sum_splitting_step(problem, grid, n, U_prev, cfg=ResolventConfig(), executor=None):
    """One step of the averaged parallel splitting.

    Each fractional step solves ``(I + s k A_l(t_n)) U_l = U_prev + s k f_l^n``
    independently; the new state is their mean, summed in subdomain order.
    """
    s, k, t = problem.s, grid.k, grid.t(n)
    mesh = problem.mesh

    def fractional(ell):
        rhs = U_prev + s * k * averaged_source(problem.sources[ell], mesh, grid, n)
        try:
            return solve_resolvent(problem.parts[ell], mesh, s * k, t, rhs, cfg, guess=U_prev)
        except SolverFailure as exc:
            raise _fail(exc, n, ell) from exc

    if executor is None or s == 1:
        results = [fractional(ell) for ell in range(s)]
    else:
        results = list(executor.map(fractional, range(s)))
    subs = np.stack([r[0] for r in results])
    acc = subs[0].copy()
    for ell in range(1, s):
        acc += subs[ell]
    return acc / s, subs, [r[1] for r in results]


def lie_splitting_step(problem, grid, n, U_prev, cfg=ResolventConfig()):
    """Sequential product of fractional resolvents in subdomain order."""
    k, t = grid.k, grid.t(n)
    V = U_prev
    stats = []
    for ell in range(problem.s):
        rhs = V + k * averaged_source(problem.sources[ell], problem.mesh, grid, n)
        try:
            V, st = solve_resolvent(problem.parts[ell], problem.mesh, k, t, rhs, cfg, guess=V)
        except SolverFailure as exc:
            raise _fail(exc, n, ell) from exc
        stats.append(st)
    return V, stats


def run(scheme, problem, grid, cfg=ResolventConfig(), record_sublevels=False, threads=1):
    """March ``n = 1..N`` with the chosen scheme and return the trajectory.

    Results do not depend on ``threads``: fractional steps of the sum scheme
    may run concurrently but are always reduced in subdomain order. On a
    failing step the raised :class:`StepFailure` carries the partial
    trajectory.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme '{scheme}'")
    mesh, N = problem.mesh, grid.N
    states = np.empty((N + 1, mesh.size))
    states[0] = problem.u0
    record = record_sublevels and scheme == "sum_splitting"
    subs = None
    if record:
        subs = np.empty((N + 1, problem.s, mesh.size))
        subs[0] = problem.u0
    traj = Trajectory(grid, states, subs, [])
    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 and scheme == "sum_splitting" else None
    try:
        for n in range(1, N + 1):
            U_prev = states[n - 1]
            try:
                if scheme == "backward_euler":
                    U, st = backward_euler_step(problem, grid, n, U_prev, cfg)
                    st = [st]
                elif scheme == "sum_splitting":
                    U, parts, st = sum_splitting_step(problem, grid, n, U_prev, cfg, executor)
                    if record:
                        subs[n] = parts
                else:
                    U, st = lie_splitting_step(problem, grid, n, U_prev, cfg)
            except StepFailure as exc:
                traj.states = states[:n].copy()
                if record:
                    traj.sublevels = subs[:n].copy()
                exc.trajectory = traj
                raise
            states[n] = U
            traj.stats.append(st)
    finally:
        if executor is not None:
            executor.shutdown()
    return traj


def _step_index(grid, t):
    if not 0.0 <= t <= grid.T:
        raise TimeRangeError(f"time {t} outside [0, {grid.T}]")
    if t == 0.0:
        return 0
    n = int(np.ceil(t / grid.k - 1e-12 * grid.N))
    return min(max(n, 1), grid.N)


def eval_piecewise_constant(traj, t):
    """``U^n`` on ``(t_{n-1}, t_n]`` and ``u0`` at ``t = 0``."""
    return traj.states[_step_index(traj.grid, t)].copy()


def eval_piecewise_linear(traj, t):
    """Linear interpolation between consecutive states."""
    n = _step_index(traj.grid, t)
    if n == 0:
        return traj.states[0].copy()
    lam = (t - traj.grid.t(n - 1)) / traj.grid.k
    return traj.states[n - 1] + lam * (traj.states[n] - traj.states[n - 1])
