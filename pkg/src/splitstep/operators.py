"""Discrete nonlinear diffusion operators and sampled checks of their structure.

Every gradient-type operator is the exact gradient of a convex energy

    E(u) = sum_e  m_e chi_e alpha(t) |g_e(u)|^p / p,

where ``g_e`` is the difference gradient on element ``e`` (cell midpoints in
1D, edges per axis for the anisotropic kind, P1 triangles for the 2D
p-Laplacian), ``m_e`` its quadrature weight and ``chi_e`` the vertex average
of the optional partition weight. The porous medium operator is
``-Lap_h(chi alpha |u|^(p-2) u)`` with the Neumann Laplacian.

``apply_operator`` returns nodal values, i.e. the Galerkin residual divided
by the lumped mass, so ``h_inner(apply_operator(u), v)`` is the duality
pairing for the gradient kinds.
"""
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import InvalidWeightError, SpecMismatchError, TimeRangeError
from .mesh import dual_norm_surrogate, element_weight, gradient_seminorm, h_inner
from .reports import AssumptionReport

KINDS = ("p_laplace", "porous_medium", "anisotropic", "zero")
GRADIENT_KINDS = ("p_laplace", "anisotropic")


@dataclass(frozen=True)
class Alpha:
    """Time coefficient: ``constant c``, ``affine c`` (1 + c t) or ``tabulated`` knots."""

    kind: str = "constant"
    values: tuple = (1.0,)

    def __post_init__(self):
        if self.kind not in ("constant", "affine", "tabulated"):
            raise ValueError(f"unknown alpha kind '{self.kind}'")
        if self.kind == "tabulated":
            ts = [t for t, _ in self.values]
            if len(ts) < 2 or any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError("tabulated alpha needs at least two knots with increasing times")

    @classmethod
    def parse(cls, text):
        parts = text.split(None, 1)
        if len(parts) == 1:
            return cls("constant", (float(parts[0]),))
        kind, rest = parts
        if kind in ("constant", "affine"):
            return cls(kind, (float(rest),))
        if kind == "tabulated":
            knots = []
            for item in rest.replace(" ", "").split(","):
                t, v = item.split(":")
                knots.append((float(t), float(v)))
            return cls(kind, tuple(knots))
        raise ValueError(f"unknown alpha kind '{kind}'")

    def __call__(self, t):
        if self.kind == "constant":
            return self.values[0]
        if self.kind == "affine":
            return 1.0 + self.values[0] * t
        ts, vs = zip(*self.values)
        return float(np.interp(t, ts, vs))

    def minimum(self, T):
        if self.kind == "constant":
            return self.values[0]
        if self.kind == "affine":
            return min(1.0, 1.0 + self.values[0] * T)
        pts = [0.0, T] + [t for t, _ in self.values if 0.0 < t < T]
        return min(self(t) for t in pts)

    def lipschitz(self):
        if self.kind == "constant":
            return 0.0
        if self.kind == "affine":
            return abs(self.values[0])
        return max(abs((v1 - v0) / (t1 - t0)) for (t0, v0), (t1, v1) in zip(self.values, self.values[1:]))

    def describe(self):
        if self.kind == "tabulated":
            return "tabulated " + ",".join(f"{t:.17g}:{v:.17g}" for t, v in self.values)
        return f"{self.kind} {self.values[0]:.17g}"


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    kind: str
    p: float = 2.0
    alpha: Alpha = Alpha()
    T: float = 1.0
    weight: np.ndarray = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind '{self.kind}'")
        if self.kind != "zero":
            if not self.p >= 2:
                raise ValueError(f"operators need p >= 2, got {self.p}")
            if not self.alpha.minimum(self.T) > 0:
                raise ValueError("alpha must stay positive on [0, T]")
        if self.weight is not None:
            w = np.asarray(self.weight, dtype=float)
            if np.any(w < 0) or np.any(w > 1):
                raise InvalidWeightError("operator weights must lie in [0, 1]")
            object.__setattr__(self, "weight", w)

    def weighted(self, chi):
        return replace(self, weight=np.asarray(chi, dtype=float))

    def unweighted(self):
        return replace(self, weight=None)

    @property
    def alpha_min(self):
        return self.alpha.minimum(self.T) if self.kind != "zero" else 0.0


def _check_time(spec, t):
    if not -1e-12 * spec.T <= t <= spec.T * (1 + 1e-12):
        raise TimeRangeError(f"time {t} outside [0, {spec.T}]")


def _uses_triangles(spec, mesh):
    return spec.kind == "p_laplace" and mesh.dimension == 2


def _edge_coef(spec, mesh, t):
    tail, head, inv_h, meas = mesh.edges
    c = meas * spec.alpha(t)
    if spec.weight is not None:
        c = c * element_weight(spec.weight, (tail, head))
    return c


def _triangle_coef(spec, mesh, t):
    vertices, gx, gy, area = mesh.triangles
    c = area * spec.alpha(t)
    if spec.weight is not None:
        c = c * element_weight(spec.weight, tuple(vertices.T))
    return c


def _nodal_weight(spec, mesh):
    return np.ones(mesh.size) if spec.weight is None else spec.weight


def _porous_phi(u, p):
    return np.abs(u) ** (p - 2.0) * u if p != 2.0 else u.copy()


def galerkin_residual(spec, mesh, t, u):
    """Vector of ``dE(u)[phi_i]`` over the nodal basis (unscaled by the mass)."""
    _check_time(spec, t)
    u = mesh.check(u)
    if spec.kind == "zero":
        return np.zeros(mesh.size)
    if spec.kind == "porous_medium":
        return mesh.stiffness @ (_nodal_weight(spec, mesh) * spec.alpha(t) * _porous_phi(u, spec.p))
    if _uses_triangles(spec, mesh):
        _, gx, gy, _ = mesh.triangles
        c = _triangle_coef(spec, mesh, t)
        ax, ay = gx @ u, gy @ u
        s = c * np.hypot(ax, ay) ** (spec.p - 2.0)
        return gx.T @ (s * ax) + gy.T @ (s * ay)
    c = _edge_coef(spec, mesh, t)
    if mesh.dimension == 1:
        return _kernels.edge_flux(u, c, float(spec.p), 1.0 / mesh.spacing[0], 0.0)[0]
    tail, head, inv_h, _ = mesh.edges
    g = (u[head] - u[tail]) * inv_h
    flux = c * np.abs(g) ** (spec.p - 2.0) * g * inv_h
    return np.bincount(head, flux, mesh.size) - np.bincount(tail, flux, mesh.size)


def apply_operator(spec, mesh, t, u):
    """Nodal values of ``A(t) u``: the Galerkin residual over the lumped mass."""
    return galerkin_residual(spec, mesh, t, u) / mesh.weights


def energy(spec, mesh, t, u):
    """Convex potential whose directional derivative is :func:`pairing`."""
    _check_time(spec, t)
    u = mesh.check(u)
    p = spec.p
    if spec.kind == "zero":
        return 0.0
    if spec.kind == "porous_medium":
        return float(np.sum(mesh.weights * _nodal_weight(spec, mesh) * spec.alpha(t) * np.abs(u) ** p) / p)
    if _uses_triangles(spec, mesh):
        _, gx, gy, _ = mesh.triangles
        return float(np.sum(_triangle_coef(spec, mesh, t) * np.hypot(gx @ u, gy @ u) ** p) / p)
    tail, head, inv_h, _ = mesh.edges
    g = (u[head] - u[tail]) * inv_h
    return float(np.sum(_edge_coef(spec, mesh, t) * np.abs(g) ** p) / p)


def pairing(spec, mesh, t, u, v):
    """Duality pairing ``<A(t) u, v>``.

    For the gradient kinds this is ``h_inner(apply_operator(u), v)``. For the
    porous medium operator the natural pairing sits in the ``H^{-1}`` Gelfand
    triple and reduces to ``sum w chi alpha |u|^(p-2) u v``.
    """
    if spec.kind == "porous_medium":
        _check_time(spec, t)
        u, v = mesh.check(u, v)
        return float(np.sum(mesh.weights * _nodal_weight(spec, mesh) * spec.alpha(t) * _porous_phi(u, spec.p) * v))
    return float(np.dot(galerkin_residual(spec, mesh, t, u), mesh.check(v)))


def seminorm(spec, mesh, v):
    """Energy seminorm matched to the operator kind (weighted by ``spec.weight``)."""
    p = spec.p
    v = mesh.check(v)
    if spec.kind == "porous_medium":
        return float(np.sum(mesh.weights * _nodal_weight(spec, mesh) * np.abs(v) ** p) ** (1.0 / p))
    if spec.kind == "anisotropic" and mesh.dimension == 2:
        tail, head, inv_h, meas = mesh.edges
        c = meas if spec.weight is None else meas * element_weight(spec.weight, (tail, head))
        return float(np.sum(c * np.abs((v[head] - v[tail]) * inv_h) ** p) ** (1.0 / p))
    return gradient_seminorm(mesh, v, p, spec.weight)


def linearize(spec, mesh, t, u, eps):
    """Hessian ``H`` of the Galerkin residual at ``u`` (so ``M + tau H`` is the Newton matrix).

    The degenerate factor ``|g|^(p-2)`` is floored at ``eps``. Returns a
    ``(lower, diag, upper)`` triple on 1D meshes and a sparse matrix in 2D.
    """
    _check_time(spec, t)
    p = float(spec.p)
    n = mesh.size
    if spec.kind == "zero":
        z = np.zeros(n)
        return (z[:-1], z, z[:-1]) if mesh.dimension == 1 else sp.csr_matrix((n, n))
    if spec.kind == "porous_medium":
        d = spec.alpha(t) * _nodal_weight(spec, mesh) * (p - 1.0) * np.maximum(np.abs(u) ** (p - 2.0), eps)
        if p == 2.0:
            d = spec.alpha(t) * _nodal_weight(spec, mesh)
        if mesh.dimension == 1:
            K = mesh.stiffness
            kd = K.diagonal()
            off = K.diagonal(1)
            return off * d[:-1], kd * d, off * d[1:]
        return (mesh.stiffness @ sp.diags(d)).tocsr()
    if _uses_triangles(spec, mesh):
        _, gx, gy, _ = mesh.triangles
        c = _triangle_coef(spec, mesh, t)
        ax, ay = gx @ u, gy @ u
        mag = np.hypot(ax, ay)
        iso = c * np.maximum(mag ** (p - 2.0), eps)
        with np.errstate(invalid="ignore", divide="ignore"):
            nx = np.where(mag > 0, ax / mag, 0.0)
            ny = np.where(mag > 0, ay / mag, 0.0)
        aniso = c * (p - 2.0) * mag ** (p - 2.0)
        dxx, dyy, dxy = iso + aniso * nx * nx, iso + aniso * ny * ny, aniso * nx * ny
        H = gx.T @ sp.diags(dxx) @ gx + gy.T @ sp.diags(dyy) @ gy
        H = H + gx.T @ sp.diags(dxy) @ gy + gy.T @ sp.diags(dxy) @ gx
        return H.tocsr()
    c = _edge_coef(spec, mesh, t)
    if mesh.dimension == 1:
        _, stiff = _kernels.edge_flux(u, c, p, 1.0 / mesh.spacing[0], eps)
        diag = np.zeros(n)
        diag[:-1] += stiff
        diag[1:] += stiff
        return -stiff, diag, -stiff
    tail, head, inv_h, _ = mesh.edges
    g = (u[head] - u[tail]) * inv_h
    stiff = c * (p - 1.0) * np.maximum(np.abs(g) ** (p - 2.0), eps) * inv_h * inv_h
    H = sp.coo_matrix(
        (np.concatenate([stiff, stiff, -stiff, -stiff]),
         (np.concatenate([tail, head, tail, head]), np.concatenate([tail, head, head, tail]))),
        shape=(n, n),
    )
    return H.tocsr()


def random_state(mesh, rng, smooth=False):
    """Random grid function: iid nodal noise, or a random low-mode cosine series."""
    if not smooth:
        return rng.uniform(-1.0, 1.0, mesh.size)
    u = np.full(mesh.size, rng.uniform(-0.5, 0.5))
    for j in range(1, 6):
        for axis, (a, b) in enumerate(zip(mesh.lower, mesh.upper)):
            x = (mesh.coordinates[axis] - a) / (b - a)
            u += rng.normal(0.0, 1.0 / j**2) * np.cos(j * np.pi * x)
    return u


def check_sum_property(parts, whole, mesh, t, samples=10, seed=0, tol=1e-12):
    """Largest relative nodal gap between ``sum_l A_l(t) u`` and ``A(t) u``."""
    for part in parts:
        if part.kind != whole.kind or part.p != whole.p or part.alpha != whole.alpha:
            raise SpecMismatchError("partial operators must share kind, p and alpha with the whole operator")
    if whole.weight is not None:
        raise SpecMismatchError("the whole operator must be unweighted")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for j in range(samples):
        u = np.zeros(mesh.size) if j == 0 else random_state(mesh, rng)
        full = apply_operator(whole, mesh, t, u)
        acc = np.zeros(mesh.size)
        for part in parts:
            acc += apply_operator(part, mesh, t, u)
        worst = max(worst, float(np.max(np.abs(acc - full)) / (1.0 + np.max(np.abs(full)))))
    return AssumptionReport("sum_property", samples, -worst, tol, {"max_relative_gap": worst})


def check_monotonicity(spec, mesh, t, samples=100, seed=0, tol=1e-10):
    """Sample ``<A v - A w, v - w>`` and the ratio against ``|v - w|^p``."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    eta = np.inf
    for _ in range(samples):
        v, w = random_state(mesh, rng), random_state(mesh, rng)
        d = v - w
        av, aw = pairing(spec, mesh, t, v, d), pairing(spec, mesh, t, w, d)
        m = av - aw
        worst = min(worst, m / (1.0 + abs(av) + abs(aw)))
        den = seminorm(spec, mesh, d) ** spec.p
        if den > 1e-300:
            eta = min(eta, m / den)
    return AssumptionReport(
        f"monotonicity[{spec.kind},p={spec.p:g},{'weighted' if spec.weight is not None else 'full'}]",
        samples, float(worst), tol, {"eta_hat": float(eta)},
    )


def check_coercivity_boundedness(spec, mesh, t, samples=20, seed=0, tol=1e-10):
    """Coercivity with ``lambda = 0`` and the fitted growth constant ``beta``."""
    rng = np.random.default_rng(seed)
    p = spec.p
    q = p / (p - 1.0)
    if spec.weight is None:
        chi_min = 1.0
    else:
        chi = spec.weight
        chi_min = float(chi[chi > 0].min()) if np.any(chi > 0) else 0.0
    mu = spec.alpha_min * chi_min
    worst = np.inf
    beta = 0.0
    for j in range(samples):
        v = np.zeros(mesh.size) if j == 0 else random_state(mesh, rng)
        avv = pairing(spec, mesh, t, v, v)
        semi = seminorm(spec, mesh, v)
        worst = min(worst, (avv - mu * semi**p) / (1.0 + abs(avv)))
        vnorm = np.sqrt(h_inner(mesh, v, v)) + semi
        dual = dual_norm_surrogate(mesh, apply_operator(spec, mesh, t, v), q)
        beta = max(beta, dual / (1.0 + vnorm ** (p - 1.0)))
    if not np.isfinite(beta):
        worst = -np.inf
    return AssumptionReport(
        f"coercivity_boundedness[{spec.kind},p={p:g},{'weighted' if spec.weight is not None else 'full'}]",
        samples, float(worst), tol, {"mu_hat": mu, "lambda_hat": 0.0, "beta_hat_surrogate": float(beta)},
    )


def check_radial_continuity(spec, mesh, t, samples=20, seed=0, tol=1e-10):
    """Continuity of ``tau -> <A(u + tau v), w>`` at the sampling resolution.

    Halving the sample spacing on [0, 1] must shrink the largest neighbour
    difference to at most 3/4 of its previous value; a jump would not shrink.
    """
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(samples):
        u, v, w = (random_state(mesh, rng, smooth=True) for _ in range(3))
        fine = np.array([pairing(spec, mesh, t, u + tau * v, w) for tau in np.linspace(0.0, 1.0, 21)])
        coarse_jump = np.max(np.abs(np.diff(fine[::2])))
        fine_jump = np.max(np.abs(np.diff(fine)))
        scale = np.max(np.abs(fine)) + 1.0
        worst = min(worst, (0.75 * coarse_jump - fine_jump) / scale)
    return AssumptionReport(f"radial_continuity[{spec.kind},p={spec.p:g}]", samples, float(worst), tol)


def check_time_continuity(spec, mesh, samples=20, seed=0, tol=1e-10):
    """Lipschitz dependence on ``t`` inherited from ``alpha``."""
    rng = np.random.default_rng(seed)
    unit = replace(spec, alpha=Alpha("constant", (1.0,)))
    lip = spec.alpha.lipschitz()
    worst = np.inf
    for _ in range(samples):
        v = random_state(mesh, rng, smooth=True)
        t0, t1 = rng.uniform(0.0, spec.T, 2)
        lhs = np.max(np.abs(apply_operator(spec, mesh, t0, v) - apply_operator(spec, mesh, t1, v)))
        bound = lip * abs(t1 - t0) * np.max(np.abs(apply_operator(unit, mesh, 0.0, v)))
        worst = min(worst, (bound - lhs) / (1.0 + bound))
    return AssumptionReport(f"time_continuity[{spec.kind},p={spec.p:g}]", samples, float(worst), tol,
                            {"lipschitz_alpha": lip})
