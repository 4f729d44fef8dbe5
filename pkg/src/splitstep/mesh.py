"""Uniform tensor-product grids, time grids and discrete norms.

Grid functions are plain float arrays holding one value per node, flattened in
C order over the axis shape ``(m_0, m_1, ...)``. Axis 0 is the first spatial
coordinate.
"""
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import DimensionError, InvalidExponentError, InvalidMeshError, InvalidWeightError


@dataclass(frozen=True)
class SpatialMesh:
    lower: tuple
    upper: tuple
    nodes: tuple

    def __post_init__(self):
        if not 1 <= len(self.nodes) <= 2:
            raise InvalidMeshError("only 1D and 2D meshes are supported")
        if not len(self.lower) == len(self.upper) == len(self.nodes):
            raise InvalidMeshError("extent and node counts disagree in dimension")
        for a, b, m in zip(self.lower, self.upper, self.nodes):
            if int(m) != m or m < 3:
                raise InvalidMeshError(f"need at least 3 nodes per axis, got {m}")
            if not (np.isfinite(a) and np.isfinite(b)) or b <= a:
                raise InvalidMeshError(f"degenerate extent ({a}, {b})")

    @property
    def dimension(self):
        return len(self.nodes)

    @property
    def shape(self):
        return tuple(int(m) for m in self.nodes)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @cached_property
    def spacing(self):
        return tuple((b - a) / (m - 1) for a, b, m in zip(self.lower, self.upper, self.nodes))

    @cached_property
    def axes(self):
        """Node coordinates along each axis; endpoints are reproduced exactly."""
        out = []
        for a, b, m in zip(self.lower, self.upper, self.nodes):
            x = a + (b - a) * np.arange(m) / (m - 1)
            x[-1] = b
            out.append(x)
        return tuple(out)

    @cached_property
    def coordinates(self):
        """Flattened coordinate arrays, one per axis."""
        grids = np.meshgrid(*self.axes, indexing="ij")
        return tuple(g.ravel() for g in grids)

    @cached_property
    def weights(self):
        """Trapezoidal quadrature weights (the lumped mass matrix diagonal)."""
        w = np.ones(1)
        for h, m in zip(self.spacing, self.shape):
            w1 = np.full(m, h)
            w1[0] = w1[-1] = 0.5 * h
            w = np.multiply.outer(w, w1).ravel()
        return w

    @cached_property
    def edges(self):
        """Finite-difference edges of the lattice.

        Returns ``(tail, head, inv_h, measure)`` arrays: each edge joins node
        ``tail`` to ``head`` along one axis, ``inv_h`` is the reciprocal
        spacing and ``measure`` the quadrature weight of the edge (cell length
        times the trapezoidal weight across the other axes).
        """
        idx = np.arange(self.size).reshape(self.shape)
        tails, heads, inv_h, meas = [], [], [], []
        for axis, h in enumerate(self.spacing):
            lo = np.take(idx, np.arange(self.shape[axis] - 1), axis=axis)
            hi = np.take(idx, np.arange(1, self.shape[axis]), axis=axis)
            cross = np.ones(1)
            for other, (h2, m2) in enumerate(zip(self.spacing, self.shape)):
                w1 = np.full(m2 - 1 if other == axis else m2, h2)
                if other != axis:
                    w1[0] = w1[-1] = 0.5 * h2
                cross = np.multiply.outer(cross, w1).ravel()
            tails.append(lo.ravel())
            heads.append(hi.ravel())
            inv_h.append(np.full(lo.size, 1.0 / h))
            meas.append(cross)
        return tuple(np.concatenate(a) for a in (tails, heads, inv_h, meas))

    @cached_property
    def triangles(self):
        """P1 triangulation of a 2D mesh: each cell is cut into two triangles.

        Returns ``(vertices, gx, gy, area)`` with ``vertices`` of shape
        ``(n_tri, 3)`` and sparse gradient matrices mapping nodal values to the
        constant gradient components on every triangle.
        """
        if self.dimension != 2:
            raise DimensionError("triangulation exists only for 2D meshes")
        hx, hy = self.spacing
        mx, my = self.shape
        idx = np.arange(self.size).reshape(self.shape)
        a = idx[:-1, :-1].ravel()
        b = idx[1:, :-1].ravel()
        c = idx[:-1, 1:].ravel()
        d = idx[1:, 1:].ravel()
        nc = a.size
        # lower triangle (a, b, c): gradient ((b - a)/hx, (c - a)/hy)
        # upper triangle (d, c, b): gradient ((d - c)/hx, (d - b)/hy)
        rows = np.arange(2 * nc)
        gx = sp.csr_matrix(
            (
                np.concatenate([np.full(nc, -1 / hx), np.full(nc, 1 / hx), np.full(nc, -1 / hx), np.full(nc, 1 / hx)]),
                (np.concatenate([rows[:nc], rows[:nc], rows[nc:], rows[nc:]]), np.concatenate([a, b, c, d])),
            ),
            shape=(2 * nc, self.size),
        )
        gy = sp.csr_matrix(
            (
                np.concatenate([np.full(nc, -1 / hy), np.full(nc, 1 / hy), np.full(nc, -1 / hy), np.full(nc, 1 / hy)]),
                (np.concatenate([rows[:nc], rows[:nc], rows[nc:], rows[nc:]]), np.concatenate([a, c, b, d])),
            ),
            shape=(2 * nc, self.size),
        )
        vertices = np.concatenate([np.stack([a, b, c], axis=1), np.stack([d, c, b], axis=1)])
        area = np.full(2 * nc, 0.5 * hx * hy)
        return vertices, gx, gy, area

    @cached_property
    def stiffness(self):
        """Neumann stiffness matrix K of the linear Laplacian (sparse, CSR).

        ``-M^{-1} K`` with ``M = diag(weights)`` is the discrete Neumann
        Laplacian. 1D uses the three-point stencil, 2D the P1 triangulation.
        """
        if self.dimension == 1:
            tail, head, inv_h, meas = self.edges
            c = meas * inv_h * inv_h
            n = self.size
            K = sp.coo_matrix(
                (np.concatenate([c, c, -c, -c]),
                 (np.concatenate([tail, head, tail, head]), np.concatenate([tail, head, head, tail]))),
                shape=(n, n),
            )
            return K.tocsr()
        _, gx, gy, area = self.triangles
        A = sp.diags(area)
        return (gx.T @ A @ gx + gy.T @ A @ gy).tocsr()

    def check(self, *fields):
        """Validate that each array is a finite grid function on this mesh."""
        out = []
        for u in fields:
            u = np.asarray(u, dtype=float)
            if u.ndim != 1 or u.shape[0] != self.size:
                raise DimensionError(f"grid function of shape {u.shape} does not match mesh with {self.size} nodes")
            if not np.all(np.isfinite(u)):
                raise DimensionError("grid function contains non-finite entries")
            out.append(u)
        return out[0] if len(out) == 1 else out

    def interpolate(self, func):
        """Nodal values of ``func(*coords)``."""
        return np.broadcast_to(np.asarray(func(*self.coordinates), dtype=float), (self.size,)).copy()


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"final time must be positive, got {self.T}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"step count must be a positive integer, got {self.N}")

    @property
    def k(self):
        return self.T / self.N

    def t(self, n):
        return self.T if n == self.N else n * self.k

    @cached_property
    def times(self):
        out = np.arange(self.N + 1) * self.k
        out[-1] = self.T
        return out


def build_uniform_mesh(extent, m):
    """Uniform mesh over an interval or a rectangle.

    ``extent`` is ``(a, b)`` for 1D or ``((a, b), (c, d))`` for 2D; ``m`` is
    the node count per axis (an int, or one int per axis).
    """
    ext = np.asarray(extent, dtype=float)
    if ext.ndim == 1:
        ext = ext[None, :]
    if ext.ndim != 2 or ext.shape[1] != 2:
        raise InvalidMeshError(f"cannot interpret extent {extent!r}")
    dim = ext.shape[0]
    ms = (m,) * dim if np.isscalar(m) else tuple(m)
    if len(ms) != dim:
        raise InvalidMeshError("one node count per axis is required")
    return SpatialMesh(tuple(ext[:, 0].tolist()), tuple(ext[:, 1].tolist()), tuple(int(x) if int(x) == x else x for x in ms))


def h_inner(mesh, u, v):
    u, v = mesh.check(u, v)
    return float(np.dot(mesh.weights * u, v))


def lp_norm(mesh, v, p):
    if not p > 1:
        raise InvalidExponentError(f"L^p norm needs p > 1, got {p}")
    v = mesh.check(v)
    return float(np.sum(mesh.weights * np.abs(v) ** p) ** (1.0 / p))


def _element_gradients(mesh, v):
    """Per-element gradient magnitudes, element weights and vertex-averaging map."""
    if mesh.dimension == 1:
        tail, head, inv_h, meas = mesh.edges
        g = np.abs(v[head] - v[tail]) * inv_h
        return g, meas, (tail, head)
    vertices, gx, gy, area = mesh.triangles
    g = np.hypot(gx @ v, gy @ v)
    return g, area, tuple(vertices.T)


def element_weight(weight, vertex_sets):
    """Average a nodal weight over element vertices."""
    acc = np.zeros(vertex_sets[0].shape[0])
    for vs in vertex_sets:
        acc += weight[vs]
    return acc / len(vertex_sets)


def gradient_seminorm(mesh, v, p, weight=None):
    """Weighted ``L^p`` norm of the discrete gradient.

    In 1D gradients live on cell midpoints; in 2D on the triangles of the
    P1 triangulation. A nodal ``weight`` is averaged onto the elements.
    """
    if not p > 1:
        raise InvalidExponentError(f"seminorm needs p > 1, got {p}")
    v = mesh.check(v)
    g, meas, verts = _element_gradients(mesh, v)
    if weight is not None:
        weight = mesh.check(weight)
        if np.any(weight < 0):
            raise InvalidWeightError("weights must be nonnegative")
        meas = meas * element_weight(weight, verts)
    return float(np.sum(meas * g**p) ** (1.0 / p))


@lru_cache(maxsize=32)
def _helmholtz_factor(mesh):
    M = sp.diags(mesh.weights)
    return splu((M + mesh.stiffness).tocsc())


def dual_norm_surrogate(mesh, g, q):
    """Computable stand-in for the dual norm of ``g``.

    Solves ``(I - Lap_h) w = g`` with the discrete Neumann Laplacian and
    returns ``lp_norm(w, q) + gradient_seminorm(w, q)``.
    """
    if not q > 1:
        raise InvalidExponentError(f"dual exponent must exceed 1, got {q}")
    g = mesh.check(g)
    if not np.any(g):
        return 0.0
    w = _helmholtz_factor(mesh).solve(mesh.weights * g)
    return lp_norm(mesh, w, q) + gradient_seminorm(mesh, w, q)
