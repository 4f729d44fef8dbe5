"""Overlapping slab subdomains, ramp partitions of unity and source splitting."""
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import PartitionError, ResolutionError
from .mesh import element_weight
from .reports import AssumptionReport

_GAUSS_X, _GAUSS_W = leggauss(3)


@dataclass(frozen=True, eq=False)
class Subdomain:
    """Closed slab ``lo <= x_0 <= hi`` of the mesh; ``nodes`` are flat indices."""

    index: int
    lo: float
    hi: float
    nodes: np.ndarray


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    mesh: object
    subdomains: tuple
    weights: np.ndarray  # shape (s, mesh.size)

    @property
    def s(self):
        return len(self.subdomains)

    def overlap_nodes(self, ell):
        """Number of mesh nodes shared by subdomains ``ell`` and ``ell + 1``."""
        a, b = self.subdomains[ell], self.subdomains[ell + 1]
        return int(np.intersect1d(a.nodes, b.nodes).size)


def build_overlapping_subdomains(mesh, s, overlap_fraction):
    """Split the mesh into ``s`` equal slabs along axis 0, overlapping neighbours.

    The overlap width is ``overlap_fraction`` times the axis length; every
    interior slab boundary is widened by half of it on each side.
    """
    if int(s) != s or s < 1:
        raise ValueError(f"subdomain count must be a positive integer, got {s}")
    s = int(s)
    a, b = mesh.lower[0], mesh.upper[0]
    x = mesh.coordinates[0]
    if s == 1:
        return [Subdomain(0, a, b, np.arange(mesh.size))]
    if not 0 < overlap_fraction < 0.5:
        raise ValueError(f"overlap_fraction must lie in (0, 0.5), got {overlap_fraction}")
    length = b - a
    half = 0.5 * overlap_fraction * length
    tol = 1e-12 * length
    cuts = [a + j * length / s for j in range(s + 1)]
    subs = []
    for ell in range(s):
        lo = a if ell == 0 else cuts[ell] - half
        hi = b if ell == s - 1 else cuts[ell + 1] + half
        nodes = np.flatnonzero((x >= lo - tol) & (x <= hi + tol))
        subs.append(Subdomain(ell, lo, hi, nodes))
    x0 = mesh.axes[0]
    for ell in range(s - 1):
        shared = np.count_nonzero((x0 >= subs[ell + 1].lo - tol) & (x0 <= subs[ell].hi + tol))
        if shared < 2:
            raise ResolutionError(
                f"overlap between subdomains {ell} and {ell + 1} spans {shared} node(s) along axis 0; "
                "increase overlap_fraction or the mesh resolution"
            )
    return subs


def build_partition_of_unity(subdomains, mesh, profile="ramp"):
    """Piecewise-linear ramp weights, normalised so they sum to one nodewise.

    Each ramp runs from zero one grid spacing outside the shared region to one
    one spacing past it, so a weight is positive on every node of its slab and
    exactly zero elsewhere.
    """
    if profile != "ramp":
        raise PartitionError(f"unknown partition profile '{profile}'")
    subdomains = sorted(subdomains, key=lambda sd: sd.index)
    s = len(subdomains)
    x = mesh.coordinates[0]
    h = mesh.spacing[0]
    raw = np.zeros((s, mesh.size))
    for ell, sd in enumerate(subdomains):
        chi = np.ones(mesh.size)
        if ell > 0:
            prev = subdomains[ell - 1]
            if np.intersect1d(prev.nodes, sd.nodes).size == 0:
                raise PartitionError(f"subdomains {ell - 1} and {ell} do not overlap")
            start, stop = sd.lo - h, prev.hi + h
            chi = np.minimum(chi, (x - start) / (stop - start))
        if ell < s - 1:
            nxt = subdomains[ell + 1]
            start, stop = nxt.lo - h, sd.hi + h
            chi = np.minimum(chi, (stop - x) / (stop - start))
        chi = np.clip(chi, 0.0, 1.0)
        mask = np.zeros(mesh.size, dtype=bool)
        mask[sd.nodes] = True
        chi[~mask] = 0.0
        raw[ell] = chi
    total = raw.sum(axis=0)
    if np.any(total <= 0):
        raise PartitionError("subdomains do not cover the mesh")
    weights = raw / total
    return PartitionOfUnity(mesh, tuple(subdomains), weights)


def check_partition(pou, tol=1e-14):
    """Sum-to-one, range and support invariants of a partition of unity."""
    w = pou.weights
    sum_err = float(np.max(np.abs(w.sum(axis=0) - 1.0)))
    below = float(max(0.0, -w.min()))
    above = float(max(0.0, w.max() - 1.0))
    outside = 0.0
    for ell, sd in enumerate(pou.subdomains):
        mask = np.ones(pou.mesh.size, dtype=bool)
        mask[sd.nodes] = False
        if mask.any():
            outside = max(outside, float(np.max(np.abs(w[ell, mask]))))
    worst = max(sum_err, below, above, outside)
    return AssumptionReport(
        "partition_of_unity", pou.s, 0.0 - worst if worst else 0.0, tol,
        {"sum_error": sum_err, "range_violation": max(below, above), "support_violation": outside},
    )


@dataclass(frozen=True, eq=False)
class SourceDescriptor:
    """Right-hand side ``f(t)`` acting as ``int f0 v + sum_i int f_i D_i v``.

    ``value(t, *coords)`` gives the nodal part ``f0``; each entry of ``flux``
    gives a gradient part ``f_i`` evaluated at element centres. An optional
    nodal ``weight`` multiplies every part.
    """

    value: object = None
    flux: tuple = ()
    weight: np.ndarray = None

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def tabulated(cls, times, table):
        """Piecewise-linear-in-time source from nodal snapshots ``table[j]`` at ``times[j]``."""
        times = np.asarray(times, dtype=float)
        table = np.asarray(table, dtype=float)

        def value(t, *coords):
            j = int(np.clip(np.searchsorted(times, t) - 1, 0, len(times) - 2))
            lam = (t - times[j]) / (times[j + 1] - times[j])
            return (1 - lam) * table[j] + lam * table[j + 1]

        return cls(value=value)

    def evaluate(self, mesh, t):
        out = np.zeros(mesh.size)
        if self.value is not None:
            out += np.broadcast_to(np.asarray(self.value(t, *mesh.coordinates), dtype=float), (mesh.size,))
        if self.weight is not None:
            out *= self.weight
        if self.flux:
            out += _flux_representative(mesh, t, self.flux, self.weight)
        return out


def _flux_representative(mesh, t, flux, weight):
    """Nodal representative of ``v -> sum_i int chi f_i D_i v`` under the lumped inner product."""
    if mesh.dimension == 1:
        tail, head, inv_h, meas = mesh.edges
        centre = 0.5 * (mesh.coordinates[0][tail] + mesh.coordinates[0][head])
        c = meas * np.asarray(flux[0](t, centre), dtype=float)
        if weight is not None:
            c = c * element_weight(weight, (tail, head))
        r = np.zeros(mesh.size)
        np.add.at(r, head, c * inv_h)
        np.add.at(r, tail, -c * inv_h)
        return r / mesh.weights
    vertices, gx, gy, area = mesh.triangles
    centre = [sum(coord[vertices[:, j]] for j in range(3)) / 3.0 for coord in mesh.coordinates]
    chi = element_weight(weight, tuple(vertices.T)) if weight is not None else 1.0
    r = np.zeros(mesh.size)
    for fi, G in zip(flux, (gx, gy)):
        r += G.T @ (area * chi * np.asarray(fi(t, *centre), dtype=float))
    return r / mesh.weights


def split_source(f, pou):
    """Weight ``f`` by each partition function: ``f_l = chi_l f``."""
    parts = []
    for chi in pou.weights:
        w = chi.copy() if f.weight is None else chi * f.weight
        parts.append(replace(f, weight=w))
    return parts


def check_source_split(f, parts, mesh, times, tol=1e-14):
    """Largest nodal mismatch of ``sum_l f_l(t) - f(t)`` over the sample times."""
    worst = 0.0
    for t in times:
        whole = f.evaluate(mesh, t)
        acc = np.zeros(mesh.size)
        for part in parts:
            acc += part.evaluate(mesh, t)
        worst = max(worst, float(np.max(np.abs(acc - whole)) / max(1.0, np.max(np.abs(whole)))))
    return AssumptionReport("source_split", len(times), -worst, tol, {"max_mismatch": worst})


def averaged_source(f, mesh, grid, n):
    """Time average of ``f`` over ``[t_{n-1}, t_n]`` by 3-point Gauss-Legendre."""
    if not 1 <= n <= grid.N:
        raise IndexError(f"step index {n} outside 1..{grid.N}")
    if f.value is None and not f.flux:
        return np.zeros(mesh.size)
    t0, t1 = grid.t(n - 1), grid.t(n)
    mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
    out = np.zeros(mesh.size)
    for xg, wg in zip(_GAUSS_X, _GAUSS_W):
        out += 0.5 * wg * f.evaluate(mesh, mid + half * xg)
    return out
