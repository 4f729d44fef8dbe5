import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitstep import (
    SourceDescriptor,
    TimeGrid,
    averaged_source,
    build_overlapping_subdomains,
    build_partition_of_unity,
    build_uniform_mesh,
    h_inner,
    split_source,
)
from splitstep.decomposition import check_partition, check_source_split
from splitstep.errors import PartitionError, ResolutionError

MESH = build_uniform_mesh((0.0, 1.0), 257)


def test_single_subdomain_is_whole_mesh():
    subs = build_overlapping_subdomains(MESH, 1, 0.125)
    pou = build_partition_of_unity(subs, MESH)
    assert subs[0].nodes.size == MESH.size
    np.testing.assert_array_equal(pou.weights[0], 1.0)


def test_two_slabs_default_overlap():
    subs = build_overlapping_subdomains(MESH, 2, 0.125)
    assert subs[0].lo == 0.0 and subs[1].hi == 1.0
    assert subs[0].hi == pytest.approx(0.5625) and subs[1].lo == pytest.approx(0.4375)
    pou = build_partition_of_unity(subs, MESH)
    assert pou.overlap_nodes(0) == 33
    x = MESH.coordinates[0]
    assert pou.weights[0][x < 0.4375 - 1e-9].min() == 1.0
    mid = np.argmin(np.abs(x - 0.5))
    assert pou.weights[0][mid] == pytest.approx(0.5)


def test_ramp_positive_on_each_slab():
    pou = build_partition_of_unity(build_overlapping_subdomains(MESH, 4, 0.125), MESH)
    for ell, sd in enumerate(pou.subdomains):
        assert pou.weights[ell][sd.nodes].min() > 0


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([1, 2, 3, 4, 8]), st.floats(0.05, 0.45), st.sampled_from([129, 257, 513]))
def test_partition_invariants(s, frac, m):
    mesh = build_uniform_mesh((0.0, 1.0), m)
    pou = build_partition_of_unity(build_overlapping_subdomains(mesh, s, frac), mesh)
    report = check_partition(pou)
    assert report.passed, report.constants
    assert pou.weights.min() >= 0.0 and pou.weights.max() <= 1.0


def test_under_resolved_overlap():
    mesh = build_uniform_mesh((0.0, 1.0), 9)
    with pytest.raises(ResolutionError):
        build_overlapping_subdomains(mesh, 4, 0.01)


@pytest.mark.parametrize("frac", [0.0, 0.5, -0.1, 0.7])
def test_overlap_fraction_range(frac):
    with pytest.raises(ValueError):
        build_overlapping_subdomains(MESH, 2, frac)


def test_non_overlapping_subdomains_rejected():
    subs = build_overlapping_subdomains(MESH, 2, 0.125)
    x = MESH.coordinates[0]
    cut = type(subs[0])(0, 0.0, 0.25, np.flatnonzero(x <= 0.25))
    with pytest.raises(PartitionError):
        build_partition_of_unity([cut, subs[1]], MESH)
    with pytest.raises(PartitionError):
        build_partition_of_unity(subs, MESH, profile="bump")


def test_partition_on_2d_mesh():
    mesh = build_uniform_mesh(((0, 1), (0, 1)), 33)
    pou = build_partition_of_unity(build_overlapping_subdomains(mesh, 2, 0.25), mesh)
    assert check_partition(pou).passed
    # weights only vary along axis 0
    w = pou.weights[0].reshape(mesh.shape)
    assert np.all(w == w[:, :1])


def test_source_split_reconstructs():
    pou = build_partition_of_unity(build_overlapping_subdomains(MESH, 4, 0.125), MESH)
    f = SourceDescriptor(lambda t, x: np.exp(-t) * np.cos(np.pi * x) + t,
                         flux=(lambda t, x: np.sin(3 * x) * (1 + t),))
    parts = split_source(f, pou)
    report = check_source_split(f, parts, MESH, np.linspace(0, 1, 7))
    assert report.passed, report.constants


def test_flux_source_acts_as_gradient_pairing(rng):
    # <f, v> = int g v' for the flux part
    g = lambda t, x: 1 + x**2
    f = SourceDescriptor(flux=(g,))
    v = rng.normal(size=MESH.size)
    x = MESH.coordinates[0]
    h = MESH.spacing[0]
    centre = 0.5 * (x[1:] + x[:-1])
    expected = np.sum(h * g(0, centre) * np.diff(v) / h)
    assert h_inner(MESH, f.evaluate(MESH, 0.0), v) == pytest.approx(expected, rel=1e-12)


def test_constant_source_average():
    grid = TimeGrid(1.0, 4)
    f = SourceDescriptor(lambda t, x: 2.5)
    np.testing.assert_allclose(averaged_source(f, MESH, grid, 3), 2.5, rtol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_cubic_source_average_exact(n):
    grid = TimeGrid(1.0, 5)
    f = SourceDescriptor(lambda t, x: t**3 * x + t)
    a, b = grid.t(n - 1), grid.t(n)
    x = MESH.coordinates[0]
    exact = (b**4 - a**4) / 4 / (b - a) * x + (a + b) / 2
    np.testing.assert_allclose(averaged_source(f, MESH, grid, n), exact, rtol=1e-13, atol=1e-15)


def test_average_index_range():
    grid = TimeGrid(1.0, 4)
    f = SourceDescriptor(lambda t, x: t)
    for n in (0, 5):
        with pytest.raises(IndexError):
            averaged_source(f, MESH, grid, n)
    assert not averaged_source(SourceDescriptor.zero(), MESH, grid, 1).any()


def test_tabulated_source_interpolates():
    table = np.vstack([np.zeros(MESH.size), np.ones(MESH.size)])
    f = SourceDescriptor.tabulated([0.0, 1.0], table)
    np.testing.assert_allclose(f.evaluate(MESH, 0.25), 0.25)
    grid = TimeGrid(1.0, 2)
    np.testing.assert_allclose(averaged_source(f, MESH, grid, 2), 0.75, rtol=1e-14)
