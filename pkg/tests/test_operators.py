import numpy as np
import pytest

from splitstep import Alpha, OperatorSpec, apply_operator, build_uniform_mesh, h_inner
from splitstep.decomposition import build_overlapping_subdomains, build_partition_of_unity
from splitstep.errors import InvalidWeightError, SpecMismatchError, TimeRangeError
from splitstep.operators import (
    check_coercivity_boundedness,
    check_monotonicity,
    check_radial_continuity,
    check_sum_property,
    check_time_continuity,
    energy,
    galerkin_residual,
    linearize,
    pairing,
    random_state,
)
from tests.oracles import dense_laplacian_1d

MESH1 = build_uniform_mesh((0.0, 1.0), 65)
MESH2 = build_uniform_mesh(((0.0, 1.0), (0.0, 1.0)), 9)
POU1 = build_partition_of_unity(build_overlapping_subdomains(MESH1, 2, 0.25), MESH1)
POU2 = build_partition_of_unity(build_overlapping_subdomains(MESH2, 2, 0.25), MESH2)


def _dense(H):
    if isinstance(H, tuple):
        lower, diag, upper = H
        return np.diag(diag) + np.diag(lower, -1) + np.diag(upper, 1)
    return H.toarray()


def test_alpha_kinds():
    assert Alpha.parse("2.5")(0.3) == 2.5
    a = Alpha.parse("affine 0.5")
    assert a(1.0) == 1.5 and a.minimum(1.0) == 1.0 and a.lipschitz() == 0.5
    tab = Alpha.parse("tabulated 0:1, 0.5:3, 1:2")
    assert tab(0.25) == 2.0 and tab.lipschitz() == 4.0 and tab.minimum(1.0) == 1.0
    assert Alpha.parse(tab.describe()) == tab
    with pytest.raises(ValueError):
        Alpha.parse("cubic 1")


def test_spec_validation():
    with pytest.raises(ValueError):
        OperatorSpec("p_laplace", 1.5)
    with pytest.raises(ValueError):
        OperatorSpec("p_laplace", 2.0, Alpha("affine", (-2.0,)))
    with pytest.raises(ValueError):
        OperatorSpec("biharmonic")
    with pytest.raises(InvalidWeightError):
        OperatorSpec("p_laplace", weight=np.full(MESH1.size, 1.5))


def test_time_outside_horizon():
    with pytest.raises(TimeRangeError):
        apply_operator(OperatorSpec("p_laplace"), MESH1, 1.5, np.zeros(MESH1.size))


def test_zero_kind():
    spec = OperatorSpec("zero")
    u = random_state(MESH1, np.random.default_rng(0))
    assert not apply_operator(spec, MESH1, 0.0, u).any()
    assert energy(spec, MESH1, 0.0, u) == 0.0


def test_linear_laplacian_matches_dense_oracle(rng):
    x = MESH1.coordinates[0]
    L, _ = dense_laplacian_1d(x, alpha=1.7)
    u = rng.normal(size=MESH1.size)
    spec = OperatorSpec("p_laplace", 2.0, Alpha("constant", (1.7,)))
    np.testing.assert_allclose(apply_operator(spec, MESH1, 0.0, u), L @ u, rtol=1e-12, atol=1e-9)


def test_weighted_laplacian_matches_dense_oracle(rng):
    x = MESH1.coordinates[0]
    chi = POU1.weights[1]
    L, _ = dense_laplacian_1d(x, chi=chi)
    u = rng.normal(size=MESH1.size)
    spec = OperatorSpec("p_laplace").weighted(chi)
    np.testing.assert_allclose(apply_operator(spec, MESH1, 0.0, u), L @ u, rtol=1e-12, atol=1e-9)


def test_cosine_is_laplacian_eigenfunction():
    mesh = build_uniform_mesh((0.0, 1.0), 257)
    x = mesh.coordinates[0]
    h = mesh.spacing[0]
    lam = 4 / h**2 * np.sin(np.pi * h / 2) ** 2
    out = apply_operator(OperatorSpec("p_laplace"), mesh, 0.0, np.cos(np.pi * x))
    np.testing.assert_allclose(out, lam * np.cos(np.pi * x), atol=1e-10)


def test_p_laplace_1d_closed_form():
    # u = x^2 on [0, 1]: g = (2 x_mid), flux = g^3 for p = 4
    mesh = build_uniform_mesh((0.0, 1.0), 5)
    x = mesh.coordinates[0]
    h = 0.25
    g = np.diff(x**2) / h
    flux = g**3
    expected = np.zeros(5)
    expected[:-1] -= flux
    expected[1:] += flux
    expected /= np.array([h / 2, h, h, h, h / 2])
    np.testing.assert_allclose(apply_operator(OperatorSpec("p_laplace", 4.0), mesh, 0.0, x**2), expected, rtol=1e-13)


def test_porous_medium_is_laplacian_of_power(rng):
    x = MESH1.coordinates[0]
    L, _ = dense_laplacian_1d(x)
    u = rng.normal(size=MESH1.size)
    out = apply_operator(OperatorSpec("porous_medium", 3.0), MESH1, 0.0, u)
    np.testing.assert_allclose(out, L @ (np.abs(u) * u), rtol=1e-11, atol=1e-8)


GRAD_CASES = [
    ("p_laplace", 2.0, MESH1),
    ("p_laplace", 4.0, MESH1),
    ("p_laplace", 3.0, MESH2),
    ("anisotropic", 3.0, MESH2),
    ("anisotropic", 4.0, MESH1),
]


@pytest.mark.parametrize("kind, p, mesh", GRAD_CASES)
def test_residual_is_energy_gradient(kind, p, mesh, rng):
    spec = OperatorSpec(kind, p, Alpha("affine", (0.5,)))
    u = random_state(mesh, rng)
    grad = galerkin_residual(spec, mesh, 0.3, u)
    d = rng.normal(size=mesh.size)
    eps = 1e-6
    fd = (energy(spec, mesh, 0.3, u + eps * d) - energy(spec, mesh, 0.3, u - eps * d)) / (2 * eps)
    assert fd == pytest.approx(grad @ d, rel=1e-6)


@pytest.mark.parametrize("kind, p, mesh", GRAD_CASES + [("porous_medium", 3.0, MESH1), ("porous_medium", 2.0, MESH2)])
def test_linearization_matches_finite_differences(kind, p, mesh, rng):
    spec = OperatorSpec(kind, p)
    u = random_state(mesh, rng)
    H = _dense(linearize(spec, mesh, 0.0, u, 0.0))
    d = rng.normal(size=mesh.size)
    eps = 1e-6
    fd = (galerkin_residual(spec, mesh, 0.0, u + eps * d) - galerkin_residual(spec, mesh, 0.0, u - eps * d)) / (2 * eps)
    np.testing.assert_allclose(H @ d, fd, rtol=1e-5, atol=1e-5 * np.abs(fd).max())


def test_linearization_symmetric_positive(rng):
    spec = OperatorSpec("p_laplace", 4.0)
    H = _dense(linearize(spec, MESH1, 0.0, random_state(MESH1, rng), 1e-12))
    np.testing.assert_allclose(H, H.T, atol=1e-12 * np.abs(H).max())
    assert np.linalg.eigvalsh(H).min() > -1e-8 * np.abs(H).max()


def test_porous_pairing_is_weighted_power(rng):
    spec = OperatorSpec("porous_medium", 3.0)
    u, v = rng.normal(size=(2, MESH1.size))
    expected = np.sum(MESH1.weights * np.abs(u) * u * v)
    assert pairing(spec, MESH1, 0.0, u, v) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("kind, p, mesh, pou", [
    ("p_laplace", 2.0, MESH1, POU1),
    ("p_laplace", 4.0, MESH1, POU1),
    ("p_laplace", 3.0, MESH2, POU2),
    ("anisotropic", 4.0, MESH2, POU2),
    ("porous_medium", 3.0, MESH1, POU1),
])
def test_sum_property(kind, p, mesh, pou):
    whole = OperatorSpec(kind, p)
    parts = [whole.weighted(chi) for chi in pou.weights]
    assert check_sum_property(parts, whole, mesh, 0.5).passed


def test_sum_property_rejects_mismatch():
    whole = OperatorSpec("p_laplace", 2.0)
    parts = [OperatorSpec("p_laplace", 3.0).weighted(chi) for chi in POU1.weights]
    with pytest.raises(SpecMismatchError):
        check_sum_property(parts, whole, MESH1, 0.0)


@pytest.mark.parametrize("kind, p", [("p_laplace", 2.0), ("p_laplace", 4.0), ("porous_medium", 3.0), ("anisotropic", 3.0)])
@pytest.mark.parametrize("weighted", [False, True])
def test_structure_checks_pass(kind, p, weighted):
    spec = OperatorSpec(kind, p, Alpha("affine", (0.5,)))
    if weighted:
        spec = spec.weighted(POU1.weights[0])
    for check in (check_monotonicity, check_coercivity_boundedness, check_radial_continuity):
        report = check(spec, MESH1, 0.4, samples=20)
        assert report.passed, (report.name, report.worst_margin)
    assert check_time_continuity(spec, MESH1, samples=10).passed


def test_monotonicity_eta_for_laplacian():
    report = check_monotonicity(OperatorSpec("p_laplace"), MESH1, 0.0, samples=10)
    assert report.constants["eta_hat"] == pytest.approx(1.0, rel=1e-12)


def test_radial_continuity_flags_a_jump(monkeypatch):
    from splitstep import operators

    real = operators.pairing
    monkeypatch.setattr(operators, "pairing", lambda s, m, t, u, v: real(s, m, t, u, v) + 1e3 * (u[0] > 0))
    report = check_radial_continuity(OperatorSpec("p_laplace"), MESH1, 0.0, samples=5, seed=3)
    assert not report.passed


def test_pairing_equals_inner_product_of_nodal_values(rng):
    spec = OperatorSpec("p_laplace", 3.0)
    u, v = rng.normal(size=(2, MESH1.size))
    assert pairing(spec, MESH1, 0.0, u, v) == pytest.approx(h_inner(MESH1, apply_operator(spec, MESH1, 0.0, u), v))
