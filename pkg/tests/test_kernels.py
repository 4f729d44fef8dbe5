import os
import subprocess
import sys

import numpy as np
import pytest

from splitstep import _kernels
from splitstep._kernels import _pykernels

try:
    from splitstep._kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


@needs_ext
@pytest.mark.parametrize("p", [2.0, 2.5, 3.0, 4.0])
def test_edge_flux_backends_agree(p, rng):
    u = rng.normal(size=200)
    coef = rng.uniform(0.0, 1.0, 199)
    g_py, s_py = _pykernels.edge_flux(u, coef, p, 37.0, 1e-12)
    g_c, s_c = _ckernels.edge_flux(u, coef, p, 37.0, 1e-12)
    np.testing.assert_allclose(g_c, g_py, rtol=1e-13, atol=1e-13 * np.abs(g_py).max())
    np.testing.assert_allclose(s_c, s_py, rtol=1e-13)


@pytest.mark.parametrize("backend", [_pykernels, pytest.param(_ckernels, marks=needs_ext)])
def test_tridiag_solve_matches_dense(backend, rng):
    n = 50
    lower, upper = rng.uniform(-1, 0, n - 1), rng.uniform(-1, 0, n - 1)
    diag = 3.0 + rng.uniform(0, 1, n)
    rhs = rng.normal(size=n)
    A = np.diag(diag) + np.diag(lower, -1) + np.diag(upper, 1)
    np.testing.assert_allclose(backend.tridiag_solve(lower, diag, upper, rhs), np.linalg.solve(A, rhs), rtol=1e-12)


@pytest.mark.parametrize("backend", [_pykernels, pytest.param(_ckernels, marks=needs_ext)])
def test_edge_flux_flat_state_floors_stiffness(backend):
    u = np.ones(5)
    grad, stiff = backend.edge_flux(u, np.ones(4), 4.0, 2.0, 1e-6)
    assert not grad.any()
    np.testing.assert_allclose(stiff, 3.0 * 1e-6 * 4.0)


def test_wrapper_accepts_strided_input(rng):
    u = rng.normal(size=40)[::2]
    grad, _ = _kernels.edge_flux(u, np.ones(19), 2.0, 1.0, 1e-12)
    assert grad.shape == (20,)


@needs_ext
def test_compiled_backend_selected_by_default():
    assert _kernels.BACKEND == "cython"


def test_env_var_forces_fallback():
    env = dict(os.environ, SPLITSTEP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import splitstep; print(splitstep.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
