import os
import subprocess
import sys
from itertools import combinations
from math import comb, prod

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weingarten import _kernels, _pykernels, symfunc
from weingarten.errors import AdmissibilityError, DomainError


def brute_sigma(kappa, k):
    return sum(prod(c) for c in combinations(kappa, k)) if k else 1.0


def brute_grad(kappa, k):
    return np.array([brute_sigma(np.delete(kappa, i), k - 1) for i in range(len(kappa))])


vectors = st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=6)


def test_sigma_small_values():
    assert symfunc.sigma([1, 2, 3], 2) == 11
    assert symfunc.sigma([1, 2, 3], 3) == 6
    assert symfunc.sigma([1, 2, 3], 0) == 1
    np.testing.assert_array_equal(symfunc.sigma_all([1, 2, 3]), [1, 6, 11, 6])


def test_gradient_and_hessian_values():
    np.testing.assert_array_equal(symfunc.sigma_grad([1, 2, 3], 2), [5, 4, 3])
    np.testing.assert_array_equal(symfunc.sigma_grad([1, 2, 3], 3), [6, 3, 2])
    H = symfunc.sigma_hess([1, 2, 3], 2)
    np.testing.assert_array_equal(H, np.ones((3, 3)) - np.eye(3))
    H3 = symfunc.sigma_hess([1, 2, 3], 3)
    assert H3[0, 1] == 3 and H3[0, 2] == 2 and H3[1, 2] == 1
    assert np.all(np.diag(H3) == 0)


@settings(max_examples=200, deadline=None)
@given(vectors, st.integers(0, 6))
def test_sigma_matches_bruteforce(kappa, k):
    kappa = np.array(kappa)
    if k > kappa.size:
        return
    ref = brute_sigma(kappa, k)
    assert symfunc.sigma(kappa, k) == pytest.approx(ref, rel=1e-12, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(vectors, st.integers(1, 6))
def test_grad_matches_bruteforce(kappa, k):
    kappa = np.array(kappa)
    if k > kappa.size:
        return
    np.testing.assert_allclose(symfunc.sigma_grad(kappa, k), brute_grad(kappa, k), rtol=1e-12, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(vectors, st.integers(1, 6), st.floats(0.1, 5))
def test_homogeneity(kappa, k, c):
    kappa = np.array(kappa)
    if k > kappa.size:
        return
    assert symfunc.sigma(c * kappa, k) == pytest.approx(c ** k * symfunc.sigma(kappa, k), rel=1e-10, abs=1e-9)


def test_hessian_finite_difference(rng):
    for n in (2, 3, 5):
        for k in range(2, n + 1):
            kap = rng.uniform(-1, 2, n)
            H = symfunc.sigma_hess(kap, k)
            eps = 1e-6
            for i in range(n):
                e = np.zeros(n)
                e[i] = eps
                fd = (symfunc.sigma_grad(kap + e, k) - symfunc.sigma_grad(kap - e, k)) / (2 * eps)
                np.testing.assert_allclose(H[i], fd, atol=1e-8)


def test_invalid_order():
    with pytest.raises(DomainError):
        symfunc.sigma([1, 2], 3)
    with pytest.raises(DomainError):
        symfunc.sigma([1, 2], -1)


def test_gamma_cone_membership():
    assert symfunc.in_gamma_k([1, 1, 1], 3)
    assert symfunc.in_gamma_k([2, 2, -1], 1)
    assert symfunc.in_gamma_k([3, 3, -1], 2)
    assert not symfunc.in_gamma_k([3, 3, -1], 3)
    # boundary: sigma_2(1, -1) = -1 and sigma_1 = 0
    assert not symfunc.in_gamma_k([1, -1], 1)
    assert symfunc.in_gamma_k([1, -1], 1, strict=False)
    mask = symfunc.gamma_k_mask(np.array([[1, 1], [1, -2]]), 1)
    np.testing.assert_array_equal(mask, [True, False])


def test_normalized_f():
    assert symfunc.normalized_f([2, 2, 2], 2) == pytest.approx(2.0)
    with pytest.raises(AdmissibilityError):
        symfunc.normalized_f([1, -3, 0], 2)


def _path_second_derivative(kappa, B, k, h=1e-3):
    def f(s):
        return brute_sigma(np.linalg.eigvalsh(np.diag(kappa) + s * B), k)
    return (-f(2 * h) + 16 * f(h) - 30 * f(0) + 16 * f(-h) - f(-2 * h)) / (12 * h * h)


def test_quad_form_against_eigenvalue_path(rng):
    for n in (2, 3, 4):
        for k in range(1, n + 1):
            kap = np.sort(rng.uniform(0.5, 3, n)) + 0.3 * np.arange(n)
            B = rng.normal(size=(n, n))
            B = B + B.T
            q = symfunc.quad_form_second_derivative(kap, B, k)
            assert q == pytest.approx(_path_second_derivative(kap, B, k), rel=1e-5, abs=1e-7)


def test_quad_form_known_value():
    # sigma_2 at (1,2,3) along the symmetric swap direction of entries 1,2
    B = np.zeros((3, 3))
    B[0, 1] = B[1, 0] = 1.0
    assert symfunc.quad_form_second_derivative([1, 2, 3], B, 2) == pytest.approx(-2.0)


def test_quad_form_repeated_eigenvalue_uses_limit():
    kap = np.array([1.0, 1.0, 2.0])
    B = np.zeros((3, 3))
    B[0, 1] = B[1, 0] = 1.0
    # exact: sigma_2 of eig(diag + sB) -> second derivative -2 sigma_0(kappa | 1,2) = -2
    assert symfunc.quad_form_second_derivative(kap, B, 2) == pytest.approx(-2.0)
    near = symfunc.quad_form_second_derivative(kap + [0, 1e-12, 0], B, 2)
    assert near == pytest.approx(-2.0)


def test_concavity_inequality_worked_example():
    rep = symfunc.check_concavity_inequality([1, 2, 3], [1, 1, 1], 2, 1)
    assert rep.lhs == pytest.approx(-6 / 11)
    assert rep.rhs == pytest.approx(-13 / 22)
    assert rep.holds


def test_concavity_inequality_random(rng):
    for _ in range(200):
        n = rng.integers(2, 5)
        k = rng.integers(1, n + 1)
        W = rng.uniform(0.1, 3, n)
        w = rng.normal(size=n)
        for l in range(k):
            assert symfunc.check_concavity_inequality(W, w, k, l).holds
            assert symfunc.check_concavity_inequality(W, w, k, l, delta=rng.uniform(0.2, 5)).holds


def test_concavity_rejects_outside_cone():
    with pytest.raises(AdmissibilityError):
        symfunc.check_concavity_inequality([1, -5, 1], [1, 1, 1], 2, 1)
    with pytest.raises(DomainError):
        symfunc.check_concavity_inequality([1, 2, 3], [1, 1, 1], 2, 2)


def test_newton_maclaurin_example():
    rep = symfunc.check_newton_maclaurin([1, 2, 3], 2)
    assert rep.product == pytest.approx(12.0)  # E1 E3 = 2 * 6
    assert rep.square == pytest.approx((11 / 3) ** 2)
    assert rep.holds


def test_newton_maclaurin_equality_at_umbilic():
    rep = symfunc.check_newton_maclaurin([1.5] * 4, 2)
    assert rep.product == pytest.approx(rep.square)
    assert rep.root_k == pytest.approx(rep.root_km1)
    assert rep.holds


def test_kernel_backends_agree(rng):
    kap = rng.normal(size=(50, 4))
    for k in range(1, 5):
        np.testing.assert_allclose(_kernels.esym(kap, k), _pykernels.esym(kap, k), rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(_kernels.esym_grad(kap, k), _pykernels.esym_grad(kap, k), atol=1e-13)
        np.testing.assert_allclose(_kernels.esym_hess(kap, k), _pykernels.esym_hess(kap, k), atol=1e-13)
    grad = rng.normal(size=(30, 2)) * 0.3
    hess = rng.normal(size=(30, 2, 2))
    hess = hess + np.transpose(hess, (0, 2, 1))
    h = rng.uniform(0.5, 1.0, 30)
    hp = rng.uniform(0.1, 1.0, 30)
    k1, w1 = _kernels.shape_eigs(h, hp, grad, hess)
    k2, w2 = _pykernels.shape_eigs(h, hp, grad, hess)
    np.testing.assert_allclose(k1, k2, atol=1e-12)
    np.testing.assert_allclose(w1, w2, atol=1e-14)


def test_sigma_count_matches_binomial():
    for n in range(1, 7):
        for k in range(n + 1):
            assert symfunc.sigma(np.ones(n), k) == comb(n, k)


def test_pure_fallback_selected_by_env():
    code = "from weingarten import _kernels; print(_kernels.BACKEND)"
    env = dict(os.environ, WEINGARTEN_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
