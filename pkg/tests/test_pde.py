from math import comb

import numpy as np
import pytest

from weingarten.basegrid import build_grid
from weingarten.config import manufactured_psi
from weingarten.errors import AdmissibilityError, DomainError
from weingarten.homotopy import PhiBarPsi, build_phi
from weingarten.pde import (GridPsi, SolverOptions, SolverState, jacobian, monitors, newton_solve,
                            residual)
from weingarten.psiexpr import parse


def slice_state(sphere, s2grid, z, k=2, **opts):
    phi = build_phi(0.3, 1.2, profile=sphere)
    return SolverState(z, k, PhiBarPsi(phi, sphere, 2, k), sphere, s2grid, SolverOptions(**opts))


def test_residual_zero_on_slice(sphere):
    g = build_grid("torus2", 8, 8)
    for k in (1, 2):
        st = SolverState(np.pi / 4, k, f"{comb(2, k)} * cot(t)^{k}", sphere, g)
        assert np.max(np.abs(residual(st))) == 0.0
        raw = SolverState(np.pi / 4, k, f"{comb(2, k)} * cot(t)^{k}", sphere, g, SolverOptions(normalized=False))
        assert np.max(np.abs(residual(raw))) <= 1e-15


def test_residual_zero_at_manufactured_state(euclid):
    g = build_grid("torus2", 16, 16)
    psi = manufactured_psi(parse("0.75 + 0.03*cos(x1)*cos(x2)"), euclid, g, 2)
    st = SolverState(psi.z_star, 2, psi, euclid, g)
    assert np.max(np.abs(residual(st))) <= 1e-12


def test_perturbed_slice_residual_is_first_order(sphere, s2grid):
    th, ph = s2grid.mesh
    norms = []
    for eps in (1e-2, 5e-3, 2.5e-3):
        st = slice_state(sphere, s2grid, 0.75 + eps * np.sin(th) * np.cos(ph))
        norms.append(np.max(np.abs(residual(st))))
    ratios = np.array(norms[:-1]) / np.array(norms[1:])
    np.testing.assert_allclose(ratios, 2.0, rtol=0.05)


def test_jacobian_directional_consistency(rng, sphere, s2grid):
    th, ph = s2grid.mesh
    z = 0.75 + 0.02 * np.sin(th) * np.cos(ph)
    st = slice_state(sphere, s2grid, z)
    J = jacobian(st)
    v = np.cos(th) + 0.5 * np.sin(th) ** 2 * np.sin(2 * ph)
    eps = 1e-6
    fd = (residual(st, z + eps * v) - residual(st, z)).ravel() / eps
    Jv = J @ v.ravel()
    assert np.max(np.abs(fd - Jv)) / np.max(np.abs(Jv)) <= 1e-4


def test_jacobian_column_check(sphere, s2grid):
    z = np.full(s2grid.shape, 0.75)
    st = slice_state(sphere, s2grid, z)
    J = jacobian(st).toarray()
    j = 5 * 32 + 3
    e = np.zeros(z.size)
    e[j] = 1e-6
    fd = (residual(st, z + e.reshape(z.shape)) - residual(st, z)).ravel() / 1e-6
    assert np.max(np.abs(fd - J[:, j])) / np.max(np.abs(J[:, j])) <= 1e-4


def test_jacobian_translation_equivariant_on_torus(euclid):
    g = build_grid("torus2", 8, 8)
    st = SolverState(1.5, 2, "2/t^2 * exp(1.5 - t)", euclid, g)
    J = jacobian(st).toarray()
    col0 = J[:, 0].reshape(8, 8)
    col = J[:, 3 * 8 + 5].reshape(8, 8)
    np.testing.assert_allclose(np.roll(col0, (3, 5), axis=(0, 1)), col, atol=1e-8)


def test_jacobian_constant_direction_matches_slice_derivative(sphere, s2grid):
    # at the slice t0 of psi = phi_bar: R(t) = kappa - phi^(1/k) kappa, so dR/dt = -phi'(t0) kappa(t0)/k
    st = slice_state(sphere, s2grid, np.full(s2grid.shape, 0.75))
    J = jacobian(st)
    expected = 1.0 / np.tan(0.75) / 2.0
    np.testing.assert_allclose(J @ np.ones(s2grid.size), expected, rtol=1e-4)


def test_newton_slice_recovery(sphere, s2grid):
    st = slice_state(sphere, s2grid, 0.85, tol_residual=1e-13)
    z, diags = newton_solve(st)
    assert np.max(np.abs(z - 0.75)) <= 1e-9
    res = [d.residual_norm for d in diags]
    assert all(b < a for a, b in zip(res, res[1:]))
    assert all(d.gamma_k_ok for d in diags)


def test_manufactured_k1(euclid):
    g = build_grid("torus1", 128)
    zs = parse("0.75 + 0.05*cos(x1)")
    psi = manufactured_psi(zs, euclid, g, 1)
    z, _ = newton_solve(SolverState(0.75, 1, psi, euclid, g, SolverOptions(tol_residual=1e-12)))
    assert np.max(np.abs(z - psi.z_star)) <= 1e-8


def test_normalized_and_raw_agree(euclid):
    g = build_grid("torus1", 64)
    psi = manufactured_psi(parse("1 + 0.1*sin(x1)"), euclid, g, 1, power=2.0)
    za, _ = newton_solve(SolverState(1.0, 1, psi, euclid, g, SolverOptions(tol_residual=1e-12)))
    zb, _ = newton_solve(SolverState(1.0, 1, psi, euclid, g, SolverOptions(tol_residual=1e-12, normalized=False)))
    assert np.max(np.abs(za - zb)) <= 1e-8


def test_inadmissible_initial_state(sphere):
    g = build_grid("torus1", 32)
    u = g.mesh[0]
    # strong oscillation makes kappa negative somewhere
    st = SolverState(0.75 + 0.2 * np.cos(6 * u), 1, "cot(t)", sphere, g)
    with pytest.raises(AdmissibilityError) as exc:
        newton_solve(st)
    assert exc.value.point is not None


def test_monitors_on_slice(sphere, s2grid):
    t0 = 0.75
    d = monitors(slice_state(sphere, s2grid, t0))
    assert d.kappa_max == pytest.approx(1 / np.tan(t0), rel=1e-14)
    assert d.min_shape_eigenvalue == pytest.approx(1 / np.tan(t0), rel=1e-14)
    assert d.gradmax == 0.0
    assert d.tau_min == pytest.approx(np.sin(t0), rel=1e-14)
    assert d.z_range == (t0, t0) and d.gamma_k_ok


def test_state_validation(sphere, s2grid):
    with pytest.raises(DomainError):
        SolverState(0.75, 3, "1", sphere, s2grid)
    with pytest.raises(DomainError):
        residual(SolverState(0.75, 2, "-1", sphere, s2grid))


def test_grid_psi_time_dependence():
    p = GridPsi(np.array([2.0, 4.0]), np.array([1.0, 1.0]), power=2.0)
    np.testing.assert_allclose(p(np.array([2.0, 2.0]), None, None), [0.5, 1.0])
    np.testing.assert_allclose(p.d_dt(np.array([2.0, 2.0]), None, None), [-0.5, -1.0])


def test_threaded_jacobian_matches_serial(monkeypatch, sphere, s2grid):
    th, ph = s2grid.mesh
    st = slice_state(sphere, s2grid, 0.75 + 0.01 * np.sin(th) * np.cos(ph))
    serial = jacobian(st).toarray()
    monkeypatch.setenv("WEINGARTEN_THREADS", "3")
    np.testing.assert_array_equal(jacobian(st).toarray(), serial)
