from math import comb

import numpy as np
import pytest

from weingarten.basegrid import build_grid
from weingarten.errors import ContinuationError, DomainError, ValidationError
from weingarten.homotopy import (HomotopyConfig, PhiBarPsi, build_phi, check_hypotheses, continue_path,
                                 phi_bar, phi_conditions, psi_s)
from weingarten.pde import SolverState
from weingarten.psiexpr import parse
from weingarten.warp import WarpProfile, slice_curvature


@pytest.fixture
def phi(sphere):
    return build_phi(0.3, 1.2, profile=sphere)


def test_default_phi_t0(phi):
    assert phi.t0 == pytest.approx(0.75, abs=1e-15)
    assert phi(0.75) == pytest.approx(1.0, abs=1e-15)


def test_default_phi_conditions_pass(phi):
    for k in (2, 3, 4):
        conds = phi_conditions(phi, k)
        assert all(c["passed"] for c in conds.values())
        assert conds[f"convex_k{k}"]["margin"] > 0


@pytest.mark.parametrize("tm,tp", [(0.1, 0.4), (0.5, 1.5), (0.2, 1.5)])
def test_default_phi_valid_on_subintervals(sphere, tm, tp):
    p = build_phi(tm, tp, profile=sphere, k=2)
    assert p.t0 == pytest.approx(0.5 * (tm + tp))


def test_linear_phi_fails_positivity():
    with pytest.raises(ValidationError) as exc:
        build_phi(0.5, 1.5, expr="1 - t", interval=(0.0, 2.0))
    assert exc.value.condition == "i"
    assert exc.value.point > 1.0


def test_bad_interval(sphere):
    with pytest.raises(DomainError):
        build_phi(1.2, 0.3, profile=sphere)


def test_psi_s_endpoints(rng, sphere, phi):
    psi = PhiBarPsi(phi, sphere, 2, 2, perturb=parse("1 + 0.1*sin(x1)*cos(x2)"))
    t = rng.uniform(0.2, 1.4, 50)
    u = (rng.uniform(0, np.pi, 50), rng.uniform(0, 2 * np.pi, 50))
    nu = -np.ones(50)
    for mode in ("linear", "inverse_k_power"):
        cfg = HomotopyConfig(psi, phi, 2, mode=mode)
        np.testing.assert_allclose(psi_s(cfg, 1.0, sphere, 2, t, u, nu), psi(t, u, nu), rtol=1e-14)
        ref = phi(t) * comb(2, 2) * slice_curvature(sphere, t) ** 2
        np.testing.assert_allclose(psi_s(cfg, 0.0, sphere, 2, t, u, nu), ref, rtol=1e-14)


def test_inverse_power_fixed_point_and_monotone(sphere, phi):
    cfg = HomotopyConfig(PhiBarPsi(phi, sphere, 2, 2), phi, 2, mode="inverse_k_power")
    t = np.array([0.5, 0.9])
    mid = psi_s(cfg, 0.5, sphere, 2, t, None, -1.0)
    np.testing.assert_allclose(mid, phi_bar(phi, sphere, 2, 2, t), rtol=1e-14)
    cfg2 = HomotopyConfig(PhiBarPsi(phi, sphere, 2, 2, scale=3.0), phi, 2, mode="inverse_k_power")
    vals = [psi_s(cfg2, s, sphere, 2, t, None, -1.0) for s in np.linspace(0, 1, 11)]
    assert np.all(np.diff(np.array(vals), axis=0) > 0)


def test_inverse_power_needs_positive_target(sphere, phi):
    cfg = HomotopyConfig("-1", phi, 2, mode="inverse_k_power")
    u = (np.array([0.5]), np.array([0.5]))
    with pytest.raises(DomainError):
        psi_s(cfg, 0.5, sphere, 2, np.array([0.5]), u, -1.0)
    with pytest.raises(DomainError):
        psi_s(cfg, 1.5, sphere, 2, np.array([0.5]), u, -1.0)


def test_constant_target_path_is_noop(sphere, phi):
    g = build_grid("sphere2", 8, 16)
    cfg = HomotopyConfig(PhiBarPsi(phi, sphere, 2, 2), phi, 2, mode="linear")
    res = continue_path(cfg, SolverState(phi.t0, 2, cfg.psi, sphere, g))
    assert res.s == 1.0
    assert np.max(np.abs(res.z - phi.t0)) <= 1e-12
    assert all(r["iter"] == 0 for r in res.accepted)


def test_continuation_perturbed_target(sphere, phi):
    g = build_grid("sphere2", 8, 16)
    psi = PhiBarPsi(phi, sphere, 2, 2, perturb=parse("1 + 0.05*sin(x1)*cos(x2)"))
    cfg = HomotopyConfig(psi, phi, 2, mode="inverse_k_power")
    res = continue_path(cfg, SolverState(phi.t0, 2, psi, sphere, g))
    assert res.s == 1.0
    assert res.accepted[-1]["residual"] <= 1e-8
    assert all(r["min_shape_eig"] > 0 for r in res.records if "event" not in r)


def test_violator_stalls_with_last_good_s(sphere, phi):
    g = build_grid("sphere2", 8, 16)
    psi = PhiBarPsi(phi, sphere, 2, 2, scale=10.0)
    cfg = HomotopyConfig(psi, phi, 2, mode="inverse_k_power")
    with pytest.raises(ContinuationError) as exc:
        continue_path(cfg, SolverState(phi.t0, 2, psi, sphere, g))
    assert 0.0 < exc.value.last_s < 1.0
    last = exc.value.history[-1]
    assert last["event"] == "failure" and last["last_good_s"] == exc.value.last_s


def test_hypotheses_pass_for_phi_bar(sphere, phi, s2grid):
    cfg = HomotopyConfig(PhiBarPsi(phi, sphere, 2, 2), phi, 2)
    rep = check_hypotheses(cfg, sphere, s2grid)
    assert rep["passed"], rep["failed"]
    for name in ("a", "b", "c", "convexity_surrogate"):
        assert rep["conditions"][name]["margin"] > 0


def test_hypotheses_flag_violator(sphere, phi, s2grid):
    cfg = HomotopyConfig(PhiBarPsi(phi, sphere, 2, 2, scale=10.0), phi, 2)
    rep = check_hypotheses(cfg, sphere, s2grid)
    assert rep["failed"] == ["b"]
    assert rep["conditions"]["b"]["worst"]["t"] == pytest.approx(1.2)


def test_constant_psi_fails_monotonicity():
    p = WarpProfile("euclidean")
    phi = build_phi(0.3, 1.2, profile=p)
    cfg = HomotopyConfig("1.0", phi, 2)
    rep = check_hypotheses(cfg, p, build_grid("torus2", 8, 8))
    assert "c" in rep["failed"]
    assert rep["conditions"]["c"]["margin"] < 0


def test_nu_dependent_psi_skips_surrogate(sphere, phi, s2grid):
    cfg = HomotopyConfig(PhiBarPsi(phi, sphere, 2, 2, perturb=parse("1 - 0.01*(1 + nu_t)")), phi, 2)
    rep = check_hypotheses(cfg, sphere, s2grid)
    assert "convexity_surrogate" not in rep["conditions"]
    assert rep["info"]["convexity_surrogate"].startswith("skipped")
