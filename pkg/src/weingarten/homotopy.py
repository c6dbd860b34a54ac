"""Continuity method from a slice to a prescribed psi, and hypothesis checks.

The path starts at the slice z = t0 where phi(t0) = 1 and the right-hand side
is phi_bar = C(n, k) phi(t) kappa(t)^k, kappa(t) = h'/h. Two mixings are
available:

* ``linear``:          psi_s = s psi + (1 - s) phi_bar
* ``inverse_k_power``: psi_s = (s psi^(-1/k) + (1 - s) phi_bar^(-1/k))^(-k)
"""

import logging
from dataclasses import dataclass, field, replace
from math import comb

import numpy as np
from scipy import optimize

from weingarten import psiexpr
from weingarten.basegrid import derivatives
from weingarten.errors import ContinuationError, DomainError, SolverError, ValidationError
from weingarten.pde import ExprPsi, as_psi, newton_solve
from weingarten.warp import slice_curvature, slice_curvature_derivative

log = logging.getLogger(__name__)

MODES = ("linear", "inverse_k_power")
N_PHI_SAMPLES = 1000


@dataclass(frozen=True)
class PhiSpec:
    t_minus: float
    t_plus: float
    expr: psiexpr.PsiSpec
    t0: float
    interval: tuple

    def __call__(self, t):
        return self.expr.evaluate(t=np.asarray(t, dtype=float))

    def d1(self, t):
        return psiexpr.partial(self.expr, "t", {"t": np.asarray(t, dtype=float)})

    def d2(self, t):
        return psiexpr.second_partial(self.expr, "t", {"t": np.asarray(t, dtype=float)})

    def to_dict(self):
        return {"t_minus": self.t_minus, "t_plus": self.t_plus, "expr": self.expr.source, "t0": self.t0}


def default_phi_expr(t_minus, t_plus):
    return f"exp({(t_minus + t_plus) / 2!r} - t)"


def _worst(ts, margins):
    i = int(np.argmin(margins))
    return float(margins[i]), float(ts[i])


def phi_conditions(phi, k=None):
    """Margins of conditions (i)-(iv) and, with ``k``, of the convexity requirement
    phi' < 0, phi phi'' > (k-1)/k phi'^2 on [t_minus, t_plus]. A condition holds
    when its margin is positive."""
    lo, hi = phi.interval
    ts = np.linspace(lo, hi, N_PHI_SAMPLES + 2)[1:-1]
    val = phi(ts)
    d1 = phi.d1(ts)
    out = {}
    m, t = _worst(ts, val)
    out["i"] = {"margin": m, "worst_t": t, "description": "phi > 0"}
    below = ts[ts <= phi.t_minus]
    above = ts[ts >= phi.t_plus]
    if below.size:
        m, t = _worst(below, phi(below) - 1.0)
    else:
        m, t = float("inf"), float("nan")
    out["ii"] = {"margin": m, "worst_t": t, "description": "phi > 1 for t <= t_minus"}
    if above.size:
        m, t = _worst(above, 1.0 - phi(above))
    else:
        m, t = float("inf"), float("nan")
    out["iii"] = {"margin": m, "worst_t": t, "description": "phi < 1 for t >= t_plus"}
    m, t = _worst(ts, -d1)
    out["iv"] = {"margin": m, "worst_t": t, "description": "phi' < 0"}
    if k is not None:
        band = np.linspace(phi.t_minus, phi.t_plus, N_PHI_SAMPLES)
        p, p1, p2 = phi(band), phi.d1(band), phi.d2(band)
        m1, t1 = _worst(band, -p1)
        m2, t2 = _worst(band, p * p2 - (k - 1) / k * p1 * p1)
        m, t = (m1, t1) if m1 < m2 else (m2, t2)
        out[f"convex_k{k}"] = {"margin": m, "worst_t": t,
                               "description": f"phi' < 0 and phi phi'' > {k - 1}/{k} phi'^2 on [t_minus, t_plus]"}
    for rec in out.values():
        rec["passed"] = bool(rec["margin"] > 0)
    return out


def build_phi(t_minus, t_plus, expr=None, interval=None, profile=None, k=None, validate=True):
    """Barrier function phi with phi(t0) = 1; validates its structural conditions.

    ``interval`` defaults to the profile interval (unbounded right ends are
    truncated for sampling). With ``k`` the convexity requirement needed for
    sphere ambients is validated too.
    """
    if interval is None:
        if profile is None:
            raise DomainError("build_phi needs an interval or a profile")
        interval = (profile.t_min, profile.upper)
    lo, hi = float(interval[0]), float(interval[1])
    if not np.isfinite(hi):
        hi = t_plus + 10.0 * (t_plus - t_minus)
    if not lo < t_minus < t_plus < hi:
        raise DomainError(f"need {lo} < t_minus < t_plus < {hi}")
    spec = psiexpr.parse(expr if expr is not None else default_phi_expr(t_minus, t_plus))
    if spec.free_vars - {"t"}:
        raise DomainError("phi may depend on t only")
    phi = PhiSpec(float(t_minus), float(t_plus), spec, float("nan"), (lo, hi))
    for name, rec in (phi_conditions(phi, k) if validate else {}).items():
        if not rec["passed"]:
            raise ValidationError(
                f"phi condition ({name}) [{rec['description']}] fails at t={rec['worst_t']:.6g} "
                f"(margin {rec['margin']:.3e})", condition=name, point=rec["worst_t"])
    if not (spec.evaluate(t=t_minus) - 1.0) * (spec.evaluate(t=t_plus) - 1.0) < 0:
        raise ValidationError("phi - 1 does not change sign on [t_minus, t_plus]", condition="t0")
    t0 = optimize.bisect(lambda t: float(spec.evaluate(t=t)) - 1.0, t_minus, t_plus, xtol=1e-16, rtol=1e-15)
    return replace(phi, t0=float(t0))


def phi_bar(phi, profile, n, k, t):
    """C(n, k) phi(t) kappa(t)^k: the right-hand side solved by every slice where phi = 1."""
    return comb(n, k) * phi(t) * slice_curvature(profile, t) ** k


class PhiBarPsi:
    """Builtin family psi = scale * phi_bar(t) * perturb(t, x, nu_t)."""

    def __init__(self, phi, profile, n, k, scale=1.0, perturb=None):
        self.phi, self.profile, self.n, self.k = phi, profile, n, k
        self.scale = float(scale)
        self.perturb = None if perturb is None else ExprPsi(perturb)

    @property
    def nu_dependent(self):
        return bool(self.perturb is not None and self.perturb.nu_dependent)

    def base(self, t):
        return self.scale * phi_bar(self.phi, self.profile, self.n, self.k, t)

    def base_dt(self, t):
        kap = slice_curvature(self.profile, t)
        dkap = slice_curvature_derivative(self.profile, t)
        k = self.k
        return self.scale * comb(self.n, k) * (self.phi.d1(t) * kap ** k + k * self.phi(t) * kap ** (k - 1) * dkap)

    def __call__(self, t, u, nu_t):
        out = self.base(t)
        if self.perturb is not None:
            out = out * self.perturb(t, u, nu_t)
        return np.broadcast_to(out, np.shape(t)).astype(float)

    def d_dt(self, t, u, nu_t):
        out = self.base_dt(t)
        if self.perturb is not None:
            out = out * self.perturb(t, u, nu_t) + self.base(t) * self.perturb.d_dt(t, u, nu_t)
        return np.broadcast_to(out, np.shape(t)).astype(float)

    def describe(self):
        d = {"family": "phi_bar", "scale": self.scale}
        if self.perturb is not None:
            d["perturb"] = self.perturb.spec.source
        return d


@dataclass
class HomotopyConfig:
    psi: object
    phi: PhiSpec
    k: int
    mode: str = "linear"
    step: float = 0.1
    min_step: float = 1e-3
    max_step: float = 0.25
    growth: float = 1.5

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"homotopy mode must be one of {MODES}")
        self.psi = as_psi(self.psi)


def psi_s(cfg, s, profile, n, t, u, nu_t):
    """Value of the homotopy right-hand side at parameter ``s``."""
    if not 0.0 <= s <= 1.0:
        raise DomainError("s must lie in [0, 1]")
    target = cfg.psi(t, u, nu_t)
    start = phi_bar(cfg.phi, profile, n, cfg.k, t)
    if s == 1.0:
        return target
    if s == 0.0:
        return np.broadcast_to(start, np.shape(target)).astype(float)
    if cfg.mode == "linear":
        return s * target + (1.0 - s) * start
    if np.any(target <= 0):
        raise DomainError("inverse_k_power mixing needs psi > 0")
    p = -1.0 / cfg.k
    return (s * target ** p + (1.0 - s) * start ** p) ** (-cfg.k)


class HomotopyPsi:
    """psi_s as a right-hand side object for the solver."""

    def __init__(self, cfg, profile, n, s):
        self.cfg, self.profile, self.n, self.s = cfg, profile, n, float(s)

    nu_dependent = property(lambda self: getattr(self.cfg.psi, "nu_dependent", True))

    def __call__(self, t, u, nu_t):
        return psi_s(self.cfg, self.s, self.profile, self.n, t, u, nu_t)

    def d_dt(self, t, u, nu_t):
        step = 1e-6 * (1.0 + np.abs(t))
        return (self(t + step, u, nu_t) - self(t - step, u, nu_t)) / (2.0 * step)


@dataclass
class PathResult:
    z: np.ndarray
    s: float
    records: list = field(default_factory=list)
    accepted: list = field(default_factory=list)


def continue_path(cfg, state, callback=None):
    """March s from 0 to 1, re-solving with damped Newton at each step.

    ``state.z`` should be the slice t0. Steps grow by ``cfg.growth`` (capped at
    ``cfg.max_step``) after a success and halve after a failure; the run stops
    with :class:`ContinuationError` once the step drops below ``cfg.min_step``.
    Returns a :class:`PathResult` whose ``records`` hold one dict per Newton
    iteration (plus rejected-attempt events) and ``accepted`` the final
    diagnostics at each accepted s.
    """
    n = state.n
    records, accepted = [], []

    def solve_at(s, z):
        st = replace(state, z=z, psi=HomotopyPsi(cfg, state.profile, n, s))
        return newton_solve(st)

    def emit(rec):
        records.append(rec)
        if callback:
            callback(rec)

    z, diags = solve_at(0.0, state.z)
    for d in diags:
        emit(d.record(0.0))
    accepted.append(diags[-1].record(0.0))
    s, ds = 0.0, cfg.step
    while s < 1.0:
        s_try = min(1.0, s + ds)
        try:
            z_new, diags = solve_at(s_try, z)
        except (SolverError, DomainError) as exc:
            emit({"s": s_try, "event": "rejected", "reason": type(exc).__name__, "message": str(exc),
                  "last_good_s": s})
            ds *= 0.5
            if ds < cfg.min_step:
                emit({"s": s, "event": "failure", "last_good_s": s})
                raise ContinuationError(f"continuation stalled after s={s:.6g}", s, records) from None
            continue
        for d in diags:
            emit(d.record(s_try))
        accepted.append(diags[-1].record(s_try))
        log.info("continuation: s=%.4f accepted after %d Newton steps", s_try, len(diags) - 1)
        s, z = s_try, z_new
        ds = min(ds * cfg.growth, cfg.max_step)
    return PathResult(z=z, s=s, records=records, accepted=accepted)


# hypothesis checks -----------------------------------------------------------

def _sample_points(mfld):
    return tuple(np.asarray(c).ravel() for c in mfld.mesh)


def _barrier_check(psi, profile, n, k, ts, us, nus, sign):
    # sign=+1: psi - C kappa^k > 0 ; sign=-1: C kappa^k - psi > 0
    T, U0, NU = np.meshgrid(ts, np.arange(us[0].size), nus, indexing="ij")
    U = tuple(u[U0] for u in us)
    vals = psi(T, U, NU)
    ref = comb(n, k) * slice_curvature(profile, T) ** k
    margins = sign * (vals - ref)
    i = np.unravel_index(int(np.argmin(margins)), margins.shape)
    rel = float(np.min(margins / ref))
    return float(margins[i]), {"t": float(T[i]), "u": [float(u[i]) for u in U], "nu_t": float(NU[i])}, rel


def _slice_hessian_check(psi, profile, n, k, lam, mfld, ts):
    """Minimal eigenvalue of the ambient Hessian of f = psi^(-1/k) plus lam f,
    in the orthonormal frame (d/dt, e_i / h), over sample slices."""
    u = mfld.mesh
    worst = (np.inf, None)
    for t in ts:
        dt = 1e-4 * (1.0 + t)
        f = {s: psi(np.full(mfld.shape, t + s * dt), u, np.full(mfld.shape, -1.0)) ** (-1.0 / k)
             for s in (-1, 0, 1)}
        h, hp, _ = profile(t)
        f_t = (f[1] - f[-1]) / (2 * dt)
        f_tt = (f[1] - 2 * f[0] + f[-1]) / dt ** 2
        g0, H0 = derivatives(mfld, f[0])
        gp, _ = derivatives(mfld, f[1])
        gm, _ = derivatives(mfld, f[-1])
        g_t = (gp - gm) / (2 * dt)
        H = np.zeros(mfld.shape + (n + 1, n + 1))
        H[..., 0, 0] = f_tt + lam * f[0]
        H[..., 0, 1:] = g_t / h - hp / h ** 2 * g0
        H[..., 1:, 0] = H[..., 0, 1:]
        H[..., 1:, 1:] = H0 / h ** 2 + (hp / h * f_t + lam * f[0])[..., None, None] * np.eye(n)
        eig = np.linalg.eigvalsh(H)[..., 0]
        i = np.unravel_index(int(np.argmin(eig)), eig.shape)
        if eig[i] < worst[0]:
            worst = (float(eig[i]), {"t": float(t), "u": [float(c[i]) for c in u]})
    return worst


def check_hypotheses(cfg, profile, mfld, nu_samples=None, n_t=64):
    """Sampled check of the barrier, monotonicity and convexity hypotheses.

    Returns a dict of named conditions, each with ``passed``, ``margin`` and
    the worst sample point, plus an overall ``passed`` flag.
    """
    psi, phi, k, n = cfg.psi, cfg.phi, cfg.k, mfld.dim
    nus = np.linspace(-1.0, -0.05, 32) if nu_samples is None else np.asarray(nu_samples, dtype=float)
    if not getattr(psi, "nu_dependent", True):
        nus = nus[:1]
    us = _sample_points(mfld)
    report = {"conditions": {}, "info": {}}
    cond = report["conditions"]
    for name, rec in phi_conditions(phi, k if profile.kind == "sphere" else None).items():
        cond[f"phi_{name}"] = rec

    ts_a = np.linspace(profile.t_min, phi.t_minus, n_t + 1)[1:]
    m, pt, rel = _barrier_check(psi, profile, n, k, ts_a, us, nus, +1)
    cond["a"] = {"passed": m > 0, "margin": m, "relative_margin": rel, "worst": pt,
                 "description": "psi > C(n,k) kappa(t)^k for t <= t_minus"}
    hi = profile.upper if np.isfinite(profile.t_max) else phi.interval[1]
    ts_b = np.linspace(phi.t_plus, hi, n_t + 1)[:-1]
    m, pt, rel = _barrier_check(psi, profile, n, k, ts_b, us, nus, -1)
    cond["b"] = {"passed": m > 0, "margin": m, "relative_margin": rel, "worst": pt,
                 "description": "psi < C(n,k) kappa(t)^k for t >= t_plus"}

    ts_c = np.linspace(phi.t_minus, phi.t_plus, n_t + 2)[1:-1]
    T, U0, NU = np.meshgrid(ts_c, np.arange(us[0].size), nus, indexing="ij")
    U = tuple(u[U0] for u in us)
    h, hp, _ = profile(T)
    val = k * h ** (k - 1) * hp * psi(T, U, NU) + h ** k * psi.d_dt(T, U, NU)
    margins = -val
    i = np.unravel_index(int(np.argmin(margins)), margins.shape)
    cond["c"] = {"passed": bool(margins[i] >= 0), "margin": float(margins[i]),
                 "worst": {"t": float(T[i]), "u": [float(c[i]) for c in U], "nu_t": float(NU[i])},
                 "description": "d/dt (h^k psi) <= 0 on (t_minus, t_plus)"}

    if profile.kind == "sphere":
        if getattr(psi, "nu_dependent", True):
            report["info"]["convexity_surrogate"] = "skipped: psi depends on nu_t"
        else:
            ts = np.linspace(phi.t_minus, phi.t_plus, 9)
            m, pt = _slice_hessian_check(psi, profile, n, k, profile.lam, mfld, ts)
            cond["convexity_surrogate"] = {
                "passed": m >= 0, "margin": m, "worst": pt,
                "description": "Hess(psi^(-1/k)) + lambda psi^(-1/k) g >= 0 on sample slices (surrogate)"}
    report["info"]["k_covered_by_existence_theorem"] = k == 2 or k == n - 1 or profile.kind == "sphere"
    for rec in cond.values():
        rec["passed"] = bool(rec["passed"])
    report["failed"] = [name for name, rec in cond.items() if not rec["passed"]]
    report["passed"] = not report["failed"]
    return report
