"""Discrete sigma_k(kappa(z)) = psi on the base grid and its damped Newton solver."""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from weingarten import _kernels, psiexpr
from weingarten.errors import (AdmissibilityError, DivergenceError, DomainError,
                               IterationLimitError, SingularSystemError)
from weingarten.graphgeom import grid_geometry
from weingarten.symfunc import gamma_k_mask

log = logging.getLogger(__name__)

DIRECT_SOLVE_MAX = 64 * 64


# right-hand sides -------------------------------------------------------------

class ExprPsi:
    """psi given by a parsed expression in t, x1..xn and nu_t."""

    def __init__(self, spec):
        self.spec = psiexpr.parse(spec) if isinstance(spec, str) else spec

    def bindings(self, t, u, nu_t):
        env = {"t": t, "nu_t": nu_t}
        for i, ui in enumerate(u):
            env[f"x{i + 1}"] = ui
        return env

    def __call__(self, t, u, nu_t):
        return np.broadcast_to(self.spec.evaluate(self.bindings(t, u, nu_t)), np.shape(t)).astype(float)

    def d_dt(self, t, u, nu_t):
        return np.broadcast_to(psiexpr.partial(self.spec, "t", self.bindings(t, u, nu_t)),
                               np.shape(t)).astype(float)

    @property
    def nu_dependent(self):
        return "nu_t" in self.spec.free_vars

    def describe(self):
        return {"expr": self.spec.source}


class CallablePsi:
    """psi from a vectorized callable ``fn(t, u, nu_t)``; d/dt by central differences."""

    nu_dependent = True

    def __init__(self, fn, name="callable"):
        self.fn = fn
        self.name = name

    def __call__(self, t, u, nu_t):
        return np.broadcast_to(np.asarray(self.fn(t, u, nu_t), dtype=float), np.shape(t)).astype(float)

    def d_dt(self, t, u, nu_t):
        step = 1e-6 * (1.0 + np.abs(t))
        return (self(t + step, u, nu_t) - self(t - step, u, nu_t)) / (2.0 * step)

    def describe(self):
        return {"callable": self.name}


class GridPsi:
    """Node-sampled psi for manufactured solutions.

    ``psi(t, u) = values(u) * (t_ref(u) / t)^power``; with ``power = 0`` psi is
    t independent. A positive power makes d/dt (h^k psi) < 0 for h = t when
    power > k, which keeps the linearization invertible.
    """

    nu_dependent = False

    def __init__(self, values, t_ref=None, power=0.0):
        self.values = np.asarray(values, dtype=float)
        self.t_ref = None if t_ref is None else np.asarray(t_ref, dtype=float)
        self.power = float(power)

    def __call__(self, t, u, nu_t):
        if self.power == 0.0:
            return np.broadcast_to(self.values, np.shape(t)).astype(float)
        return self.values * (self.t_ref / t) ** self.power

    def d_dt(self, t, u, nu_t):
        if self.power == 0.0:
            return np.zeros(np.shape(t))
        return -self.power * self(t, u, nu_t) / t

    def describe(self):
        return {"grid_sampled": True, "power": self.power}


def as_psi(psi):
    if isinstance(psi, (str, psiexpr.PsiSpec)):
        return ExprPsi(psi)
    if hasattr(psi, "d_dt"):
        return psi
    if callable(psi):
        return CallablePsi(psi)
    raise TypeError(f"cannot use {psi!r} as psi")


# state -----------------------------------------------------------------------

@dataclass
class SolverOptions:
    tol_residual: float = 1e-10
    max_newton: int = 50
    normalized: bool = True
    armijo: float = 1e-4
    min_alpha: float = 2.0 ** -30
    fd_rel_step: float = 1e-6
    gamma_margin: float = 0.0


@dataclass
class SolverState:
    z: np.ndarray
    k: int
    psi: object
    profile: object
    mfld: object
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        self.z = np.array(self.z, dtype=float)
        if self.z.ndim == 0:
            self.z = np.full(self.mfld.shape, float(self.z))
        self.psi = as_psi(self.psi)
        n = self.mfld.dim
        if not 1 <= self.k <= n:
            raise DomainError(f"k={self.k} must lie in [1, {n}]")

    @property
    def n(self):
        return self.mfld.dim

    def with_z(self, z):
        return replace(self, z=np.array(z, dtype=float))


@dataclass
class Diagnostics:
    residual_norm: float
    kappa_max: float
    gradmax: float
    tau_min: float
    z_range: tuple
    gamma_k_ok: bool
    min_shape_eigenvalue: float
    iter: int = 0
    step: float = 0.0

    def record(self, s=None):
        out = {"s": s, "iter": self.iter, "residual": self.residual_norm,
               "kappa_max": self.kappa_max, "gradmax": self.gradmax, "tau_min": self.tau_min,
               "min_shape_eig": self.min_shape_eigenvalue, "z_min": self.z_range[0],
               "z_max": self.z_range[1], "gamma_k_ok": self.gamma_k_ok, "step": self.step}
        return out

    def to_dict(self):
        d = asdict(self)
        d["z_range"] = list(self.z_range)
        return d


# residual -------------------------------------------------------------------

def _operator(state, z):
    """(R, geometry) for field z; raises on inadmissible or out-of-range input."""
    geo = grid_geometry(state.profile, state.mfld, z)
    n, k = state.n, state.k
    kap = geo.kappa.reshape(-1, n)
    ok = gamma_k_mask(kap, k, state.options.gamma_margin)
    if not np.all(ok):
        bad = np.unravel_index(int(np.argmin(ok)), z.shape)
        raise AdmissibilityError(
            f"principal curvatures {geo.kappa[bad].tolist()} at node {bad} not in Gamma_{k}", point=bad)
    sk = _kernels.esym(kap, k)[:, k].reshape(z.shape)
    psi = state.psi(z, state.mfld.mesh, geo.nu_t)
    if state.options.normalized:
        if np.any(psi <= 0):
            bad = np.unravel_index(int(np.argmin(psi)), z.shape)
            raise DomainError(f"psi must be positive for the normalized operator (node {bad})")
        c = comb(n, k)
        R = (sk / c) ** (1.0 / k) - (psi / c) ** (1.0 / k)
    else:
        R = sk - psi
    return R, geo


def residual(state, z=None):
    """Pointwise F(kappa) - Psi on the grid (normalized or raw per options)."""
    return _operator(state, state.z if z is None else np.asarray(z, dtype=float))[0]


def is_admissible(state, z):
    try:
        _operator(state, z)
    except (AdmissibilityError, DomainError):
        return False
    return True


# Jacobian -------------------------------------------------------------------

@lru_cache(maxsize=32)
def _coloring(kind, shape, nbrs_bytes):
    nbrs = np.frombuffer(nbrs_bytes, dtype=np.int64).reshape(int(np.prod(shape)), -1)
    N = nbrs.shape[0]
    rows = np.repeat(np.arange(N), nbrs.shape[1])
    cols = nbrs.ravel()
    pairs = np.unique(rows * N + cols)
    rows, cols = pairs // N, pairs % N
    # rows touched by each column
    order = np.argsort(cols, kind="stable")
    col_rows = np.split(rows[order], np.searchsorted(cols[order], np.arange(1, N)))
    row_cols = [nbrs[i] for i in range(N)]
    color = -np.ones(N, dtype=np.int64)
    for j in range(N):
        used = set()
        for i in col_rows[j]:
            used.update(color[row_cols[i]].tolist())
        c = 0
        while c in used:
            c += 1
        color[j] = c
    return rows, cols, color


def jacobian_pattern(mfld):
    """(rows, cols, color) of the stencil sparsity and a column coloring."""
    nbrs = np.ascontiguousarray(mfld.neighbors(), dtype=np.int64)
    return _coloring(mfld.kind, tuple(mfld.shape), nbrs.tobytes())


def _threads():
    try:
        return max(1, int(os.environ.get("WEINGARTEN_THREADS", "1")))
    except ValueError:
        return 1


def jacobian(state, z=None):
    """Colored central-difference Jacobian of the residual as a CSR matrix."""
    z = state.z if z is None else np.asarray(z, dtype=float)
    rows, cols, color = jacobian_pattern(state.mfld)
    N = z.size
    ncolors = int(color.max()) + 1
    base_eps = state.options.fd_rel_step * (1.0 + float(np.max(np.abs(z))))
    zf = z.ravel()

    def central(mask, eps):
        rp = residual(state, (zf + eps * mask).reshape(z.shape)).ravel()
        rm = residual(state, (zf - eps * mask).reshape(z.shape)).ravel()
        return (rp - rm) / (2.0 * eps)

    def column_block(c):
        # stencil weights ~1/dx^2 make the third derivative large; Richardson
        # removes the O(eps^2) term
        mask = (color == c).astype(float)
        eps = base_eps
        for _ in range(4):
            try:
                return (4.0 * central(mask, 0.5 * eps) - central(mask, eps)) / 3.0
            except (AdmissibilityError, DomainError):
                eps /= 10.0
        raise AdmissibilityError(f"finite-difference perturbation of color {c} leaves Gamma_{state.k}")

    nthreads = _threads()
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            blocks = list(ex.map(column_block, range(ncolors)))
    else:
        blocks = [column_block(c) for c in range(ncolors)]
    data = np.empty(rows.size)
    for c in range(ncolors):
        sel = color[cols] == c
        data[sel] = blocks[c][rows[sel]]
    return sp.csr_matrix((data, (rows, cols)), shape=(N, N))


def _solve(J, rhs):
    N = J.shape[0]
    if N <= DIRECT_SOLVE_MAX:
        try:
            x = spla.splu(J.tocsc()).solve(rhs)
        except RuntimeError as exc:
            raise SingularSystemError(f"Newton system is singular: {exc}") from None
    else:
        ilu = spla.spilu(J.tocsc(), drop_tol=1e-6, fill_factor=20)
        M = spla.LinearOperator(J.shape, ilu.solve)
        x, info = spla.gmres(J, rhs, M=M, rtol=1e-12, restart=100, maxiter=200)
        if info != 0:
            raise SingularSystemError(f"GMRES did not converge (info={info})")
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("Newton system produced non-finite step")
    return x


# monitors and Newton ---------------------------------------------------------

def _diagnostics(state, z, R, geo, it=0, step=0.0):
    kap = geo.kappa
    ok = bool(np.all(gamma_k_mask(kap.reshape(-1, state.n), state.k)))
    return Diagnostics(
        residual_norm=float(np.max(np.abs(R))) if R is not None else float("nan"),
        kappa_max=float(np.max(kap[..., 0])),
        gradmax=float(np.max(geo.gradnorm)),
        tau_min=float(np.min(geo.tau)),
        z_range=(float(np.min(z)), float(np.max(z))),
        gamma_k_ok=ok,
        min_shape_eigenvalue=float(np.min(kap[..., -1])),
        iter=it, step=step,
    )


def monitors(state, z=None):
    """Estimate-related quantities of the current (or given) field."""
    z = state.z if z is None else np.asarray(z, dtype=float)
    try:
        R, geo = _operator(state, z)
    except AdmissibilityError:
        R, geo = None, grid_geometry(state.profile, state.mfld, z)
    return _diagnostics(state, z, R, geo)


def newton_solve(state, callback=None):
    """Damped Newton for R(z) = 0 from ``state.z``.

    Each step solves J d = -R and backtracks by halving until the trial
    field stays in the interval, is admissible, and reduces max|R|
    sufficiently. Returns ``(z, diagnostics)``; raises a SolverError
    subclass carrying the history on failure.
    """
    opts = state.options
    z = state.z.copy()
    R, geo = _operator(state, z)
    diags = [_diagnostics(state, z, R, geo, 0)]
    if callback:
        callback(diags[-1])
    norm = diags[-1].residual_norm
    for it in range(1, opts.max_newton + 1):
        if norm <= opts.tol_residual:
            return z, diags
        try:
            J = jacobian(state, z)
        except AdmissibilityError as exc:
            raise DivergenceError(f"iterate too close to the cone boundary: {exc}", diags) from None
        try:
            d = _solve(J, -R.ravel()).reshape(z.shape)
        except SingularSystemError as exc:
            raise SingularSystemError(str(exc), diags) from None
        alpha = 1.0
        while True:
            trial = z + alpha * d
            try:
                R_t, geo_t = _operator(state, trial)
                norm_t = float(np.max(np.abs(R_t)))
                if norm_t < (1.0 - opts.armijo * alpha) * norm:
                    break
            except (AdmissibilityError, DomainError):
                pass
            alpha *= 0.5
            if alpha < opts.min_alpha:
                raise DivergenceError(
                    f"no admissible decreasing step at iteration {it} (|R|={norm:.3e})", diags)
        z, R, geo, norm = trial, R_t, geo_t, norm_t
        diags.append(_diagnostics(state, z, R, geo, it, alpha))
        log.debug("newton %d: |R|=%.3e alpha=%.3g", it, norm, alpha)
        if callback:
            callback(diags[-1])
    if norm <= opts.tol_residual:
        return z, diags
    raise IterationLimitError(f"no convergence in {opts.max_newton} iterations (|R|={norm:.3e})", diags)
