"""Elementary symmetric functions of eigenvalue vectors and their calculus.

All functions accept any real sequence; entries need not be sorted. Batched
evaluation goes through :mod:`weingarten._kernels`.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from weingarten import _kernels
from weingarten.errors import AdmissibilityError, DomainError


def _as_kappa(kappa):
    kappa = np.asarray(kappa, dtype=float)
    if kappa.ndim != 1 or kappa.size < 1:
        raise DomainError("kappa must be a nonempty 1-D vector")
    if not np.all(np.isfinite(kappa)):
        raise DomainError("kappa entries must be finite")
    return kappa


def _check_order(k, n, lo):
    if not lo <= k <= n:
        raise DomainError(f"order k={k} outside [{lo}, {n}]")


def sigma(kappa, k):
    """k-th elementary symmetric function; sigma_0 = 1.

    >>> sigma([1, 2, 3], 2)
    11.0
    """
    kappa = _as_kappa(kappa)
    _check_order(k, kappa.size, 0)
    return float(_kernels.esym(kappa[None, :], k)[0, k])


def sigma_all(kappa, kmax=None):
    """Vector (sigma_0, ..., sigma_kmax)."""
    kappa = _as_kappa(kappa)
    kmax = kappa.size if kmax is None else kmax
    _check_order(kmax, kappa.size, 0)
    return _kernels.esym(kappa[None, :], kmax)[0]


def sigma_grad(kappa, k):
    """Partial derivatives d sigma_k / d kappa_i = sigma_{k-1}(kappa | i)."""
    kappa = _as_kappa(kappa)
    _check_order(k, kappa.size, 1)
    return _kernels.esym_grad(kappa[None, :], k)[0]


def sigma_hess(kappa, k):
    """Second partials of sigma_k; (p, q) entry is sigma_{k-2}(kappa | p, q), zero diagonal."""
    kappa = _as_kappa(kappa)
    _check_order(k, kappa.size, 1)
    return _kernels.esym_hess(kappa[None, :], k)[0]


def in_gamma_k(kappa, k, strict=True, margin=0.0):
    """Membership in the Garding cone: sigma_m > margin for m = 1..k.

    ``strict=False`` tests the closed cone (``>= -margin``).
    """
    kappa = _as_kappa(kappa)
    _check_order(k, kappa.size, 1)
    s = sigma_all(kappa, k)[1:]
    if strict:
        return bool(np.all(s > margin))
    return bool(np.all(s >= -margin))


def gamma_k_mask(kappa, k, margin=0.0):
    """Row-wise strict cone membership for a (N, n) array."""
    s = _kernels.esym(np.atleast_2d(kappa), k)[:, 1:]
    return np.all(s > margin, axis=1)


def normalized_f(kappa, k):
    """(sigma_k / C(n, k))^(1/k); degree-one homogeneous, equals c at (c, ..., c)."""
    kappa = _as_kappa(kappa)
    n = kappa.size
    _check_order(k, n, 1)
    if not in_gamma_k(kappa, k):
        raise AdmissibilityError(f"kappa={kappa.tolist()} is not in Gamma_{k}")
    return float((sigma(kappa, k) / comb(n, k)) ** (1.0 / k))


def default_gap(kappa):
    return 1e-8 * (1.0 + float(np.max(np.abs(kappa))))


def quad_form_second_derivative(kappa, B, k, gap=None):
    """Second derivative of sigma_k along a symmetric direction B at diag(kappa).

    Sum over i, j of f_ij b_ii b_jj plus the off-diagonal divided-difference
    term; when two eigenvalues are closer than ``gap`` the divided
    difference is replaced by its limit f_ii - f_ij.
    """
    kappa = _as_kappa(kappa)
    n = kappa.size
    _check_order(k, n, 1)
    B = np.asarray(B, dtype=float)
    if B.shape != (n, n):
        raise DomainError(f"B must be {n}x{n}")
    B = 0.5 * (B + B.T)
    gap = default_gap(kappa) if gap is None else gap
    f1 = sigma_grad(kappa, k)
    f2 = sigma_hess(kappa, k)
    d = np.diag(B)
    total = float(d @ f2 @ d)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            diff = kappa[i] - kappa[j]
            if abs(diff) < gap:
                dd = f2[i, i] - f2[i, j]
            else:
                dd = (f1[i] - f1[j]) / diff
            total += dd * B[i, j] ** 2
    return total


@dataclass
class InequalityReport:
    lhs: float
    rhs: float
    holds: bool

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds}


def _holds(lhs, rhs, rtol):
    return lhs >= rhs - rtol * (1.0 + abs(lhs) + abs(rhs))


def check_concavity_inequality(W_diag, w_h, k, l, delta=None, rtol=1e-10):
    """Evaluate the concavity-type inequality for sigma_k / sigma_l at a diagonal W.

    ``w_h`` holds the third-derivative components (w_11h, ..., w_nnh). With
    ``delta`` given, the weighted companion inequality is evaluated instead.
    Returns an :class:`InequalityReport`.
    """
    W = _as_kappa(W_diag)
    n = W.size
    w = np.asarray(w_h, dtype=float)
    if w.shape != (n,):
        raise DomainError("w_h must have one entry per diagonal element")
    _check_order(k, n, 1)
    if not 0 <= l < k:
        raise DomainError(f"need 0 <= l < k, got l={l}, k={k}")
    if not in_gamma_k(W, k):
        raise AdmissibilityError(f"W={W.tolist()} is not in Gamma_{k}")
    sk = sigma(W, k)
    sl = sigma(W, l)
    if sl == 0.0:
        raise ZeroDivisionError("sigma_l(W) = 0")
    alpha = 1.0 / (k - l)
    dk = float(sigma_grad(W, k) @ w)
    qk = float(w @ sigma_hess(W, k) @ w)
    if l >= 1:
        dl = float(sigma_grad(W, l) @ w)
        ql = float(w @ sigma_hess(W, l) @ w)
    else:
        dl = ql = 0.0
    if delta is None:
        lhs = -qk / sk + ql / sl
        rhs = (dk / sk - dl / sl) * ((alpha - 1.0) * dk / sk - (alpha + 1.0) * dl / sl)
    else:
        if delta <= 0:
            raise DomainError("delta must be positive")
        lhs = -qk + (1.0 - alpha + alpha / delta) * dk * dk / sk
        rhs = sk * (alpha + 1.0 - delta * alpha) * (dl / sl) ** 2 - (sk / sl) * ql
    return InequalityReport(lhs, rhs, bool(_holds(lhs, rhs, rtol)))


@dataclass
class NewtonMaclaurinReport:
    product: float
    square: float
    product_holds: bool
    root_k: float | None
    root_km1: float | None
    monotone_holds: bool

    @property
    def holds(self):
        return self.product_holds and self.monotone_holds

    def to_dict(self):
        return dict(self.__dict__, holds=self.holds)


def check_newton_maclaurin(kappa, k, rtol=1e-12):
    """Newton and Maclaurin inequalities at order k for kappa in Gamma_k.

    Checks E_{k-1} E_{k+1} <= E_k^2 and, for k >= 2,
    E_k^(1/k) <= E_{k-1}^(1/(k-1)) with E_m = sigma_m / C(n, m).
    """
    kappa = _as_kappa(kappa)
    n = kappa.size
    if not 1 <= k <= n - 1:
        raise DomainError(f"need 1 <= k <= n-1, got k={k}, n={n}")
    if not in_gamma_k(kappa, k):
        raise AdmissibilityError(f"kappa={kappa.tolist()} is not in Gamma_{k}")
    s = sigma_all(kappa, k + 1)
    E = [s[m] / comb(n, m) for m in range(k + 2)]
    product = float(E[k - 1] * E[k + 1])
    square = float(E[k] ** 2)
    product_holds = _holds(square, product, rtol)
    if k >= 2:
        root_k = float(E[k] ** (1.0 / k))
        root_km1 = float(E[k - 1] ** (1.0 / (k - 1)))
        monotone = _holds(root_km1, root_k, rtol)
    else:
        root_k = root_km1 = None
        monotone = True
    return NewtonMaclaurinReport(product, square, bool(product_holds), root_k, root_km1, bool(monotone))
