"""Pointwise geometry of the graph {(z(u), u)} in I x_h M.

All tensors are written in an orthonormal frame of the base, so the
formulas below apply with delta_ij for g'.
"""

from dataclasses import dataclass

import numpy as np

from weingarten import _kernels
from weingarten.basegrid import derivatives
from weingarten.errors import DomainError, GeometryError
from weingarten.warp import eta_of_t


@dataclass
class PointFrame:
    h: float
    hp: float
    grad: np.ndarray
    hess: np.ndarray
    W: float
    g: np.ndarray
    a: np.ndarray
    kappa: np.ndarray
    tau: float
    eta: float
    nu_t: float

    def to_dict(self):
        return {
            "h": self.h, "hp": self.hp, "W": self.W,
            "g": self.g.tolist(), "a": self.a.tolist(), "kappa": self.kappa.tolist(),
            "tau": self.tau, "eta": self.eta, "nu_t": self.nu_t,
        }


def frame_from_derivatives(profile, t, grad, hess):
    """PointFrame from the height ``t`` and orthonormal-frame derivatives at one point."""
    if not profile.contains(t):
        raise DomainError(f"height {t} outside the profile interval")
    h, hp, _ = (float(v) for v in profile(t))
    grad = np.asarray(grad, dtype=float)
    hess = 0.5 * (np.asarray(hess, dtype=float) + np.asarray(hess, dtype=float).T)
    n = grad.size
    W = float(np.sqrt(h * h + grad @ grad))
    g = h * h * np.eye(n) + np.outer(grad, grad)
    a = (-h * hess + 2.0 * hp * np.outer(grad, grad) + h * h * hp * np.eye(n)) / W
    frame = PointFrame(h=h, hp=hp, grad=grad, hess=hess, W=W, g=g, a=a,
                       kappa=np.empty(0), tau=h * h / W, eta=eta_of_t(profile, t), nu_t=-h / W)
    frame.kappa = principal_curvatures(frame)
    return frame


def point_geometry(profile, mfld, z, point):
    """PointFrame at grid node ``point`` of the height field ``z``."""
    z = np.asarray(z, dtype=float)
    grad, hess = derivatives(mfld, z)
    point = tuple(np.atleast_1d(point))
    return frame_from_derivatives(profile, float(z[point]), grad[point], hess[point])


def principal_curvatures(frame):
    """Eigenvalues of g^{-1/2} a g^{-1/2}, sorted descending."""
    w, V = np.linalg.eigh(frame.g)
    if not np.all(w > 0):
        raise GeometryError("induced metric is not positive definite")
    ginv_half = (V / np.sqrt(w)) @ V.T
    S = ginv_half @ frame.a @ ginv_half
    S = 0.5 * (S + S.T)
    return np.sort(np.linalg.eigvalsh(S))[::-1]


@dataclass
class GridGeometry:
    """Grid-wide geometry arrays (leading axes = grid shape)."""

    z: np.ndarray
    h: np.ndarray
    hp: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    W: np.ndarray
    kappa: np.ndarray

    @property
    def tau(self):
        return self.h ** 2 / self.W

    @property
    def nu_t(self):
        return -self.h / self.W

    @property
    def gradnorm(self):
        return np.sqrt(np.sum(self.grad ** 2, axis=-1))


def grid_geometry(profile, mfld, z):
    """Vectorized geometry of the whole graph; raises DomainError if z leaves the interval."""
    z = np.asarray(z, dtype=float)
    if not np.all(profile.contains(z)):
        bad = np.unravel_index(np.argmax(~profile.contains(z)), z.shape)
        raise DomainError(f"height {z[bad]:.6g} at node {bad} outside the profile interval")
    h, hp, _ = profile(z)
    grad, hess = derivatives(mfld, z)
    n = grad.shape[-1]
    kappa, W = _kernels.shape_eigs(h.ravel(), hp.ravel(), grad.reshape(-1, n), hess.reshape(-1, n, n))
    return GridGeometry(z=z, h=h, hp=hp, grad=grad, hess=hess,
                        W=W.reshape(z.shape), kappa=kappa.reshape(z.shape + (n,)))


def support_and_gradient_monitor(profile, mfld, z):
    geo = grid_geometry(profile, mfld, z)
    return {
        "tau_min": float(np.min(geo.tau)),
        "gradmax": float(np.max(geo.gradnorm)),
        "z_min": float(np.min(z)),
        "z_max": float(np.max(z)),
    }
