"""Warping profiles h(t) for I x_h M, slice curvature and the eta potential."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from weingarten.errors import ConfigError, DomainError

KINDS = ("sphere", "euclidean", "hyperbolic", "custom")

# finite stand-in for an unbounded right endpoint when sampling
_SAMPLE_SPAN = 50.0


@dataclass(frozen=True)
class WarpProfile:
    """Warping function with its first two derivatives on an open interval.

    Builtins: sphere ``sin(sqrt(lam) t)/sqrt(lam)``, euclidean ``t``,
    hyperbolic ``sinh(sqrt(lam) t)/sqrt(lam)``. Custom profiles pass
    vectorized callables ``h``, ``hp``, ``hpp``.
    """

    kind: str
    lam: float = 1.0
    t_min: float = 0.0
    t_max: Optional[float] = None
    h_fn: Optional[Callable] = field(default=None, repr=False, compare=False)
    hp_fn: Optional[Callable] = field(default=None, repr=False, compare=False)
    hpp_fn: Optional[Callable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown ambient kind {self.kind!r}")
        if self.kind in ("sphere", "hyperbolic") and not self.lam > 0:
            raise ConfigError("ambient.lambda must be positive")
        if self.kind == "custom" and None in (self.h_fn, self.hp_fn, self.hpp_fn):
            raise ConfigError("custom profiles need h, h' and h''")
        if self.t_max is None:
            tmax = np.pi / (2.0 * np.sqrt(self.lam)) if self.kind == "sphere" else np.inf
            object.__setattr__(self, "t_max", float(tmax))
        if not self.t_min < self.t_max:
            raise ConfigError("need t_min < t_max")
        if self.t_min < 0:
            raise ConfigError("t_min must be >= 0")
        ts = self.sample(2000)
        h, hp, _ = self._raw(ts)
        if not (np.all(h > 0) and np.all(hp > 0)):
            bad = ts[np.argmax(~((h > 0) & (hp > 0)))]
            raise ConfigError(f"profile needs h > 0 and h' > 0 on the interval; fails at t={bad:.6g}")

    @property
    def upper(self):
        """Finite right end used for sampling."""
        if np.isfinite(self.t_max):
            return self.t_max
        return self.t_min + _SAMPLE_SPAN

    def sample(self, num, lo=None, hi=None):
        """``num`` interior points of (lo, hi) (defaults: the interval), endpoints excluded."""
        lo = self.t_min if lo is None else lo
        hi = self.upper if hi is None else hi
        return np.linspace(lo, hi, num + 2)[1:-1]

    def contains(self, t):
        t = np.asarray(t, dtype=float)
        return (t > self.t_min) & (t < self.t_max)

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        if not np.all(self.contains(t)):
            raise DomainError(f"t outside the profile interval ({self.t_min}, {self.t_max})")
        return t

    def _raw(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "sphere":
            r = np.sqrt(self.lam)
            return np.sin(r * t) / r, np.cos(r * t), -r * np.sin(r * t)
        if self.kind == "euclidean":
            return t.copy(), np.ones_like(t), np.zeros_like(t)
        if self.kind == "hyperbolic":
            r = np.sqrt(self.lam)
            return np.sinh(r * t) / r, np.cosh(r * t), r * np.sinh(r * t)
        return (np.asarray(self.h_fn(t), dtype=float) * np.ones_like(t),
                np.asarray(self.hp_fn(t), dtype=float) * np.ones_like(t),
                np.asarray(self.hpp_fn(t), dtype=float) * np.ones_like(t))

    def __call__(self, t):
        """(h, h', h'') at ``t`` (scalar or array)."""
        return self._raw(self._check(t))


def eval_profile(p, t):
    h, hp, hpp = p(t)
    if np.ndim(h) == 0:
        return float(h), float(hp), float(hpp)
    return h, hp, hpp


def slice_curvature(p, t):
    """Principal curvature h'/h of the slice {t} with the inward normal -d/dt."""
    h, hp, _ = p(t)
    out = hp / h
    return float(out) if np.ndim(out) == 0 else out


def slice_curvature_derivative(p, t):
    """d/dt (h'/h) = h''/h - (h'/h)^2; equals -1/h^2 on space forms."""
    h, hp, hpp = p(t)
    if p.kind == "custom":
        out = hpp / h - (hp / h) ** 2
    else:
        # the generic form cancels badly for large t on hyperbolic ambients
        out = -1.0 / (h * h)
    return float(out) if np.ndim(out) == 0 else out


def _antiderivative(p, t):
    # closed form of -int h dt with zero integration constant
    r = np.sqrt(p.lam)
    if p.kind == "sphere":
        return np.cos(r * t) / p.lam
    if p.kind == "euclidean":
        return -0.5 * t * t
    if p.kind == "hyperbolic":
        return -np.cosh(r * t) / p.lam
    raise AssertionError


def eta_of_t(p, t, anchored=True):
    """eta(t) = -int h dt.

    With ``anchored`` the constant is fixed by eta(t_min) = 0; otherwise the
    closed-form antiderivative with zero constant is returned (builtins only;
    custom profiles are always integrated from t_min).
    """
    t_arr = p._check(t)
    scalar = np.ndim(t_arr) == 0
    t_arr = np.atleast_1d(t_arr)
    if p.kind != "custom":
        out = _antiderivative(p, t_arr)
        if anchored:
            out = out - _antiderivative(p, np.float64(p.t_min))
    else:
        out = np.empty_like(t_arr)
        for i, ti in enumerate(t_arr):
            val, err = integrate.quad(lambda s: float(p.h_fn(np.float64(s))), p.t_min, ti,
                                      epsabs=1e-13, epsrel=1e-12, limit=200)
            if not np.isfinite(val):
                raise ArithmeticError(f"quadrature failed at t={ti}")
            out[i] = -val
    return float(out[0]) if scalar else out


def custom_profile(h, hp, hpp, t_min=0.0, t_max=None):
    """Profile from callables or expression strings in ``t``."""
    from weingarten.psiexpr import parse

    fns = []
    for f in (h, hp, hpp):
        if isinstance(f, str):
            spec = parse(f)
            fns.append(lambda t, spec=spec: spec.evaluate(t=t))
        else:
            fns.append(f)
    return WarpProfile("custom", t_min=t_min, t_max=np.inf if t_max is None else t_max,
                       h_fn=fns[0], hp_fn=fns[1], hpp_fn=fns[2])
