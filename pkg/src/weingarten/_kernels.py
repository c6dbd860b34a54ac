"""Kernel selection: compiled core when importable, numpy fallback otherwise.

Set ``WEINGARTEN_PURE=1`` to force the fallback.
"""

import os

import numpy as np

from weingarten import _pykernels

BACKEND = "python"
if os.environ.get("WEINGARTEN_PURE") != "1":
    try:
        from weingarten import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def esym(kappa, kmax):
    return _impl.esym(_f64(kappa), kmax)


def esym_grad(kappa, k):
    return _impl.esym_grad(_f64(kappa), k)


def esym_hess(kappa, k):
    return _impl.esym_hess(_f64(kappa), k)


def shape_eigs(h, hp, grad, hess):
    return _impl.shape_eigs(_f64(h), _f64(hp), _f64(grad), _f64(hess))
