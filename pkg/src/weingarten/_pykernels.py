"""Vectorized numpy kernels. Reference implementation and import-time fallback
for :mod:`weingarten._ckernels`; both expose the same four functions."""

import numpy as np


def esym(kappa, kmax):
    """Elementary symmetric polynomials e_0..e_kmax of each row of ``kappa``."""
    kappa = np.ascontiguousarray(kappa, dtype=float)
    N, n = kappa.shape
    E = np.zeros((N, kmax + 1))
    E[:, 0] = 1.0
    for i in range(n):
        x = kappa[:, i]
        for j in range(min(i + 1, kmax), 0, -1):
            E[:, j] += x * E[:, j - 1]
    return E


def esym_grad(kappa, k):
    """Row-wise gradient of sigma_k: entry i is sigma_{k-1} with entry i removed."""
    kappa = np.ascontiguousarray(kappa, dtype=float)
    N, n = kappa.shape
    out = np.zeros((N, n))
    if k < 1:
        return out
    idx = np.arange(n)
    for i in range(n):
        out[:, i] = esym(kappa[:, idx != i], k - 1)[:, k - 1]
    return out


def esym_hess(kappa, k):
    """Row-wise Hessian of sigma_k: off-diagonal (p, q) is sigma_{k-2} without p, q."""
    kappa = np.ascontiguousarray(kappa, dtype=float)
    N, n = kappa.shape
    out = np.zeros((N, n, n))
    if k < 2:
        return out
    idx = np.arange(n)
    for p in range(n):
        for q in range(p + 1, n):
            v = esym(kappa[:, (idx != p) & (idx != q)], k - 2)[:, k - 2]
            out[:, p, q] = v
            out[:, q, p] = v
    return out


def shape_eigs(h, hp, grad, hess):
    """Principal curvatures (descending) and W for graph points.

    ``grad`` is (N, n) and ``hess`` is (N, n, n), both in an orthonormal frame
    of the base. Uses g^{-1/2} = I/h - grad grad^T / (h W (h + W)).
    """
    h = np.asarray(h, dtype=float)
    hp = np.asarray(hp, dtype=float)
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    N, n = grad.shape
    g2 = np.einsum("ni,ni->n", grad, grad)
    W = np.sqrt(h * h + g2)
    outer = grad[:, :, None] * grad[:, None, :]
    eye = np.eye(n)[None]
    a = (-h[:, None, None] * hess + 2.0 * hp[:, None, None] * outer
         + (h * h * hp)[:, None, None] * eye) / W[:, None, None]
    P = eye / h[:, None, None] - outer / (h * W * (h + W))[:, None, None]
    S = P @ a @ P
    S = 0.5 * (S + np.swapaxes(S, 1, 2))
    if n == 1:
        kappa = S[:, :, 0]
    elif n == 2:
        m = 0.5 * (S[:, 0, 0] + S[:, 1, 1])
        d = np.hypot(0.5 * (S[:, 0, 0] - S[:, 1, 1]), S[:, 0, 1])
        kappa = np.stack([m + d, m - d], axis=1)
    else:
        kappa = np.linalg.eigvalsh(S)[:, ::-1]
    return np.ascontiguousarray(kappa), W
