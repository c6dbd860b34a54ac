"""Seeded property and oracle suites behind ``weingarten verify``.

Each suite returns a dict ``{"name", "passed", "metrics", "seconds"}``;
``metrics`` holds the worst observed errors and violation counts.
"""

import time
from itertools import combinations
from math import comb

import numpy as np

from weingarten import _kernels
from weingarten.basegrid import build_grid, derivatives
from weingarten.graphgeom import frame_from_derivatives, grid_geometry
from weingarten.warp import WarpProfile

TOL = {
    "grad_fd": 1e-6,
    "hess_fd": 1e-5,
    "euler": 1e-13,
    "lemma_ag": 1e-4,
    "tau_w": 1e-13,
    "slice": 1e-13,
    "order": 1.9,
}


def sample_gamma_k(rng, n, k, size, margin=1e-6):
    """``size`` points of Gamma_k in R^n (rejection sampling from a shifted box)."""
    out = np.empty((0, n))
    while out.shape[0] < size:
        cand = rng.uniform(-1.0, 3.0, size=(4 * size, n))
        s = _kernels.esym(cand, k)[:, 1:]
        # sigma_m bounded away from zero keeps the ratios in the inequalities well scaled
        out = np.vstack([out, cand[np.all(s > margin, axis=1)]])
    return out[:size]


# batched symmetric-function checks ------------------------------------------

def sigma_batch(kappa, k):
    return _kernels.esym(kappa, k)[:, k]


def concavity_batch(W, w, k, l, delta=None):
    """Vectorized concavity inequality for sigma_k / sigma_l; returns (lhs, rhs, scale)."""
    sk = sigma_batch(W, k)
    alpha = 1.0 / (k - l)
    gk = _kernels.esym_grad(W, k)
    Hk = _kernels.esym_hess(W, k)
    dk = np.einsum("ni,ni->n", gk, w)
    qk = np.einsum("ni,nij,nj->n", w, Hk, w)
    if l >= 1:
        sl = sigma_batch(W, l)
        dl = np.einsum("ni,ni->n", _kernels.esym_grad(W, l), w)
        ql = np.einsum("ni,nij,nj->n", w, _kernels.esym_hess(W, l), w)
    else:
        sl, dl, ql = np.ones_like(sk), np.zeros_like(sk), np.zeros_like(sk)
    if delta is None:
        terms = [qk / sk, ql / sl, (dk / sk) ** 2, (dl / sl) ** 2, dk * dl / (sk * sl)]
        lhs = -qk / sk + ql / sl
        rhs = (dk / sk - dl / sl) * ((alpha - 1.0) * dk / sk - (alpha + 1.0) * dl / sl)
    else:
        c = 1.0 - alpha + alpha / delta
        terms = [qk, c * dk * dk / sk, sk * (dl / sl) ** 2 * (alpha + 1 + delta * alpha), sk / sl * ql]
        lhs = -qk + c * dk * dk / sk
        rhs = sk * (alpha + 1.0 - delta * alpha) * (dl / sl) ** 2 - (sk / sl) * ql
    scale = sum(np.abs(t) for t in terms)
    return lhs, rhs, scale


def newton_maclaurin_batch(kappa, k):
    """(E_k^2 - E_{k-1}E_{k+1}, E_{k-1}^{1/(k-1)} - E_k^{1/k}) with their scales."""
    n = kappa.shape[1]
    s = _kernels.esym(kappa, min(k + 1, n))
    E = [s[:, m] / comb(n, m) for m in range(min(k + 1, n) + 1)]
    Ek1 = E[k + 1] if k + 1 <= n else np.zeros(kappa.shape[0])
    d1 = E[k] ** 2 - E[k - 1] * Ek1
    sc1 = E[k] ** 2 + np.abs(E[k - 1] * Ek1)
    if k >= 2:
        a, b = E[k - 1] ** (1.0 / (k - 1)), E[k] ** (1.0 / k)
        return d1, sc1, a - b, a + b
    return d1, sc1, np.zeros_like(d1), np.ones_like(d1)


def quad_form_batch(kappa, B, k):
    """Second derivative of sigma_k along symmetric B at diag(kappa), batched (distinct kappa)."""
    g = _kernels.esym_grad(kappa, k)
    H = _kernels.esym_hess(kappa, k)
    d = np.einsum("nii->ni", B)
    total = np.einsum("ni,nij,nj->n", d, H, d)
    n = kappa.shape[1]
    for i in range(n):
        for j in range(n):
            if i != j:
                total += (g[:, i] - g[:, j]) / (kappa[:, i] - kappa[:, j]) * B[:, i, j] ** 2
    return total


def _sigma_of_matrix(A, k):
    # sigma_k of the eigenvalues = sum of principal k-minors
    n = A.shape[-1]
    return sum(np.linalg.det(A[:, idx][:, :, idx]) for idx in map(list, combinations(range(n), k)))


def _suite(name, fn):
    t0 = time.perf_counter()
    metrics = fn()
    passed = bool(metrics.pop("_passed"))
    return {"name": name, "passed": passed, "metrics": metrics, "seconds": time.perf_counter() - t0}


def symfunc_suite(seed=0, samples=10_000, dims=(2, 3, 4)):
    """FD consistency, Euler identity, the eigenvalue-path lemma, concavity and Newton-Maclaurin sweeps."""
    def run():
        rng = np.random.default_rng(seed)
        m = {"samples_per_case": samples, "grad_fd_max": 0.0, "hess_fd_max": 0.0, "euler_max": 0.0,
             "lemma_max": 0.0, "concavity_violations": 0, "concavity_delta_violations": 0, "nm_violations": 0,
             "cases": 0}
        for n in dims:
            for k in range(1, n + 1):
                kap = sample_gamma_k(rng, n, k, samples)
                m["cases"] += 1
                g = _kernels.esym_grad(kap, k)
                H = _kernels.esym_hess(kap, k)
                # FD consistency on a subsample (central differences, h = 1e-5)
                sub = kap[:500]
                eps = 1e-5
                for i in range(n):
                    e = np.zeros(n)
                    e[i] = eps
                    fd = (sigma_batch(sub + e, k) - sigma_batch(sub - e, k)) / (2 * eps)
                    den = np.maximum(np.abs(g[:500, i]), 1.0)
                    m["grad_fd_max"] = max(m["grad_fd_max"], float(np.max(np.abs(fd - g[:500, i]) / den)))
                    if k >= 2:
                        fdh = (_kernels.esym_grad(sub + e, k) - _kernels.esym_grad(sub - e, k)) / (2 * eps)
                        den = np.maximum(np.abs(H[:500, i]), 1.0)
                        m["hess_fd_max"] = max(m["hess_fd_max"], float(np.max(np.abs(fdh - H[:500, i]) / den)))
                # Euler: sum kappa_i sigma_k^i = k sigma_k
                terms = kap * g
                err = np.abs(terms.sum(1) - k * sigma_batch(kap, k)) / np.abs(terms).sum(1)
                m["euler_max"] = max(m["euler_max"], float(np.max(err)))
                # eigenvalue path lemma: gaps >= 0.1
                kk = np.sort(kap[:1000], axis=1)
                ok = np.all(np.diff(kk, axis=1) >= 0.1, axis=1)
                kk = kk[ok]
                if kk.shape[0] and n >= 2:
                    B = rng.normal(size=(kk.shape[0], n, n))
                    B = 0.5 * (B + np.transpose(B, (0, 2, 1)))
                    D = np.einsum("ni,ij->nij", kk, np.eye(n))
                    hstep = 1e-3
                    f = {s: _sigma_of_matrix(D + s * hstep * B, k) for s in (-2, -1, 0, 1, 2)}
                    fd2 = (-f[2] + 16 * f[1] - 30 * f[0] + 16 * f[-1] - f[-2]) / (12 * hstep ** 2)
                    q = quad_form_batch(kk, B, k)
                    rel = np.abs(q - fd2) / np.maximum(np.abs(fd2), 1.0)
                    m["lemma_max"] = max(m["lemma_max"], float(np.max(rel)))
                # concavity inequalities
                w = rng.normal(size=(samples, n))
                delta = np.exp(rng.uniform(np.log(0.1), np.log(10.0), samples))
                for l in range(k):
                    lhs, rhs, sc = concavity_batch(kap, w, k, l)
                    m["concavity_violations"] += int(np.sum(lhs < rhs - 1e-10 * sc))
                    lhs, rhs, sc = concavity_batch(kap, w, k, l, delta)
                    m["concavity_delta_violations"] += int(np.sum(lhs < rhs - 1e-10 * sc))
                d1, s1, d2, s2 = newton_maclaurin_batch(kap, k)
                m["nm_violations"] += int(np.sum((d1 < -1e-12 * s1) | (d2 < -1e-12 * s2)))
        m["_passed"] = (m["grad_fd_max"] <= TOL["grad_fd"] and m["hess_fd_max"] <= TOL["hess_fd"]
                        and m["euler_max"] <= TOL["euler"] and m["lemma_max"] <= TOL["lemma_ag"]
                        and m["concavity_violations"] == 0 and m["concavity_delta_violations"] == 0
                        and m["nm_violations"] == 0)
        return m
    return _suite("symfunc", run)


def geometry_suite(seed=0):
    """tau W = h^2 on random fields and exact slice geometry for three ambients."""
    def run():
        rng = np.random.default_rng(seed)
        m = {"tau_w_max": 0.0, "slice_kappa_max": 0.0, "slice_a_max": 0.0, "slice_tau_max": 0.0}
        prof = WarpProfile("sphere", 1.0)
        mfld = build_grid("sphere2", 16, 32)
        th, ph = mfld.mesh
        for _ in range(5):
            c = rng.normal(size=3) * 0.05
            z = 0.75 + c[0] * np.cos(th) + c[1] * np.sin(th) * np.cos(ph) + c[2] * np.sin(th) * np.sin(ph)
            geo = grid_geometry(prof, mfld, z)
            m["tau_w_max"] = max(m["tau_w_max"], float(np.max(np.abs(geo.tau * geo.W - geo.h ** 2) / geo.h ** 2)))
        cases = [(WarpProfile("sphere", 1.0), np.pi / 4), (WarpProfile("euclidean"), 2.0),
                 (WarpProfile("hyperbolic", 1.0), 1.0)]
        for p, t0 in cases:
            h, hp, _ = p(t0)
            for n in (1, 2, 3):
                fr = frame_from_derivatives(p, t0, np.zeros(n), np.zeros((n, n)))
                m["slice_kappa_max"] = max(m["slice_kappa_max"], float(np.max(np.abs(fr.kappa - hp / h))) / abs(hp / h))
                m["slice_a_max"] = max(m["slice_a_max"], float(np.max(np.abs(fr.a - h * hp * np.eye(n)))) / abs(h * hp))
                m["slice_tau_max"] = max(m["slice_tau_max"], abs(fr.tau - h) / h)
            geo = grid_geometry(p, mfld, np.full(mfld.shape, t0))
            m["slice_kappa_max"] = max(m["slice_kappa_max"], float(np.max(np.abs(geo.kappa - hp / h))) / abs(hp / h))
        m["_passed"] = (m["tau_w_max"] <= TOL["tau_w"] and max(m["slice_kappa_max"], m["slice_a_max"],
                                                              m["slice_tau_max"]) <= TOL["slice"])
        return m
    return _suite("geometry", run)


def polar_curvature(z, zp, zpp):
    """Curvature of the polar curve r = z(u)."""
    return (z * z + 2 * zp * zp - z * zpp) / (z * z + zp * zp) ** 1.5


def _orders(errs):
    return [float(np.log2(errs[i] / errs[i + 1])) for i in range(len(errs) - 1)]


def convergence_suite(sizes=(64, 128, 256)):
    """Observed grid-convergence orders: the polar-curve oracle and Hessians on torus2 and sphere2."""
    def run():
        m = {}
        prof = WarpProfile("euclidean")
        errs, at0 = [], []
        for s in sizes:
            mf = build_grid("torus1", s)
            (u,) = mf.mesh
            z = 2.0 + np.cos(u)
            geo = grid_geometry(prof, mf, z)
            exact = polar_curvature(z, -np.sin(u), -np.cos(u))
            errs.append(float(np.max(np.abs(geo.kappa[:, 0] - exact))))
            at0.append(float(geo.kappa[0, 0]))
        fr = frame_from_derivatives(prof, 3.0, [0.0], [[-1.0]])
        m["polar_errors"] = errs
        m["polar_orders"] = _orders(errs)
        m["kappa0_exact_derivs"] = float(fr.kappa[0])
        m["kappa0_grid"] = at0
        m["kappa0_err"] = abs(float(fr.kappa[0]) - 4.0 / 9.0)

        def hess_err(kind, z_fn, exact_fn, band=None):
            out = []
            for s in sizes[:3]:
                shape = (s, s) if kind == "torus2" else (s // 2, s)
                mf = build_grid(kind, *shape)
                U = mf.mesh
                _, H = derivatives(mf, z_fn(*U))
                E = exact_fn(*U)
                err = np.abs(H - E)
                if band is not None:
                    th = U[0]
                    err = err[(th[:, 0] > band[0]) & (th[:, 0] < band[1])]
                out.append(float(np.max(err)))
            return out

        def torus_exact(u1, u2):
            c = np.cos(u1) * np.cos(u2)
            s = np.sin(u1) * np.sin(u2)
            return np.stack([np.stack([-c, s], -1), np.stack([s, -c], -1)], -2)
        e = hess_err("torus2", lambda a, b: np.cos(a) * np.cos(b), torus_exact)
        m["torus2_hessian_orders"] = _orders(e)

        # zonal field cos(theta): Hessian on the unit sphere is -cos(theta) I
        def zonal_exact(th, ph):
            return -np.cos(th)[..., None, None] * np.eye(2)
        e = hess_err("sphere2", lambda th, ph: np.cos(th), zonal_exact)
        m["sphere2_zonal_orders"] = _orders(e)

        # first spherical harmonic sin(theta) cos(phi): Hessian = -f I; interior band
        def nz_exact(th, ph):
            return -(np.sin(th) * np.cos(ph))[..., None, None] * np.eye(2)
        e = hess_err("sphere2", lambda th, ph: np.sin(th) * np.cos(ph), nz_exact, band=(0.5, np.pi - 0.5))
        m["sphere2_band_orders"] = _orders(e)
        orders = (m["polar_orders"] + m["torus2_hessian_orders"] + m["sphere2_zonal_orders"]
                  + m["sphere2_band_orders"])
        m["_passed"] = min(orders) >= TOL["order"] and m["kappa0_err"] <= 1e-15
        return m
    return _suite("convergence", run)


SUITES = {"symfunc": symfunc_suite, "geometry": geometry_suite, "convergence": convergence_suite}


def run_all(seed=0, samples=10_000, which=None):
    out = []
    for name in which or SUITES:
        fn = SUITES[name]
        out.append(fn(seed=seed, samples=samples) if name == "symfunc" else
                   fn(seed=seed) if name == "geometry" else fn())
    return out
