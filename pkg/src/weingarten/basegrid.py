"""Structured discretizations of the compact base (M, g').

Supported bases: flat tori T^1 and T^2 (period 2 pi), the round 2-sphere in
latitude-longitude coordinates on a pole-staggered grid, and its
axisymmetric (longitude independent) reduction. Derivatives are second
order centred differences, returned in the orthonormal frame
e_theta, e_phi / sin(theta) on the sphere.

On the sphere the stencil row next to a pole reaches across it: the ghost
value at theta = -dtheta/2 is the node at theta = dtheta/2 on the opposite
meridian (phi + pi). ``pole_rows`` flags these rows; for fields with
longitude dependence their Hessian error is first order.
"""

from dataclasses import dataclass, field

import numpy as np

from weingarten.errors import ConfigError

MIN_SIZE = 8


@dataclass(frozen=True, eq=False)
class BaseManifold:
    kind: str
    shape: tuple
    spacing: tuple
    coords: tuple = field(repr=False)
    dim: int = 1

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def mesh(self):
        """Coordinate arrays broadcast to the grid shape (x1, x2, ...)."""
        if self.kind == "axisym":
            return (self.coords[0], np.zeros(self.shape))
        return tuple(np.meshgrid(*self.coords, indexing="ij"))

    @property
    def pole_rows(self):
        """Boolean mask of nodes whose stencil crosses a pole."""
        mask = np.zeros(self.shape, dtype=bool)
        if self.kind in ("sphere2", "axisym"):
            mask[0] = True
            mask[-1] = True
        return mask

    @property
    def weights(self):
        """Quadrature weights of the Riemannian volume (sum = vol(M))."""
        if self.kind == "torus1":
            return np.full(self.shape, self.spacing[0])
        if self.kind == "torus2":
            return np.full(self.shape, self.spacing[0] * self.spacing[1])
        sin_t = np.sin(self.coords[0])
        if self.kind == "axisym":
            return 2.0 * np.pi * sin_t * self.spacing[0]
        return np.outer(sin_t, np.full(self.shape[1], self.spacing[0] * self.spacing[1]))

    def neighbors(self):
        """(N, s) array of flat node indices read by each node's stencil."""
        idx = np.arange(self.size).reshape(self.shape)
        if self.kind in ("torus1",):
            cols = [np.roll(idx, s) for s in (-1, 0, 1)]
        elif self.kind == "axisym":
            ext = np.concatenate([idx[:1], idx, idx[-1:]])
            cols = [ext[:-2], ext[1:-1], ext[2:]]
        elif self.kind == "torus2":
            cols = [np.roll(idx, (a, b), axis=(0, 1)) for a in (-1, 0, 1) for b in (-1, 0, 1)]
        else:
            ext = _extend_theta(idx, self.shape[1])
            cols = [np.roll(ext, b, axis=1)[1 + a:1 + a + self.shape[0]]
                    for a in (-1, 0, 1) for b in (-1, 0, 1)]
        return np.stack([c.ravel() for c in cols], axis=1)

    def to_dict(self):
        return {"kind": self.kind, "shape": list(self.shape)}


def _extend_theta(z, m_phi):
    # ghost rows across the poles: the reflected node on the meridian phi + pi
    half = m_phi // 2
    top = np.roll(z[:1], -half, axis=1)
    bottom = np.roll(z[-1:], -half, axis=1)
    return np.concatenate([top, z, bottom], axis=0)


def build_grid(kind, *sizes):
    """Build a base manifold, e.g. ``build_grid("sphere2", 16, 32)``."""
    sizes = tuple(int(s) for s in sizes)
    expected = {"torus1": 1, "torus2": 2, "sphere2": 2, "axisym": 1}
    if kind not in expected:
        raise ConfigError(f"unknown base kind {kind!r}")
    if len(sizes) != expected[kind]:
        raise ConfigError(f"base {kind} needs {expected[kind]} size(s), got {len(sizes)}")
    if min(sizes) < MIN_SIZE:
        raise ConfigError(f"grid sizes must be >= {MIN_SIZE}, got {sizes}")
    if kind == "torus1":
        (m,) = sizes
        d = 2.0 * np.pi / m
        return BaseManifold(kind, (m,), (d,), (np.arange(m) * d,), dim=1)
    if kind == "torus2":
        m1, m2 = sizes
        d1, d2 = 2.0 * np.pi / m1, 2.0 * np.pi / m2
        return BaseManifold(kind, (m1, m2), (d1, d2), (np.arange(m1) * d1, np.arange(m2) * d2), dim=2)
    if kind == "sphere2":
        mt, mp = sizes
        if mp % 2:
            raise ConfigError("sphere2 needs an even longitude count")
        dt, dp = np.pi / mt, 2.0 * np.pi / mp
        return BaseManifold(kind, (mt, mp), (dt, dp),
                            ((np.arange(mt) + 0.5) * dt, np.arange(mp) * dp), dim=2)
    (mt,) = sizes
    dt = np.pi / mt
    return BaseManifold(kind, (mt,), (dt,), ((np.arange(mt) + 0.5) * dt,), dim=2)


def build_grid_from_spec(spec):
    """Build from a mapping ``{"kind": ..., "size": m}`` or ``{"kind": ..., "sizes": [..]}``."""
    kind = spec.get("kind")
    sizes = spec.get("sizes", spec.get("size"))
    if sizes is None:
        raise ConfigError("base.size(s) is required")
    if np.ndim(sizes) == 0:
        sizes = [sizes]
    return build_grid(kind, *sizes)


def derivatives(mfld, z):
    """Gradient (..., n) and covariant Hessian (..., n, n) of a grid field.

    Components are in the orthonormal frame of (M, g'); the Hessian is
    symmetric by construction.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != mfld.shape:
        raise ConfigError(f"field shape {z.shape} does not match grid {mfld.shape}")
    kind = mfld.kind
    if kind == "torus1":
        (d,) = mfld.spacing
        zp, zm = np.roll(z, -1), np.roll(z, 1)
        grad = ((zp - zm) / (2 * d))[..., None]
        hess = ((zp - 2 * z + zm) / (d * d))[..., None, None]
        return grad, hess
    if kind == "torus2":
        d1, d2 = mfld.spacing
        zp1, zm1 = np.roll(z, -1, 0), np.roll(z, 1, 0)
        zp2, zm2 = np.roll(z, -1, 1), np.roll(z, 1, 1)
        z1 = (zp1 - zm1) / (2 * d1)
        z2 = (zp2 - zm2) / (2 * d2)
        z11 = (zp1 - 2 * z + zm1) / (d1 * d1)
        z22 = (zp2 - 2 * z + zm2) / (d2 * d2)
        z12 = (np.roll(zp1, -1, 1) - np.roll(zp1, 1, 1)
               - np.roll(zm1, -1, 1) + np.roll(zm1, 1, 1)) / (4 * d1 * d2)
        return _pack(z1, z2, z11, z12, z22)
    if kind == "axisym":
        (dt,) = mfld.spacing
        th = mfld.coords[0]
        ext = np.concatenate([z[:1], z, z[-1:]])
        zt = (ext[2:] - ext[:-2]) / (2 * dt)
        ztt = (ext[2:] - 2 * z + ext[:-2]) / (dt * dt)
        zero = np.zeros_like(z)
        return _pack(zt, zero, ztt, zero, zt * np.cos(th) / np.sin(th))
    dt, dp = mfld.spacing
    th = mfld.coords[0][:, None]
    ext = _extend_theta(z, mfld.shape[1])
    up, dn = ext[2:], ext[:-2]
    zt = (up - dn) / (2 * dt)
    ztt = (up - 2 * z + dn) / (dt * dt)
    zpp_, zmp_ = np.roll(z, -1, 1), np.roll(z, 1, 1)
    zp = (zpp_ - zmp_) / (2 * dp)
    zpp = (zpp_ - 2 * z + zmp_) / (dp * dp)
    ztp = (np.roll(up, -1, 1) - np.roll(up, 1, 1) - np.roll(dn, -1, 1) + np.roll(dn, 1, 1)) / (4 * dt * dp)
    s, c = np.sin(th), np.cos(th)
    # covariant: z;tp = z_tp - cot z_p, z;pp = z_pp + sin cos z_t; then scale by 1/sin per phi index
    return _pack(zt, zp / s, ztt, (ztp - c / s * zp) / s, zpp / (s * s) + c / s * zt)


def _pack(g1, g2, h11, h12, h22):
    grad = np.stack([g1, g2], axis=-1)
    hess = np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)
    return grad, hess


def covariant_data(mfld, z, point):
    """Orthonormal-frame gradient and Hessian of ``z`` at grid node ``point``."""
    grad, hess = derivatives(mfld, z)
    point = tuple(np.atleast_1d(point))
    return grad[point].copy(), hess[point].copy()


def save_field(path, z):
    """Write a grid field as CSV: header ``# shape: m1 [m2]`` then row-major rows."""
    z = np.asarray(z, dtype=float)
    with open(path, "w") as fh:
        fh.write("# shape: " + " ".join(str(s) for s in z.shape) + "\n")
        rows = z.reshape(z.shape[0], -1) if z.ndim > 1 else z.reshape(-1, 1)
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_field(path):
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# shape:"):
            raise ConfigError(f"{path}: missing '# shape:' header")
        shape = tuple(int(s) for s in header.split(":", 1)[1].split())
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return data.reshape(shape)
