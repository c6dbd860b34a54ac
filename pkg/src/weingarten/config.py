"""Run configuration: YAML file -> validated :class:`RunConfig`.

Schema (defaults in brackets)::

    ambient:  kind sphere|euclidean|hyperbolic|custom, lambda [1.0], t_min [0], t_max [auto],
              h / hp / hpp (expressions in t, custom only)
    base:     kind torus1|torus2|sphere2|axisym, size or sizes
    k:        curvature order, 1 <= k <= dim(base)
    psi:      expr "<expression>"
              | family phi_bar, scale [1.0], perturb ["<expression>"]
              | family manufactured, z_star "<expression in x1..>", power [0]
    phi:      t_minus, t_plus, expr [exp((t_minus+t_plus)/2 - t)]
    homotopy: mode [inverse_k_power on sphere ambients, else linear], step [0.1],
              min_step [1e-3], max_step [0.25]
    solver:   tol_residual [1e-10], max_newton [50], normalized [true], init [t0]
    check:    nu_samples [32], n_t [64]
    output:   [out]
    seed:     [0]
"""

import copy
from dataclasses import dataclass, field

import numpy as np
import yaml

from weingarten import psiexpr
from weingarten.basegrid import build_grid_from_spec
from weingarten.errors import ConfigError, WeingartenError
from weingarten.homotopy import HomotopyConfig, PhiBarPsi, build_phi
from weingarten.pde import ExprPsi, GridPsi, SolverOptions
from weingarten.warp import WarpProfile, custom_profile

DEFAULTS = {
    "ambient": {"kind": "sphere", "lambda": 1.0, "t_min": 0.0, "t_max": None},
    "base": {"kind": "sphere2", "sizes": [16, 32]},
    "k": 2,
    "psi": {"family": "phi_bar", "scale": 1.0},
    "phi": None,
    "homotopy": {"mode": None, "step": 0.1, "min_step": 1e-3, "max_step": 0.25},
    "solver": {"tol_residual": 1e-10, "max_newton": 50, "normalized": True, "init": None},
    "check": {"nu_samples": 32, "n_t": 64},
    "output": "out",
    "seed": 0,
}


def _merge_section(name, defaults, given):
    if given is None:
        return copy.deepcopy(defaults)
    if not isinstance(given, dict):
        raise ConfigError(f"{name} must be a mapping")
    out = copy.deepcopy(defaults) if defaults else {}
    out.update(given)
    return out


def _num(d, key, path, lo=None, hi=None, integer=False):
    try:
        v = int(d[key]) if integer else float(d[key])
    except (TypeError, ValueError, KeyError):
        raise ConfigError(f"{path}.{key}: expected a number, got {d.get(key)!r}") from None
    if lo is not None and v < lo or hi is not None and v > hi:
        raise ConfigError(f"{path}.{key}={v} outside [{lo}, {hi}]")
    return v


def _parse_expr(src, path):
    try:
        return psiexpr.parse(src)
    except psiexpr.PsiSyntaxError as exc:
        raise ConfigError(f"{path}: {exc}\n{exc.caret()}") from None
    except psiexpr.PsiNameError as exc:
        raise ConfigError(f"{path}: {exc}") from None


@dataclass
class RunConfig:
    raw: dict
    profile: WarpProfile
    mfld: object
    k: int
    psi: object
    phi: object
    homotopy: HomotopyConfig | None
    options: SolverOptions
    init: float | None
    seed: int
    output: str
    nu_samples: np.ndarray = field(repr=False, default=None)
    n_t: int = 64

    @property
    def n(self):
        return self.mfld.dim

    @property
    def t0(self):
        if self.init is not None:
            return self.init
        if self.phi is not None:
            return self.phi.t0
        raise ConfigError("solver.init or a phi section is needed for the initial slice")

    def echo(self):
        """Validated settings with defaults filled in (output location left out so reruns elsewhere compare equal)."""
        out = copy.deepcopy(self.raw)
        out.pop("output", None)
        return out


def build_config(data, overrides=None):
    """Validate a config mapping (already parsed) and build all runtime objects."""
    data = dict(data or {})
    for key in data:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown key {key!r}")
    raw = {}
    for key, default in DEFAULTS.items():
        if key in ("base", "psi") and data.get(key) is not None:
            # kind-dependent sections replace the default wholesale
            raw[key] = _merge_section(key, {}, data[key])
        elif isinstance(default, dict) or key == "phi":
            raw[key] = _merge_section(key, default, data.get(key))
        else:
            raw[key] = data.get(key, default)
    for key, val in (overrides or {}).items():
        if val is not None:
            raw[key] = val

    amb = raw["ambient"]
    kind = amb.get("kind")
    try:
        if kind == "custom":
            for key in ("h", "hp", "hpp"):
                if key not in amb:
                    raise ConfigError(f"ambient.{key} is required for custom profiles")
                _parse_expr(amb[key], f"ambient.{key}")
            profile = custom_profile(amb["h"], amb["hp"], amb["hpp"], t_min=float(amb["t_min"] or 0.0),
                                     t_max=None if amb.get("t_max") is None else float(amb["t_max"]))
        else:
            profile = WarpProfile(kind, lam=_num(amb, "lambda", "ambient", lo=1e-300),
                                  t_min=_num(amb, "t_min", "ambient", lo=0.0),
                                  t_max=None if amb.get("t_max") is None else _num(amb, "t_max", "ambient"))
    except ConfigError as exc:
        raise ConfigError(f"ambient: {exc}") from None

    try:
        mfld = build_grid_from_spec(raw["base"])
    except ConfigError as exc:
        raise ConfigError(f"base: {exc}") from None

    k = _num(raw, "k", "config", integer=True)
    if not 1 <= k <= mfld.dim:
        raise ConfigError(f"k={k} exceeds base dimension {mfld.dim} (need 1 <= k <= n)")

    phi = None
    if raw["phi"] is not None:
        ph = raw["phi"]
        t_minus = _num(ph, "t_minus", "phi")
        t_plus = _num(ph, "t_plus", "phi")
        expr = ph.get("expr")
        if expr is not None:
            _parse_expr(expr, "phi.expr")
        try:
            phi = build_phi(t_minus, t_plus, expr, profile=profile, validate=False)
        except WeingartenError as exc:
            raise ConfigError(f"phi: {exc}") from None

    ps = raw["psi"]
    if "expr" in ps and "family" not in ps:
        psi = ExprPsi(_parse_expr(ps["expr"], "psi.expr"))
        raw["psi"] = {"expr": ps["expr"]}
    elif ps.get("family") == "phi_bar":
        ps.setdefault("scale", 1.0)
        if phi is None:
            raise ConfigError("psi.family phi_bar needs a phi section")
        perturb = ps.get("perturb")
        if perturb is not None:
            perturb = _parse_expr(perturb, "psi.perturb")
        psi = PhiBarPsi(phi, profile, mfld.dim, k, scale=_num(ps, "scale", "psi", lo=0.0), perturb=perturb)
    elif ps.get("family") == "manufactured":
        if "z_star" not in ps:
            raise ConfigError("psi.z_star is required for the manufactured family")
        ps.setdefault("power", 0.0)
        psi = manufactured_psi(_parse_expr(ps["z_star"], "psi.z_star"), profile, mfld, k,
                               power=float(ps.get("power", 0.0)))
    else:
        raise ConfigError(f"psi: need 'expr' or family phi_bar|manufactured, got {ps!r}")

    hom = raw["homotopy"]
    if hom["mode"] is None:
        hom["mode"] = "inverse_k_power" if profile.kind == "sphere" else "linear"
    homotopy = None
    if phi is not None:
        try:
            homotopy = HomotopyConfig(psi=psi, phi=phi, k=k, mode=hom["mode"],
                                      step=_num(hom, "step", "homotopy", lo=1e-12, hi=1.0),
                                      min_step=_num(hom, "min_step", "homotopy", lo=1e-12, hi=1.0),
                                      max_step=_num(hom, "max_step", "homotopy", lo=1e-12, hi=1.0))
        except WeingartenError as exc:
            raise ConfigError(f"homotopy: {exc}") from None

    sv = raw["solver"]
    options = SolverOptions(tol_residual=_num(sv, "tol_residual", "solver", lo=0.0),
                            max_newton=_num(sv, "max_newton", "solver", lo=1, integer=True),
                            normalized=bool(sv["normalized"]))
    init = None if sv.get("init") is None else _num(sv, "init", "solver")
    if init is not None and not profile.contains(init):
        raise ConfigError(f"solver.init={init} outside the profile interval")

    ck = raw["check"]
    nus = np.linspace(-1.0, -0.05, _num(ck, "nu_samples", "check", lo=1, integer=True))
    seed = _num(raw, "seed", "config", integer=True)
    return RunConfig(raw=raw, profile=profile, mfld=mfld, k=k, psi=psi, phi=phi, homotopy=homotopy,
                     options=options, init=init, seed=seed, output=str(raw["output"]),
                     nu_samples=nus, n_t=_num(ck, "n_t", "check", lo=2, integer=True))


def load_config(path, overrides=None):
    """Read and validate a YAML config file."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: YAML parse error: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return build_config(data, overrides)


def manufactured_psi(z_star, profile, mfld, k, power=0.0):
    """Grid-sampled sigma_k of the graph of ``z_star`` (an expression in x1, x2)."""
    from weingarten import _kernels
    from weingarten.graphgeom import grid_geometry

    u = mfld.mesh
    env = {f"x{i + 1}": ui for i, ui in enumerate(u)}
    zs = np.broadcast_to(z_star.evaluate(env), mfld.shape).astype(float)
    geo = grid_geometry(profile, mfld, zs)
    vals = _kernels.esym(geo.kappa.reshape(-1, mfld.dim), k)[:, k].reshape(mfld.shape)
    psi = GridPsi(vals, zs, power)
    psi.z_star = zs
    return psi

