"""Declarative scenario configurations and the built-in experiments.

A scenario is a frozen :class:`ScenarioConfig`.  Parameter fields, initial
data and perturbations are referenced by registered shape names with numeric
keyword parameters, so every configuration round-trips through a plain INI
file (see :func:`save_config` and :func:`load_config`).

Shapes
------
``constant``            value
``cos2``                amp * cos(k pi x)**2 + offset
``sin``                 amp * sin(k pi x) + offset
``exp_cos``             exp(amp * cos(k pi x))
``piecewise``           left for x < x0, right otherwise
``gaussian``            base + amp * exp(-width * (x - center)**2)
``radius_unloaded``     pi R0**2 with the bulging radius profile of Example 2
``radius_loaded``       pi R0**2 with the narrowing radius profile of Example 2
``radius_aneurysm``     pi R0**2, smooth aneurysm
``radius_stenosis``     pi R0**2, smooth stenosis
``radius_step``         pi R0**2, decreasing step at x = L/2
``kappa_law``           K = kappa / sqrt(pi) * sqrt(A0(x)) (stiffness only)
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .exact import steady_profile
from .model import ModelParams, phi_s

Params = Tuple[Tuple[str, float], ...]


# ---------------------------------------------------------------------------
# shape registry
# ---------------------------------------------------------------------------

def _radius_unloaded(x, R=0.004, dR=0.001, L=0.14, x1=0.01, x2=0.0305, x3=0.0495, x4=0.07):
    x = np.asarray(x, dtype=float)
    R0 = np.full_like(x, R)
    m = (x >= x1) & (x <= x2)
    R0[m] = R + 0.5 * dR * (np.sin((x[m] - x1) / (x2 - x1) * np.pi - 0.5 * np.pi) + 1.0)
    R0[(x > x2) & (x < x3)] = R + dR
    m = (x >= x3) & (x <= x4)
    R0[m] = R + 0.5 * dR * (np.cos((x[m] - x3) / (x4 - x3) * np.pi) + 1.0)
    return R0


def _radius_loaded(x, R=0.004, dR=0.001, L=0.14, x1=0.0315, x2=0.035, x3=0.105, x4=0.1085):
    x = np.asarray(x, dtype=float)
    R0 = np.full_like(x, R + dR)
    m = (x >= x1) & (x <= x2)
    R0[m] = R - 0.5 * dR * (np.sin((x[m] - x1) / (x2 - x1) * np.pi - 0.5 * np.pi) - 1.0)
    R0[(x > x2) & (x < x3)] = R
    m = (x >= x3) & (x <= x4)
    R0[m] = R - 0.5 * dR * (np.cos((x[m] - x3) / (x4 - x3) * np.pi) - 1.0)
    return R0


def _radius_aneurysm(x, R=0.004, dR=0.001, L=0.16):
    x = np.asarray(x, dtype=float)
    x1, x2, x3, x4 = 9 * L / 40, L / 4, 3 * L / 4, 31 * L / 40
    R0 = np.full_like(x, R)
    m = (x >= x1) & (x <= x2)
    R0[m] = R + 0.5 * dR * (1.0 - np.cos((x[m] - x1) / (x2 - x1) * np.pi))
    R0[(x > x2) & (x < x3)] = R + dR
    m = (x >= x3) & (x <= x4)
    R0[m] = R + 0.5 * dR * (1.0 + np.cos((x[m] - x3) / (x4 - x3) * np.pi))
    return R0


def _radius_stenosis(x, R=0.004, dR=0.001, L=0.16):
    x = np.asarray(x, dtype=float)
    x1, x2 = 3 * L / 10, 7 * L / 10
    R0 = np.full_like(x, R)
    m = (x >= x1) & (x <= x2)
    R0[m] = R - 0.25 * dR * (1.0 - np.cos(2.0 * np.pi * (x[m] - x1) / (x2 - x1)))
    return R0


def _radius_step(x, R=0.004, dR=0.001, L=0.16):
    x = np.asarray(x, dtype=float)
    return np.where(x < 0.5 * L, R, R - 0.5 * dR)


def _area(radius_fn):
    def shape(x, **kw):
        return np.pi * radius_fn(x, **kw) ** 2
    shape.radius = radius_fn
    return shape


SHAPES: Dict[str, Callable] = {
    "constant": lambda x, value: np.full_like(np.asarray(x, dtype=float), value),
    "cos2": lambda x, amp, k, offset=0.0: amp * np.cos(k * np.pi * np.asarray(x)) ** 2 + offset,
    "sin": lambda x, amp, k, offset=0.0: amp * np.sin(k * np.pi * np.asarray(x)) + offset,
    "exp_cos": lambda x, amp, k: np.exp(amp * np.cos(k * np.pi * np.asarray(x))),
    "piecewise": lambda x, left, right, x0: np.where(np.asarray(x) < x0, left, right).astype(float),
    "gaussian": lambda x, base, amp, width, center: base + amp * np.exp(-width * (np.asarray(x) - center) ** 2),
    "radius_unloaded": _area(_radius_unloaded),
    "radius_loaded": _area(_radius_loaded),
    "radius_aneurysm": _area(_radius_aneurysm),
    "radius_stenosis": _area(_radius_stenosis),
    "radius_step": _area(_radius_step),
}


@dataclass(frozen=True)
class FieldSpec:
    """A registered shape name and its numeric parameters."""

    shape: str
    params: Params = ()

    def kwargs(self):
        return dict(self.params)

    def build(self, A0_fn=None):
        """Vectorised closure of ``x``.

        ``kappa_law`` needs the rest-area closure ``A0_fn``.
        """
        kw = self.kwargs()
        if self.shape == "kappa_law":
            if A0_fn is None:
                raise ConfigError("kappa_law needs the A0 field")
            kappa = kw["kappa"]
            return lambda x: kappa / np.sqrt(np.pi) * np.sqrt(A0_fn(x))
        try:
            fn = SHAPES[self.shape]
        except KeyError:
            raise ConfigError(f"unknown field shape {self.shape!r}") from None
        try:
            fn(np.zeros(1), **kw)
        except TypeError as exc:
            raise ConfigError(f"bad parameters for shape {self.shape!r}: {exc}") from None
        return lambda x: fn(x, **kw)


def spec(shape, **params):
    """Shorthand constructor for :class:`FieldSpec`."""
    return FieldSpec(shape, tuple(sorted((k, float(v)) for k, v in params.items())))


# ---------------------------------------------------------------------------
# initial data and perturbations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InitSpec:
    """Initial data.

    ``kind`` is one of

    * ``fields``: ``A`` and ``Q`` given directly as field specs;
    * ``rest``: blood at rest ``A = (offset + sqrt(A0))**2``, ``Q = 0``
      (``offset = 0`` gives the unloaded state ``A = A0``);
    * ``shapiro``: moving steady state with inlet Shapiro number ``S_in``,
      ``A_in = A0(0) (1 + S_in)**2`` and ``Q = A_in S_in c(A_in)``; the
      energy is taken at the outlet with ``A_out = A0(L) (1 + S_in)**2``;
    * ``inlet_velocity``: moving steady state with discharge ``Q_s`` and
      inlet area ``A(0) = Q_s / u_in``;
    * ``steady``: explicit ``Q_s`` and ``E_s``.
    """

    kind: str
    A: Optional[FieldSpec] = None
    Q: Optional[FieldSpec] = None
    params: Params = ()

    def kwargs(self):
        return dict(self.params)


@dataclass(frozen=True)
class Perturbation:
    """Area perturbation added to the background state.

    ``kind`` is ``sin_window`` (``A_eq [1 - amp sin(k pi (x - a))]**2`` on
    ``[a, b]``), ``cos2_window`` (``A_eq + amp pi cos(k pi x)**2`` on ``[a, b]``)
    or ``gaussian`` (``A_eq + amp exp(-width (x - center)**2)``).
    """

    kind: str
    params: Params = ()

    def kwargs(self):
        return dict(self.params)

    def apply(self, A_eq: Callable) -> Callable:
        kw = self.kwargs()
        if self.kind == "sin_window":
            a, b, amp, k = kw["a"], kw["b"], kw["amp"], kw["k"]

            def A(x):
                x = np.asarray(x, dtype=float)
                base = A_eq(x)
                inside = (x >= a) & (x <= b)
                return np.where(inside, base * (1.0 - amp * np.sin(k * np.pi * (x - a))) ** 2, base)
            return A
        if self.kind == "cos2_window":
            a, b, amp, k = kw["a"], kw["b"], kw["amp"], kw["k"]

            def A(x):
                x = np.asarray(x, dtype=float)
                inside = (x >= a) & (x <= b)
                return A_eq(x) + np.where(inside, amp * np.pi * np.cos(k * np.pi * x) ** 2, 0.0)
            return A
        if self.kind == "gaussian":
            amp, width, center = kw["amp"], kw["width"], kw["center"]
            return lambda x: A_eq(x) + amp * np.exp(-width * (np.asarray(x, dtype=float) - center) ** 2)
        raise ConfigError(f"unknown perturbation {self.kind!r}")

    def support(self):
        """Interval where the perturbation is non-negligible."""
        kw = self.kwargs()
        if self.kind in ("sin_window", "cos2_window"):
            return kw["a"], kw["b"]
        half = np.sqrt(np.log(1e8) / kw["width"])
        return kw["center"] - half, kw["center"] + half


# ---------------------------------------------------------------------------
# scenario config
# ---------------------------------------------------------------------------

BC_MODES = ("periodic", "extrapolation")
REFERENCES = ("none", "steady", "exact_riemann")


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one run.

    Attributes
    ----------
    name : str
    x_left, x_right : float
        Domain bounds.
    N : int
        Number of cells (at least 4).
    r : int
        Polynomial degree in ``{2, 3, 4}`` (scheme order ``r + 1``).
    t_end : float
    bc : str
        ``periodic`` or ``extrapolation``.
    rho, m, n : float
        Density and tube-law exponents.
    K, A0, p_ext : FieldSpec
    initial : InitSpec
    perturbation : Perturbation or None
    well_balanced : bool
    cfl : float or None
        Overrides the default CFL number of the order.
    outputs : tuple of float
        Snapshot times.
    reference : str
        ``none``, ``steady`` (errors against the unperturbed initial data) or
        ``exact_riemann``.
    description : str
    """

    name: str
    x_left: float
    x_right: float
    N: int
    r: int
    t_end: float
    bc: str
    rho: float
    m: float
    n: float
    K: FieldSpec
    A0: FieldSpec
    p_ext: FieldSpec
    initial: InitSpec
    perturbation: Optional[Perturbation] = None
    well_balanced: bool = True
    cfl: Optional[float] = None
    outputs: Tuple[float, ...] = ()
    reference: str = "none"
    description: str = ""

    def __post_init__(self):
        if self.r not in (2, 3, 4):
            raise ConfigError(f"degree r must be 2, 3 or 4, got {self.r}")
        if self.N < 4:
            raise ConfigError(f"need at least 4 cells, got {self.N}")
        if not self.x_right > self.x_left:
            raise ConfigError("empty domain")
        if self.bc not in BC_MODES:
            raise ConfigError(f"unknown boundary mode {self.bc!r}")
        if self.reference not in REFERENCES:
            raise ConfigError(f"unknown reference {self.reference!r}")
        if not self.t_end >= 0:
            raise ConfigError("t_end must be non-negative")
        if self.cfl is not None and not 0 < self.cfl <= 1:
            raise ConfigError("cfl must lie in (0, 1]")

    def with_(self, **changes):
        """Copy with some fields replaced."""
        return replace(self, **changes)

    @property
    def order(self):
        return self.r + 1

    def build_model(self) -> ModelParams:
        A0 = self.A0.build()
        model = ModelParams(self.rho, self.m, self.n, K=self.K.build(A0), A0=A0, p_ext=self.p_ext.build())
        xs = np.linspace(self.x_left, self.x_right, 257)
        model.sample(xs)
        return model

    def background(self, model: Optional[ModelParams] = None):
        """Unperturbed initial data as closures ``(A, Q)``."""
        model = model or self.build_model()
        init = self.initial
        kw = init.kwargs()
        if init.kind == "fields":
            if init.A is None or init.Q is None:
                raise ConfigError("fields initial data need A and Q specs")
            return init.A.build(), init.Q.build()
        if init.kind == "rest":
            off = kw.get("offset", 0.0)
            return (lambda x: (off + np.sqrt(model.A0(x))) ** 2,
                    lambda x: np.zeros_like(np.asarray(x, dtype=float)))
        Qs, Es = self.steady_constants(model)
        return _steady_closure(Qs, Es, model), (lambda x: np.full_like(np.asarray(x, dtype=float), Qs))

    def steady_constants(self, model: Optional[ModelParams] = None):
        """``(Q_s, E_s)`` of a moving steady state."""
        model = model or self.build_model()
        init = self.initial
        kw = init.kwargs()
        rho, m, n = model.rho, model.m, model.n
        if init.kind == "steady":
            return kw["Q_s"], kw["E_s"]
        if init.kind == "shapiro":
            S = kw["S_in"]
            K0, A00, _ = (v[0] for v in model.sample(np.array([self.x_left])))
            KL, A0L, pL = (v[0] for v in model.sample(np.array([self.x_right])))
            A_in = A00 * (1.0 + S) ** 2
            c_in = np.sqrt(K0 / (2.0 * rho)) * (A_in / A00) ** 0.25 if (m, n) == (0.5, 0.0) else None
            if c_in is None:
                raise ConfigError("shapiro initial data assume the artery tube law")
            Qs = A_in * S * c_in
            A_out = A0L * (1.0 + S) ** 2
            Es = Qs ** 2 / (2.0 * A_out ** 2) + (KL * phi_s(A_out / A0L, m, n) + pL) / rho
            return Qs, Es
        if init.kind == "inlet_velocity":
            Qs, u_in = kw["Q_s"], kw["u_in"]
            K0, A00, p0 = (v[0] for v in model.sample(np.array([self.x_left])))
            A_in = Qs / u_in
            return Qs, 0.5 * u_in ** 2 + (K0 * phi_s(A_in / A00, m, n) + p0) / rho
        raise ConfigError(f"unknown initial data kind {init.kind!r}")

    def initial_data(self, model: Optional[ModelParams] = None):
        """Initial closures ``(A, Q)`` including the perturbation."""
        model = model or self.build_model()
        A, Q = self.background(model)
        if self.perturbation is not None:
            A = self.perturbation.apply(A)
        return A, Q


def _steady_closure(Qs, Es, model):
    def A(x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        return steady_profile(Qs, Es, model, flat).reshape(x.shape)
    return A


# ---------------------------------------------------------------------------
# built-in scenarios
# ---------------------------------------------------------------------------

def _artery(name, a, b, N, t_end, A0, K, initial, *, bc="extrapolation", rho=1060.0, p_ext=None, **kw):
    return ScenarioConfig(name=name, x_left=a, x_right=b, N=N, r=2, t_end=t_end, bc=bc, rho=rho,
                          m=0.5, n=0.0, K=K, A0=A0, p_ext=p_ext or spec("constant", value=0.0),
                          initial=initial, **kw)


def builtin_scenarios() -> Dict[str, ScenarioConfig]:
    """The configured experiments, keyed by name (all at ``r = 2``)."""
    out = {}
    kap = spec("kappa_law", kappa=1e8)

    out["example1"] = _artery(
        "example1", 0.0, 10.0, 40, 0.01, spec("cos2", amp=0.5, k=0.2, offset=5.0), kap,
        InitSpec("fields", A=spec("sin", amp=1.0, k=0.2, offset=10.0), Q=spec("exp_cos", amp=1.0, k=0.2)),
        bc="periodic", description="smooth periodic accuracy test")

    for cfg, shape, init in (("unloaded", "radius_unloaded", InitSpec("rest")),
                             ("loaded", "radius_loaded", InitSpec("rest", params=(("offset", 0.001),)))):
        out[f"example2-{cfg}"] = _artery(
            f"example2-{cfg}", 0.0, 0.14, 50, 5.0, spec(shape), kap, init, reference="steady",
            description=f"blood at rest, {cfg} configuration")

    out["example3"] = out["example2-loaded"].with_(
        name="example3", t_end=0.0016, outputs=(0.0008, 0.0016),
        perturbation=Perturbation("sin_window", (("a", 0.063), ("amp", 1e-3), ("b", 0.077), ("k", 500.0 / 7.0))),
        description="small perturbation of the loaded rest state")

    for test, shape in (("aneurysm", "radius_aneurysm"), ("stenosis", "radius_stenosis"), ("step", "radius_step")):
        for S in (0.5, 0.1, 0.01):
            nm = f"example4-{test}-s{S:g}"
            out[nm] = _artery(nm, 0.0, 0.16, 50, 5.0, spec(shape), kap,
                              InitSpec("shapiro", params=(("S_in", S),)), reference="steady",
                              description=f"moving steady state, {test}, inlet Shapiro number {S:g}")

    for S in (0.5, 0.1, 0.01):
        nm = f"example5-s{S:g}"
        out[nm] = out[f"example4-aneurysm-s{S:g}"].with_(
            name=nm, t_end=0.005, outputs=(0.0025, 0.005),
            perturbation=Perturbation("cos2_window", (("a", 0.072), ("amp", 2.5e-9), ("b", 0.088), ("k", 62.5))),
            description=f"small perturbation of the aneurysm steady state, S_in={S:g}")

    A6 = np.pi * 4e-3 ** 2
    out["example6"] = _artery(
        "example6", -0.04, 0.04, 50, 0.005, spec("constant", value=A6), spec("kappa_law", kappa=1e7),
        InitSpec("fields", A=spec("piecewise", left=np.pi * 5e-3 ** 2, right=A6, x0=0.0),
                 Q=spec("constant", value=0.0)),
        reference="exact_riemann", outputs=(0.005,), description="ideal tourniquet")

    for nm, sgn, T in (("example7-rarefactions", -1.0, 0.009), ("example7-shocks", 1.0, 0.012)):
        out[nm] = _artery(
            nm, 0.0, 0.2, 100, T, spec("constant", value=6.28e-4), spec("kappa_law", kappa=3.31e6),
            InitSpec("fields", A=spec("constant", value=6.28e-4),
                     Q=spec("piecewise", left=sgn * 6.28e-4, right=-sgn * 6.28e-4, x0=0.1)),
            reference="exact_riemann", outputs=(T,), description="Riemann problem")

    gauss = dict(width=10.0, center=2.5)
    out["example8"] = ScenarioConfig(
        name="example8", x_left=0.0, x_right=5.0, N=50, r=2, t_end=5.0, bc="extrapolation",
        rho=1050.0, m=0.5, n=0.0,
        K=spec("gaussian", base=58725.0, amp=100.0, **gauss),
        A0=spec("gaussian", base=5e-4, amp=1e-4, **gauss),
        p_ext=spec("gaussian", base=1e4, amp=100.0, **gauss),
        initial=InitSpec("inlet_velocity", params=(("Q_s", 1.0228e-3), ("u_in", 1.0))),
        reference="steady", description="smooth steady state with varying parameters")
    out["example8-perturbed"] = out["example8"].with_(
        name="example8-perturbed", t_end=0.4, outputs=(0.1, 0.4),
        perturbation=Perturbation("gaussian", (("amp", 1e-7), ("center", 1.0), ("width", 40.0))))

    AL, uL = 6.41356968e-4, 1.0
    AR, uR = 3.109988229063683e-4, 2.06224886
    out["example9"] = ScenarioConfig(
        name="example9", x_left=0.0, x_right=0.2, N=50, r=2, t_end=1.0, bc="extrapolation",
        rho=1050.0, m=10.0, n=-1.5,
        K=spec("piecewise", left=58725.0, right=587250.0, x0=0.1),
        A0=spec("piecewise", left=6.2706e-4, right=3.1353e-4, x0=0.1),
        p_ext=spec("piecewise", left=9999.15, right=78001.73870735058, x0=0.1),
        initial=InitSpec("fields", A=spec("piecewise", left=AL, right=AR, x0=0.1),
                         Q=spec("piecewise", left=AL * uL, right=AR * uR, x0=0.1)),
        reference="steady", description="discontinuous steady state in a vein")
    out["example9-perturbed"] = out["example9"].with_(
        name="example9-perturbed", t_end=0.002, outputs=(0.001, 0.002),
        perturbation=Perturbation("gaussian", (("amp", 1e-5), ("center", 0.05), ("width", 20000.0))))
    return out


def get_scenario(name) -> ScenarioConfig:
    table = builtin_scenarios()
    try:
        return table[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; see list-scenarios") from None


# ---------------------------------------------------------------------------
# INI round trip
# ---------------------------------------------------------------------------

def _spec_to_section(cp, section, fs: FieldSpec):
    cp[section] = {"shape": fs.shape, **{k: repr(v) for k, v in fs.params}}


def _section_to_spec(cp, section):
    if section not in cp:
        raise ConfigError(f"missing section [{section}]")
    sec = dict(cp[section])
    try:
        shape = sec.pop("shape")
    except KeyError:
        raise ConfigError(f"section [{section}] needs a shape") from None
    return FieldSpec(shape, tuple(sorted((k, _num(v, section, k)) for k, v in sec.items())))


def _num(v, section, key):
    try:
        return float(v)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {v!r} is not a number") from None


def save_config(config: ScenarioConfig, path):
    """Write ``config`` as an INI file."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["scenario"] = {
        "name": config.name, "description": config.description,
        "x_left": repr(config.x_left), "x_right": repr(config.x_right),
        "N": str(config.N), "r": str(config.r), "t_end": repr(config.t_end), "bc": config.bc,
        "well_balanced": str(config.well_balanced).lower(),
        "cfl": "" if config.cfl is None else repr(config.cfl),
        "outputs": ", ".join(repr(t) for t in config.outputs), "reference": config.reference,
    }
    cp["model"] = {"rho": repr(config.rho), "m": repr(config.m), "n": repr(config.n)}
    _spec_to_section(cp, "K", config.K)
    _spec_to_section(cp, "A0", config.A0)
    _spec_to_section(cp, "p_ext", config.p_ext)
    cp["initial"] = {"kind": config.initial.kind, **{k: repr(v) for k, v in config.initial.params}}
    if config.initial.A is not None:
        _spec_to_section(cp, "initial.A", config.initial.A)
    if config.initial.Q is not None:
        _spec_to_section(cp, "initial.Q", config.initial.Q)
    if config.perturbation is not None:
        cp["perturbation"] = {"kind": config.perturbation.kind,
                              **{k: repr(v) for k, v in config.perturbation.params}}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        cp.write(fh)


def load_config(path) -> ScenarioConfig:
    """Read a scenario from an INI file.

    Raises
    ------
    ConfigError
        On missing sections, unknown shapes or malformed values.
    """
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if not cp.read(path):
        raise ConfigError(f"cannot read config {path}")
    for sec in ("scenario", "model", "initial"):
        if sec not in cp:
            raise ConfigError(f"missing section [{sec}]")
    sc = cp["scenario"]
    try:
        outputs = tuple(float(t) for t in sc.get("outputs", "").split(",") if t.strip())
        cfl = sc.get("cfl", "").strip()
        init = dict(cp["initial"])
        kind = init.pop("kind")
        initial = InitSpec(kind,
                           A=_section_to_spec(cp, "initial.A") if "initial.A" in cp else None,
                           Q=_section_to_spec(cp, "initial.Q") if "initial.Q" in cp else None,
                           params=tuple(sorted((k, _num(v, "initial", k)) for k, v in init.items())))
        pert = None
        if "perturbation" in cp:
            p = dict(cp["perturbation"])
            pk = p.pop("kind")
            pert = Perturbation(pk, tuple(sorted((k, _num(v, "perturbation", k)) for k, v in p.items())))
        cfg = ScenarioConfig(
            name=sc.get("name", Path(path).stem), description=sc.get("description", ""),
            x_left=float(sc["x_left"]), x_right=float(sc["x_right"]), N=int(sc["N"]), r=int(sc["r"]),
            t_end=float(sc["t_end"]), bc=sc.get("bc", "extrapolation"),
            well_balanced=sc.getboolean("well_balanced", True),
            cfl=float(cfl) if cfl else None, outputs=outputs, reference=sc.get("reference", "none"),
            rho=float(cp["model"]["rho"]), m=float(cp["model"]["m"]), n=float(cp["model"]["n"]),
            K=_section_to_spec(cp, "K"), A0=_section_to_spec(cp, "A0"), p_ext=_section_to_spec(cp, "p_ext"),
            initial=initial, perturbation=pert)
    except KeyError as exc:
        raise ConfigError(f"missing key {exc} in {path}") from None
    except ValueError as exc:
        raise ConfigError(f"malformed value in {path}: {exc}") from None
    cfg.build_model()
    return cfg
