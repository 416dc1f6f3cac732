"""Run configuration: INI-style parsing with validation, defaults, emission.

A config is sectioned ``key = value`` text with ``#`` comments.  Required
keys are weight.rho, time.dt and time.t_end; everything else defaults.
Errors name the offending ``section.key`` and the violated constraint.
``parse_config(emit_config(cfg))`` round-trips exactly.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

from sdwave.errors import ConfigError
from sdwave.grid import PolarGrid, build_annulus
from sdwave.solver import NonlinearityParams, TimeScheme, initial_bump
from sdwave.weight import WeightParams, default_eps, epsilon_window, rho_critical

__all__ = [
    "SimConfig",
    "parse_config",
    "parse_config_file",
    "emit_config",
    "MODES",
]

MODES = ("simulate", "mms", "check-weight", "check-gn", "fit-decay", "sweep")


@dataclass(frozen=True)
class DomainConfig:
    r_inner: float = 1.0
    r_outer: float = 2.0
    nr: int = 32
    ntheta: int = 64
    B: float | None = None


@dataclass(frozen=True)
class TimeConfig:
    dt: float
    t_end: float
    theta: float = 0.5
    stride: int = 10


@dataclass(frozen=True)
class WeightConfig:
    rho: float
    eps: float | None = None


@dataclass(frozen=True)
class NonlinearityConfig:
    a: float = 0.0
    b: float = 0.0
    p: float = 9.0
    q: float = 9.0


@dataclass(frozen=True)
class InitConfig:
    u0_amplitude: float = 0.0
    u0_support: tuple[float, float] | None = None
    u1_amplitude: float = 0.0
    u1_support: tuple[float, float] | None = None


@dataclass(frozen=True)
class ConstantsConfig:
    c0: float = 1.0


@dataclass(frozen=True)
class OutputConfig:
    path: str = "sdwave_out.csv"
    format: str = "csv"
    figures: bool = True


@dataclass(frozen=True)
class SweepConfig:
    p: tuple[float, ...] | None = None
    q: tuple[float, ...] | None = None
    rho: tuple[float, ...] | None = None
    u0_amplitude: tuple[float, ...] | None = None


@dataclass(frozen=True)
class FitDecayConfig:
    input: str | None = None          # defaults to output.path
    columns: tuple[str, ...] = ("E_higher",)
    t_min: float | None = None        # default: 10% of the data horizon
    t_max: float | None = None


@dataclass(frozen=True)
class CheckWeightConfig:
    t_max: float = 100.0
    r_max: float = 50.0
    nt: int = 21
    nr: int = 21


@dataclass(frozen=True)
class GnConfig:
    m_values: tuple[float, ...] = (4.0, 6.0, 10.0)
    samples: int = 100
    seed: int = 1234


@dataclass(frozen=True)
class MmsConfig:
    levels: int = 3
    base_nr: int = 32
    base_ntheta: int = 64
    t_end: float = 0.5
    cfl: float = 1.0


@dataclass(frozen=True)
class SimConfig:
    domain: DomainConfig
    time: TimeConfig
    weight: WeightConfig
    nonlinearity: NonlinearityConfig
    init: InitConfig
    constants: ConstantsConfig
    output: OutputConfig
    mode: str = "simulate"
    sweep: SweepConfig = SweepConfig()
    fitdecay: FitDecayConfig = FitDecayConfig()
    checkweight: CheckWeightConfig = CheckWeightConfig()
    gn: GnConfig = GnConfig()
    mms: MmsConfig = MmsConfig()

    # ---- builders ------------------------------------------------------

    def build_grid(self) -> PolarGrid:
        d = self.domain
        return build_annulus(d.r_inner, d.r_outer, d.nr, d.ntheta, d.B)

    def weight_params(self) -> WeightParams:
        return WeightParams(rho=self.weight.rho, eps=self.weight.eps)

    def time_scheme(self) -> TimeScheme:
        t = self.time
        return TimeScheme(dt=t.dt, theta=t.theta)

    def nonlinearity_params(self) -> NonlinearityParams:
        n = self.nonlinearity
        return NonlinearityParams(a=n.a, b=n.b, p=n.p, q=n.q)

    def default_support(self) -> tuple[float, float]:
        span = self.domain.r_outer - self.domain.r_inner
        return (
            self.domain.r_inner + 0.25 * span,
            self.domain.r_inner + 0.75 * span,
        )

    def initial_fields(self, grid: PolarGrid):
        init = self.init
        u0_support = init.u0_support or self.default_support()
        u1_support = init.u1_support or self.default_support()
        u0 = initial_bump(grid, init.u0_amplitude, u0_support)
        u1 = initial_bump(grid, init.u1_amplitude, u1_support)
        return u0, u1

    @property
    def weighted_checks_enabled(self) -> bool:
        return self.weight.eps is not None


_SCHEMA: dict[str, tuple[str, ...]] = {
    "domain": ("r_inner", "r_outer", "nr", "ntheta", "b"),
    "time": ("dt", "t_end", "theta", "stride"),
    "weight": ("rho", "eps"),
    "nonlinearity": ("a", "b", "p", "q"),
    "init": ("u0_amplitude", "u0_support", "u1_amplitude", "u1_support"),
    "constants": ("c0",),
    "output": ("path", "format", "figures"),
    "mode": ("mode",),
    "sweep": ("p", "q", "rho", "u0_amplitude"),
    "fitdecay": ("input", "columns", "t_min", "t_max"),
    "checkweight": ("t_max", "r_max", "nt", "nr"),
    "gn": ("m_values", "samples", "seed"),
    "mms": ("levels", "base_nr", "base_ntheta", "t_end", "cfl"),
}


class _Reader:
    def __init__(self, parser: configparser.ConfigParser) -> None:
        self.parser = parser

    def has(self, section: str, key: str) -> bool:
        return self.parser.has_section(section) and self.parser.has_option(section, key)

    def raw(self, section: str, key: str) -> str:
        return self.parser.get(section, key).strip()

    def _convert(self, section: str, key: str, conv, kind: str):
        text = self.raw(section, key)
        try:
            return conv(text)
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected {kind}, got {text!r}") from None

    def get_float(self, section, key, default=None, required=False):
        if not self.has(section, key):
            if required:
                raise ConfigError(f"{section}.{key}: missing required key")
            return default
        return self._convert(section, key, float, "a number")

    def get_int(self, section, key, default=None):
        if not self.has(section, key):
            return default
        return self._convert(section, key, int, "an integer")

    def get_str(self, section, key, default=None):
        if not self.has(section, key):
            return default
        return self.raw(section, key)

    def get_bool(self, section, key, default=None):
        if not self.has(section, key):
            return default
        text = self.raw(section, key).lower()
        if text in ("true", "yes", "1", "on"):
            return True
        if text in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{section}.{key}: expected a boolean, got {text!r}")

    def get_pair(self, section, key, default=None):
        if not self.has(section, key):
            return default
        text = self.raw(section, key).replace(",", " ")
        parts = text.split()
        if len(parts) != 2:
            raise ConfigError(f"{section}.{key}: expected two numbers, got {text!r}")
        try:
            return (float(parts[0]), float(parts[1]))
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected two numbers, got {text!r}") from None

    def get_float_list(self, section, key, default=None):
        if not self.has(section, key):
            return default
        text = self.raw(section, key).replace(",", " ")
        try:
            values = tuple(float(p) for p in text.split())
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected numbers, got {text!r}") from None
        if not values:
            raise ConfigError(f"{section}.{key}: empty list")
        return values

    def get_str_list(self, section, key, default=None):
        if not self.has(section, key):
            return default
        parts = tuple(p for p in self.raw(section, key).replace(",", " ").split())
        if not parts:
            raise ConfigError(f"{section}.{key}: empty list")
        return parts


def parse_config(text: str) -> SimConfig:
    """Parse, validate and default a config; raises ConfigError on any issue."""
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#",), interpolation=None, strict=True
    )
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"malformed config: {err}") from None

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")

    r = _Reader(parser)

    domain = DomainConfig(
        r_inner=r.get_float("domain", "r_inner", 1.0),
        r_outer=r.get_float("domain", "r_outer", 2.0),
        nr=r.get_int("domain", "nr", 32),
        ntheta=r.get_int("domain", "ntheta", 64),
        B=r.get_float("domain", "b", None),
    )
    if not 0.0 < domain.r_inner < domain.r_outer:
        raise ConfigError(
            f"domain.r_inner/domain.r_outer: need 0 < r_inner < r_outer, got "
            f"({domain.r_inner}, {domain.r_outer})"
        )
    if domain.nr < 4:
        raise ConfigError(f"domain.nr: must be at least 4, got {domain.nr}")
    if domain.ntheta < 8 or domain.ntheta % 2:
        raise ConfigError(f"domain.ntheta: must be even and at least 8, got {domain.ntheta}")
    if domain.B is not None and domain.B * domain.r_inner < 2.0:
        raise ConfigError(f"domain.b: must satisfy B*r_inner >= 2, got {domain.B}")

    time_cfg = TimeConfig(
        dt=r.get_float("time", "dt", required=True),
        t_end=r.get_float("time", "t_end", required=True),
        theta=r.get_float("time", "theta", 0.5),
        stride=r.get_int("time", "stride", 10),
    )
    if time_cfg.dt <= 0.0:
        raise ConfigError(f"time.dt: must be positive, got {time_cfg.dt}")
    if time_cfg.t_end <= 0.0:
        raise ConfigError(f"time.t_end: must be positive, got {time_cfg.t_end}")
    if not 0.5 <= time_cfg.theta <= 1.0:
        raise ConfigError(f"time.theta: must lie in [0.5, 1], got {time_cfg.theta}")
    if time_cfg.stride < 1:
        raise ConfigError(f"time.stride: must be >= 1, got {time_cfg.stride}")

    rho = r.get_float("weight", "rho", required=True)
    if rho <= 0.0:
        raise ConfigError(f"weight.rho: must be positive, got {rho}")
    eps = r.get_float("weight", "eps", None)
    window = epsilon_window(rho)
    if eps is None:
        eps = default_eps(rho)  # None when the window is empty
    else:
        if window is None:
            raise ConfigError(
                f"weight.eps: eps given but the window is empty "
                f"(rho={rho} <= critical {rho_critical():.6f})"
            )
        if not window[0] <= eps < 1.0:
            raise ConfigError(
                f"weight.eps: must lie in [{window[0]:.6f}, 1), got {eps}"
            )
    weight_cfg = WeightConfig(rho=rho, eps=eps)

    nonlin = NonlinearityConfig(
        a=r.get_float("nonlinearity", "a", 0.0),
        b=r.get_float("nonlinearity", "b", 0.0),
        p=r.get_float("nonlinearity", "p", 9.0),
        q=r.get_float("nonlinearity", "q", 9.0),
    )
    if nonlin.a < 0.0 or nonlin.b < 0.0:
        raise ConfigError(f"nonlinearity.a/b: must be >= 0, got ({nonlin.a}, {nonlin.b})")
    if nonlin.p <= 1.0:
        raise ConfigError(f"nonlinearity.p: p must exceed 1, got {nonlin.p}")
    if nonlin.q <= 1.0:
        raise ConfigError(f"nonlinearity.q: q must exceed 1, got {nonlin.q}")

    init = InitConfig(
        u0_amplitude=r.get_float("init", "u0_amplitude", 0.0),
        u0_support=r.get_pair("init", "u0_support", None),
        u1_amplitude=r.get_float("init", "u1_amplitude", 0.0),
        u1_support=r.get_pair("init", "u1_support", None),
    )
    for name, support in (("u0_support", init.u0_support), ("u1_support", init.u1_support)):
        if support is not None and not (
            domain.r_inner < support[0] < support[1] < domain.r_outer
        ):
            raise ConfigError(
                f"init.{name}: must satisfy r_inner < lo < hi < r_outer, got {support}"
            )

    constants = ConstantsConfig(c0=r.get_float("constants", "c0", 1.0))
    if constants.c0 <= 0.0:
        raise ConfigError(f"constants.c0: must be positive, got {constants.c0}")

    output = OutputConfig(
        path=r.get_str("output", "path", "sdwave_out.csv"),
        format=r.get_str("output", "format", "csv"),
        figures=r.get_bool("output", "figures", True),
    )
    if output.format != "csv":
        raise ConfigError(f"output.format: only 'csv' is supported, got {output.format!r}")

    mode = r.get_str("mode", "mode", "simulate")
    if mode not in MODES:
        raise ConfigError(f"mode.mode: must be one of {', '.join(MODES)}, got {mode!r}")

    sweep = SweepConfig(
        p=r.get_float_list("sweep", "p", None),
        q=r.get_float_list("sweep", "q", None),
        rho=r.get_float_list("sweep", "rho", None),
        u0_amplitude=r.get_float_list("sweep", "u0_amplitude", None),
    )
    for key, values in (("p", sweep.p), ("q", sweep.q), ("rho", sweep.rho)):
        if values is not None and any(v <= (1.0 if key != "rho" else 0.0) for v in values):
            limit = "1" if key != "rho" else "0"
            raise ConfigError(f"sweep.{key}: every value must exceed {limit}, got {values}")

    fitdecay = FitDecayConfig(
        input=r.get_str("fitdecay", "input", None),
        columns=r.get_str_list("fitdecay", "columns", ("E_higher",)),
        t_min=r.get_float("fitdecay", "t_min", None),
        t_max=r.get_float("fitdecay", "t_max", None),
    )

    checkweight = CheckWeightConfig(
        t_max=r.get_float("checkweight", "t_max", 100.0),
        r_max=r.get_float("checkweight", "r_max", 50.0),
        nt=r.get_int("checkweight", "nt", 21),
        nr=r.get_int("checkweight", "nr", 21),
    )
    if checkweight.nt < 2 or checkweight.nr < 2:
        raise ConfigError("checkweight.nt/nr: lattice needs at least 2 points per axis")

    gn = GnConfig(
        m_values=r.get_float_list("gn", "m_values", (4.0, 6.0, 10.0)),
        samples=r.get_int("gn", "samples", 100),
        seed=r.get_int("gn", "seed", 1234),
    )
    if any(m < 2.0 for m in gn.m_values):
        raise ConfigError(f"gn.m_values: every m must be >= 2, got {gn.m_values}")
    if gn.samples < 1:
        raise ConfigError(f"gn.samples: must be >= 1, got {gn.samples}")

    mms = MmsConfig(
        levels=r.get_int("mms", "levels", 3),
        base_nr=r.get_int("mms", "base_nr", 32),
        base_ntheta=r.get_int("mms", "base_ntheta", 64),
        t_end=r.get_float("mms", "t_end", 0.5),
        cfl=r.get_float("mms", "cfl", 1.0),
    )
    if mms.levels < 2:
        raise ConfigError(f"mms.levels: need at least 2 levels, got {mms.levels}")

    return SimConfig(
        domain=domain,
        time=time_cfg,
        weight=weight_cfg,
        nonlinearity=nonlin,
        init=init,
        constants=constants,
        output=output,
        mode=mode,
        sweep=sweep,
        fitdecay=fitdecay,
        checkweight=checkweight,
        gn=gn,
        mms=mms,
    )


def parse_config_file(path) -> SimConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    return parse_config(text)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(cfg: SimConfig) -> str:
    """Serialize a config with all defaults resolved; parse(emit(cfg)) == cfg."""
    out = io.StringIO()

    def section(name, pairs):
        rows = [(k, v) for k, v in pairs if v is not None]
        if not rows:
            return
        out.write(f"[{name}]\n")
        for key, value in rows:
            out.write(f"{key} = {value}\n")
        out.write("\n")

    d, t, w, n = cfg.domain, cfg.time, cfg.weight, cfg.nonlinearity
    section(
        "domain",
        [
            ("r_inner", _fmt(d.r_inner)),
            ("r_outer", _fmt(d.r_outer)),
            ("nr", d.nr),
            ("ntheta", d.ntheta),
            ("b", None if d.B is None else _fmt(d.B)),
        ],
    )
    section(
        "time",
        [
            ("dt", _fmt(t.dt)),
            ("t_end", _fmt(t.t_end)),
            ("theta", _fmt(t.theta)),
            ("stride", t.stride),
        ],
    )
    section(
        "weight",
        [("rho", _fmt(w.rho)), ("eps", None if w.eps is None else _fmt(w.eps))],
    )
    section(
        "nonlinearity",
        [("a", _fmt(n.a)), ("b", _fmt(n.b)), ("p", _fmt(n.p)), ("q", _fmt(n.q))],
    )
    init = cfg.init
    section(
        "init",
        [
            ("u0_amplitude", _fmt(init.u0_amplitude)),
            (
                "u0_support",
                None
                if init.u0_support is None
                else f"{_fmt(init.u0_support[0])} {_fmt(init.u0_support[1])}",
            ),
            ("u1_amplitude", _fmt(init.u1_amplitude)),
            (
                "u1_support",
                None
                if init.u1_support is None
                else f"{_fmt(init.u1_support[0])} {_fmt(init.u1_support[1])}",
            ),
        ],
    )
    section("constants", [("c0", _fmt(cfg.constants.c0))])
    section(
        "output",
        [
            ("path", cfg.output.path),
            ("format", cfg.output.format),
            ("figures", _fmt(cfg.output.figures)),
        ],
    )
    section("mode", [("mode", cfg.mode)])

    sw = cfg.sweep
    section(
        "sweep",
        [
            (key, None if values is None else " ".join(_fmt(v) for v in values))
            for key, values in (
                ("p", sw.p),
                ("q", sw.q),
                ("rho", sw.rho),
                ("u0_amplitude", sw.u0_amplitude),
            )
        ],
    )
    fd = cfg.fitdecay
    section(
        "fitdecay",
        [
            ("input", fd.input),
            ("columns", " ".join(fd.columns)),
            ("t_min", None if fd.t_min is None else _fmt(fd.t_min)),
            ("t_max", None if fd.t_max is None else _fmt(fd.t_max)),
        ],
    )
    cw = cfg.checkweight
    section(
        "checkweight",
        [
            ("t_max", _fmt(cw.t_max)),
            ("r_max", _fmt(cw.r_max)),
            ("nt", cw.nt),
            ("nr", cw.nr),
        ],
    )
    gn = cfg.gn
    section(
        "gn",
        [
            ("m_values", " ".join(_fmt(m) for m in gn.m_values)),
            ("samples", gn.samples),
            ("seed", gn.seed),
        ],
    )
    m = cfg.mms
    section(
        "mms",
        [
            ("levels", m.levels),
            ("base_nr", m.base_nr),
            ("base_ntheta", m.base_ntheta),
            ("t_end", _fmt(m.t_end)),
            ("cfl", _fmt(m.cfl)),
        ],
    )
    return out.getvalue()
