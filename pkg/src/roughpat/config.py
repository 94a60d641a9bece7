"""Run configuration: a strict INI-style file with one section per module,
overridden by command-line flags.

Keys written before the first section header are accepted when the key
name belongs to exactly one section.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError, InvalidArgument
from .solvers import PRESETS, RdsParams

COMMANDS = ("gen-surface", "eig-maps", "heat", "rds", "continue", "sweep", "animal", "converge")


def _floats(s):
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    return [float(x) for x in str(s).replace(";", ",").split(",") if x.strip()]


def _ints(s):
    if isinstance(s, (list, tuple)):
        return [int(x) for x in s]
    return [int(x) for x in str(s).replace(";", ",").split(",") if x.strip()]


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(s)


def _strs(s):
    if isinstance(s, (list, tuple)):
        return [str(x) for x in s]
    return [x.strip() for x in str(s).replace(";", ",").split(",") if x.strip()]


def _opt_float(s):
    if s is None or str(s).strip().lower() in ("none", ""):
        return None
    return float(s)


# section -> key -> (RunConfig attribute, converter)
SCHEMA = {
    "surface": {
        "method": ("method", str), "M": ("M", int), "N": ("N", int), "beta": ("beta", float),
        "kappa": ("kappa", float), "F": ("F", _floats), "J": ("J", int), "q": ("q", str),
        "amplitude": ("amplitude", float), "amplitudes": ("amplitudes", _floats),
    },
    "grid": {"L": ("L", float), "nX": ("nX", int), "nY": ("nY", int)},
    "solver": {
        "theta": ("theta", float), "tau": ("tau", float), "T": ("T", float),
        "steady_tol": ("steady_tol", _opt_float),
    },
    "reaction": {
        "preset": ("preset", str), "delta_u": ("rds_delta_u", float), "delta_v": ("rds_delta_v", float),
        "alpha": ("rds_alpha", float), "beta": ("rds_beta", float), "gamma": ("rds_gamma", float),
        "xi1": ("rds_xi1", float), "xi2": ("rds_xi2", float),
    },
    "run": {
        "seed": ("seed", int), "out": ("out", str), "render": ("render", _bool),
        "colormap": ("colormap", str), "jobs": ("jobs", int),
    },
    "experiment": {
        "delta_from": ("delta_from", float), "delta_to": ("delta_to", float), "delta_step": ("delta_step", float),
        "name": ("name", str), "paper_scale": ("paper_scale", _bool), "patterns": ("patterns", _strs),
        "kind": ("kind", str), "axis": ("axis", str), "forcing": ("forcing", str),
        "nxs": ("nxs", _ints), "taus": ("taus", _floats), "zoom": ("zoom", _floats),
    },
}

ATTR_CONVERTERS = {attr: conv for sec in SCHEMA.values() for attr, conv in sec.values()}


@dataclass
class RunConfig:
    command: str = "rds"
    # surface
    method: str = "M"
    M: int = 5
    N: int = 5
    beta: float = 0.0
    kappa: float = 5.0
    F: list = field(default_factory=lambda: [1.0, 1.0])
    J: int = 15
    q: str = "identity"
    amplitude: float = 0.0
    amplitudes: list = field(default_factory=lambda: [0.1, 0.5, 1.0])
    # grid
    L: float = 1.0
    nX: int = 90
    nY: int | None = None
    # solver
    theta: float = 1.0
    tau: float = 0.5
    T: float = 800.0
    steady_tol: float | None = None
    # reaction
    preset: str = "spots"
    rds_delta_u: float | None = None
    rds_delta_v: float | None = None
    rds_alpha: float | None = None
    rds_beta: float | None = None
    rds_gamma: float | None = None
    rds_xi1: float | None = None
    rds_xi2: float | None = None
    # run
    seed: int = 0
    out: str | None = None
    render: bool = False
    colormap: str = "viridis"
    jobs: int = 1
    # experiment
    delta_from: float = 0.0
    delta_to: float = 0.1
    delta_step: float = 0.01
    name: str | None = None
    paper_scale: bool = False
    patterns: list = field(default_factory=lambda: ["spots", "stripes"])
    kind: str = "heat"
    axis: str = "space"
    forcing: str = "analytic"
    nxs: list | None = None
    taus: list | None = None
    zoom: list | None = None  # x0, x1, y0, y1 for the sweep 3-D exports
    given: set = field(default_factory=set, repr=False)  # attributes set by file or flags

    @property
    def ny(self):
        return self.nY if self.nY is not None else self.nX

    def rds_params(self):
        base = RdsParams.preset(self.preset)
        over = {k[4:]: getattr(self, k) for k in (f.name for f in fields(self)) if k.startswith("rds_")}
        over = {k: v for k, v in over.items() if v is not None}
        if not over:
            return base
        from dataclasses import replace

        return replace(base, **over)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "given"}


# Per-command defaults applied before the file and the flags.
COMMAND_DEFAULTS = {
    "gen-surface": dict(amplitude=0.1, nX=90),
    "eig-maps": dict(M=1, N=1, amplitude=0.1, nX=90),
    "heat": dict(M=1, N=1, nX=41, tau=1e-3, T=1.0, theta=1.0),
    "rds": dict(nX=90, tau=0.5, T=800.0),
    "continue": dict(nX=45, tau=0.5, T=800.0),
    "sweep": dict(amplitudes=[0.05, 0.1]),
    "animal": dict(),
    "converge": dict(M=1, N=1, amplitude=1e-2),
}


def _convert(attr, raw, where):
    conv = ATTR_CONVERTERS[attr]
    try:
        return conv(raw)
    except (TypeError, ValueError):
        name = getattr(conv, "__name__", "value").lstrip("_")
        raise ConfigError(f"{where}: cannot parse {raw!r} as {name}") from None


def read_config_file(path):
    """Return {attribute: value} from a config file, rejecting unknown keys."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    cp = configparser.ConfigParser(interpolation=None, default_section="\0none")
    cp.optionxform = str
    try:
        cp.read_string("[\0top]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    out = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            if section == "\0top":
                owners = [s for s, keys in SCHEMA.items() if key in keys]
                if not owners:
                    raise ConfigError(f"unknown config key {key!r}")
                if len(owners) > 1:
                    raise ConfigError(f"config key {key!r} is ambiguous; put it under one of {owners}")
                sec = owners[0]
            else:
                if section not in SCHEMA:
                    raise ConfigError(f"unknown config section [{section}]")
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown config key {key!r} in section [{section}]")
                sec = section
            attr = SCHEMA[sec][key][0]
            out[attr] = _convert(attr, raw, f"field {key!r}")
    return out


def validate(cfg):
    """Check every precondition that can be checked before computing."""
    from .experiments import SurfaceConfig
    from .fdm import build_grid

    def need(cond, name, msg):
        if not cond:
            raise ConfigError(f"field {name!r}: {msg}")

    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown subcommand {cfg.command!r}")
    need(cfg.nX >= 3, "nX", f"nX must be >= 3, got {cfg.nX}")
    need(cfg.ny >= 3, "nY", f"nY must be >= 3, got {cfg.ny}")
    need(cfg.L > 0, "L", f"must be > 0, got {cfg.L}")
    need(cfg.tau > 0, "tau", f"must be > 0, got {cfg.tau}")
    need(cfg.T >= 0, "T", f"must be >= 0, got {cfg.T}")
    need(0.0 <= cfg.theta <= 1.0, "theta", f"must lie in [0, 1], got {cfg.theta}")
    need(cfg.method.upper() in ("M", "S"), "method", f"must be M or S, got {cfg.method!r}")
    need(cfg.amplitude >= 0, "amplitude", f"must be >= 0, got {cfg.amplitude}")
    need(all(a >= 0 for a in cfg.amplitudes), "amplitudes", "must all be >= 0")
    need(cfg.M >= 0 and cfg.N >= 0, "M", "M and N must be >= 0")
    need(len(cfg.F) == 2, "F", f"needs two diagonal entries, got {cfg.F}")
    need(cfg.jobs >= 1, "jobs", f"must be >= 1, got {cfg.jobs}")
    need(cfg.preset in PRESETS, "preset", f"must be one of {sorted(PRESETS)}, got {cfg.preset!r}")
    need(cfg.delta_step > 0, "delta_step", f"must be > 0, got {cfg.delta_step}")
    need(cfg.delta_to >= cfg.delta_from, "delta_to", "must be >= delta_from")
    need(cfg.kind in ("heat", "rds"), "kind", f"must be heat or rds, got {cfg.kind!r}")
    need(cfg.axis in ("space", "time"), "axis", f"must be space or time, got {cfg.axis!r}")
    need(cfg.forcing in ("analytic", "discrete"), "forcing", f"must be analytic or discrete, got {cfg.forcing!r}")
    need(all(p in PRESETS for p in cfg.patterns), "patterns", f"entries must be in {sorted(PRESETS)}")
    need(cfg.zoom is None or (len(cfg.zoom) == 4 and cfg.zoom[0] < cfg.zoom[1] and cfg.zoom[2] < cfg.zoom[3]),
         "zoom", "needs x0,x1,y0,y1 with x0 < x1 and y0 < y1")
    need(cfg.steady_tol is None or cfg.steady_tol > 0, "steady_tol", "must be > 0 or none")
    if cfg.command == "animal":
        from .experiments import ANIMAL_REACTION

        need(cfg.name in ANIMAL_REACTION, "name", f"must be one of {sorted(ANIMAL_REACTION)}, got {cfg.name!r}")
    try:
        cfg.rds_params()
        sc = SurfaceConfig(cfg.method.upper(), cfg.M, cfg.N, cfg.beta, cfg.kappa, tuple(cfg.F), cfg.J, cfg.q,
                           cfg.amplitude, cfg.seed)
        if sc.method == "S" and cfg.command not in ("animal", "sweep", "converge"):
            from .filtering import FilterSpec

            FilterSpec(sc.kappa, sc.F, sc.J, sc.amplitude, sc.seed, sc.q).check_stability(
                build_grid(cfg.L, cfg.nX, cfg.ny))
    except ConfigError:
        raise
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def parse_config(command, path=None, overrides=None):
    """Build a validated RunConfig: command defaults, then the file, then
    ``overrides`` (attribute -> value, None meaning "not given")."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown subcommand {command!r}")
    cfg = RunConfig(command=command)
    values = dict(COMMAND_DEFAULTS[command])
    given = set()
    if path is not None:
        from_file = read_config_file(path)
        values.update(from_file)
        given.update(from_file)
    for attr, v in (overrides or {}).items():
        if v is None:
            continue
        if attr not in ATTR_CONVERTERS:
            raise ConfigError(f"unknown config key {attr!r}")
        values[attr] = _convert(attr, v, f"flag for {attr!r}")
        given.add(attr)
    for attr, v in values.items():
        setattr(cfg, attr, v)
    cfg.method = cfg.method.upper()
    cfg.given = given
    return validate(cfg)
