"""Scenario configuration: INI files with comments, parsed into dataclasses.

The format is deliberately plain key-value sections, e.g.::

    [scenario]
    kind = prepare          ; prepare|protect|scan|leakage|decompose-check|depth-theory
    cutoff = 40
    output = out/prepare_cps

    [state]
    family = cps            ; sqvac|cps|tss|cat|sqcat
    squeezing_db = 5.0
    eta = 0.3

    [protocol]
    scheme = sbs            ; st|bsb|sbs
    gamma_hz = 1.0e7
    dt_grid_ns = 10, 30, 50, 70, 90, 110, 130
    n_max = 20

    [noise]
    photon_loss_hz = 5.0e3
    qubit_t1_us = 100.0
    qubit_t2_us = 100.0

Units are SI (Hz, seconds scaled as the key names say) plus dB for squeezing
and trisqueezing levels; conversion to the dimensionless parameters happens
here and only here.  Validation errors carry the config file line number.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field, asdict

import numpy as np

from . import states
from .errors import ConfigError
from .states import NullifierSpec

KINDS = ("prepare", "protect", "scan", "leakage", "decompose-check", "depth-theory")
SCHEMES = ("st", "bsb", "sbs")
STRATEGIES = ("no-qec", "single-qec", "interleaved-qec", "all")
STORAGE_ERRORS = ("dephasing", "photon-loss")


class _Source:
    """Raw config text with line lookup for precise error messages."""

    def __init__(self, text: str, path: str):
        self.text = text
        self.path = path
        self.lines = text.splitlines()

    def line_of(self, section: str, key: str | None = None) -> int | None:
        in_section = False
        for i, line in enumerate(self.lines, start=1):
            stripped = line.strip()
            if stripped.startswith("[") and stripped.endswith("]"):
                if in_section and key is not None:
                    return None
                in_section = stripped[1:-1].strip() == section
                if in_section and key is None:
                    return i
            elif in_section and key is not None:
                name = stripped.split("=", 1)[0].split(":", 1)[0].strip()
                if name == key:
                    return i
        return None

    def error(self, section: str, key: str | None, message: str) -> ConfigError:
        line = self.line_of(section, key)
        where = f"{self.path}:{line}" if line else self.path
        target = f"[{section}]" + (f" {key}" if key else "")
        return ConfigError(f"{where}: {target}: {message}")


class _Section:
    def __init__(self, source: _Source, parser: configparser.ConfigParser, name: str):
        self.source = source
        self.name = name
        self.raw = dict(parser[name]) if parser.has_section(name) else {}
        self.seen: set[str] = set()

    def _get(self, key, required, default):
        self.seen.add(key)
        if key in self.raw:
            return self.raw[key]
        if required:
            raise self.source.error(self.name, None, f"missing required key {key!r}")
        return default

    def get_str(self, key, choices=None, required=False, default=None):
        value = self._get(key, required, default)
        if value is None:
            return None
        value = str(value).strip()
        if choices and value not in choices:
            raise self.source.error(self.name, key,
                                    f"{value!r} not one of {sorted(choices)}")
        return value

    def get_float(self, key, required=False, default=None, minimum=None):
        value = self._get(key, required, default)
        if value is None:
            return None
        try:
            out = float(value)
        except (TypeError, ValueError):
            raise self.source.error(self.name, key, f"not a number: {value!r}") from None
        if minimum is not None and out < minimum:
            raise self.source.error(self.name, key, f"must be >= {minimum}, got {out}")
        return out

    def get_int(self, key, required=False, default=None, minimum=None):
        value = self.get_float(key, required, default, minimum)
        if value is None:
            return None
        if value != int(value):
            raise self.source.error(self.name, key, f"must be an integer, got {value}")
        return int(value)

    def get_bool(self, key, default=False):
        value = self._get(key, False, None)
        if value is None:
            return default
        text = str(value).strip().lower()
        if text in ("true", "yes", "1", "on"):
            return True
        if text in ("false", "no", "0", "off"):
            return False
        raise self.source.error(self.name, key, f"not a boolean: {value!r}")

    def get_float_list(self, key, required=False, default=()):
        value = self._get(key, required, None)
        if value is None:
            return tuple(default)
        items = [v.strip() for v in str(value).split(",") if v.strip()]
        if not items:
            raise self.source.error(self.name, key, "empty list")
        try:
            return tuple(float(v) for v in items)
        except ValueError:
            raise self.source.error(self.name, key, f"not numbers: {value!r}") from None

    def get_str_list(self, key, choices=None, required=False, default=()):
        value = self._get(key, required, None)
        if value is None:
            return tuple(default)
        items = tuple(v.strip() for v in str(value).split(",") if v.strip())
        if choices:
            for item in items:
                if item not in choices:
                    raise self.source.error(self.name, key,
                                            f"{item!r} not one of {sorted(choices)}")
        return items

    def reject_unknown(self):
        unknown = set(self.raw) - self.seen
        if unknown:
            key = sorted(unknown)[0]
            raise self.source.error(self.name, key, "unknown key")


@dataclass(frozen=True)
class StateParams:
    family: str
    squeezing_db: float = 0.0
    eta: float = 0.0
    trisqueezing_db: float = 0.0
    alpha_re: float = 0.0
    alpha_im: float = 0.0
    sign: int = +1

    def to_spec(self) -> NullifierSpec:
        r = states.db_to_r(self.squeezing_db)
        if self.family == "sqvac":
            return states.sqvac(r)
        if self.family == "cps":
            return states.cps(r, self.eta)
        if self.family == "tss":
            return states.tss(states.db_to_r(self.trisqueezing_db))
        alpha = complex(self.alpha_re, self.alpha_im)
        if self.family == "cat":
            return states.cat(alpha, self.sign)
        return states.sqcat(alpha, r, self.sign)


@dataclass(frozen=True)
class ProtocolParams:
    scheme: str
    gamma_hz: float
    dt_grid_ns: tuple[float, ...]
    n_max: int

    @property
    def dt_grid_s(self) -> tuple[float, ...]:
        return tuple(v * 1e-9 for v in self.dt_grid_ns)


@dataclass(frozen=True)
class NoiseParams:
    photon_loss_hz: float = 0.0
    dephasing_hz: float = 0.0
    qubit_t1_us: float = np.inf
    qubit_t2_us: float = np.inf

    def to_model(self):
        from .lindblad import NoiseModel
        return NoiseModel(self.photon_loss_hz, self.dephasing_hz,
                          self.qubit_t1_us * 1e-6, self.qubit_t2_us * 1e-6)


@dataclass(frozen=True)
class ProtectParams:
    strategy: str = "all"
    horizon_us: float = 200.0
    round_interval_us: float = 10.0
    round_depth: int = 1
    round_dt_ns: float = 10.0
    storage_error: str = "dephasing"
    storage_rate_hz: float = 5e3
    include_noisy_qec: bool = True
    readout_every: int = 1


@dataclass(frozen=True)
class LeakageParams:
    gamma_dt: float = 0.13
    eps_grid: tuple[float, ...] = (0.0, 0.002, 0.005, 0.01, 0.02)
    schemes: tuple[str, ...] = ("st", "bsb", "sbs")
    alpha_grid: tuple[float, ...] = ()
    r_grid: tuple[float, ...] = ()


@dataclass(frozen=True)
class ScanParams:
    families: tuple[str, ...] = ("cps", "tss", "cat", "sqcat")
    schemes: tuple[str, ...] = ("st", "bsb", "sbs")
    suppress_storage_us: float = 200.0
    suppress_rate_hz: float = 5e3


@dataclass(frozen=True)
class DepthTheoryParams:
    epsilon: float = 0.0975
    levels_db: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0, 5.0)


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    cutoff: int
    output: str
    state: StateParams
    protocol: ProtocolParams
    noise: NoiseParams = NoiseParams()
    protect: ProtectParams = ProtectParams()
    leakage: LeakageParams = LeakageParams()
    scan: ScanParams = ScanParams()
    depth_theory: DepthTheoryParams = DepthTheoryParams()
    extra_states: dict = field(default_factory=dict)


_FAMILY_KEYS = {
    "sqvac": {"squeezing_db"},
    "cps": {"squeezing_db", "eta"},
    "tss": {"trisqueezing_db"},
    "cat": {"alpha_re", "alpha_im", "sign"},
    "sqcat": {"alpha_re", "alpha_im", "squeezing_db", "sign"},
}


def _parse_state_section(sec: _Section) -> StateParams:
    family = sec.get_str("family", choices=states.FAMILIES, required=True)
    params = StateParams(
        family=family,
        squeezing_db=sec.get_float("squeezing_db", default=0.0),
        eta=sec.get_float("eta", default=0.0),
        trisqueezing_db=sec.get_float("trisqueezing_db", default=0.0),
        alpha_re=sec.get_float("alpha_re", default=0.0),
        alpha_im=sec.get_float("alpha_im", default=0.0),
        sign=sec.get_int("sign", default=+1),
    )
    if params.sign not in (+1, -1):
        raise sec.source.error(sec.name, "sign", "must be +1 or -1")
    used = _FAMILY_KEYS[family]
    for key in ("squeezing_db", "eta", "trisqueezing_db", "alpha_re",
                "alpha_im"):
        if key not in used and getattr(params, key) != 0.0:
            raise sec.source.error(
                sec.name, key, f"not used by family {family!r}")
    sec.reject_unknown()
    try:
        params.to_spec()
    except ValueError as exc:
        raise sec.source.error(sec.name, None, str(exc)) from None
    return params


def parse_config_text(text: str, path: str = "<config>") -> ScenarioConfig:
    source = _Source(text, path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    if not parser.has_section("scenario"):
        raise ConfigError(f"{path}: missing [scenario] section")
    scen = _Section(source, parser, "scenario")
    kind = scen.get_str("kind", choices=KINDS, required=True)
    cutoff = scen.get_int("cutoff", required=True, minimum=4)
    output = scen.get_str("output", required=True)
    scen.reject_unknown()

    if not parser.has_section("state"):
        raise ConfigError(f"{path}: missing [state] section")
    state = _parse_state_section(_Section(source, parser, "state"))

    proto = _Section(source, parser, "protocol")
    protocol = ProtocolParams(
        scheme=proto.get_str("scheme", choices=SCHEMES, default="sbs"),
        gamma_hz=proto.get_float("gamma_hz", default=1.0e7, minimum=0.0),
        dt_grid_ns=proto.get_float_list("dt_grid_ns", default=(50.0,)),
        n_max=proto.get_int("n_max", default=20, minimum=1),
    )
    if parser.has_section("protocol"):
        proto.reject_unknown()
    if not protocol.dt_grid_ns:
        raise source.error("protocol", "dt_grid_ns", "grid must be nonempty")

    noise_sec = _Section(source, parser, "noise")
    noise = NoiseParams(
        photon_loss_hz=noise_sec.get_float("photon_loss_hz", default=0.0, minimum=0.0),
        dephasing_hz=noise_sec.get_float("dephasing_hz", default=0.0, minimum=0.0),
        qubit_t1_us=noise_sec.get_float("qubit_t1_us", default=np.inf),
        qubit_t2_us=noise_sec.get_float("qubit_t2_us", default=np.inf),
    )
    if parser.has_section("noise"):
        noise_sec.reject_unknown()
    try:
        noise.to_model()
    except ValueError as exc:
        raise source.error("noise", None, str(exc)) from None

    prot_sec = _Section(source, parser, "protect")
    protect = ProtectParams(
        strategy=prot_sec.get_str("strategy", choices=STRATEGIES, default="all"),
        horizon_us=prot_sec.get_float("horizon_us", default=200.0, minimum=0.0),
        round_interval_us=prot_sec.get_float("round_interval_us", default=10.0,
                                             minimum=1e-9),
        round_depth=prot_sec.get_int("round_depth", default=1, minimum=1),
        round_dt_ns=prot_sec.get_float("round_dt_ns", default=10.0, minimum=0.0),
        storage_error=prot_sec.get_str("storage_error", choices=STORAGE_ERRORS,
                                       default="dephasing"),
        storage_rate_hz=prot_sec.get_float("storage_rate_hz", default=5e3, minimum=0.0),
        include_noisy_qec=prot_sec.get_bool("include_noisy_qec", default=True),
        readout_every=prot_sec.get_int("readout_every", default=1, minimum=1),
    )
    if parser.has_section("protect"):
        prot_sec.reject_unknown()
    rounds = protect.horizon_us / protect.round_interval_us
    if kind == "protect" and abs(rounds - round(rounds)) > 1e-9:
        raise source.error("protect", "horizon_us",
                           "horizon must be divisible by round_interval")

    leak_sec = _Section(source, parser, "leakage")
    leakage = LeakageParams(
        gamma_dt=leak_sec.get_float("gamma_dt", default=0.13, minimum=0.0),
        eps_grid=leak_sec.get_float_list("eps_grid",
                                         default=(0.0, 0.002, 0.005, 0.01, 0.02)),
        schemes=leak_sec.get_str_list("schemes", choices=SCHEMES,
                                      default=("st", "bsb", "sbs")),
        alpha_grid=leak_sec.get_float_list("alpha_grid", default=()),
        r_grid=leak_sec.get_float_list("r_grid", default=()),
    )
    if parser.has_section("leakage"):
        leak_sec.reject_unknown()

    scan_sec = _Section(source, parser, "scan")
    scan = ScanParams(
        families=scan_sec.get_str_list("families", choices=states.FAMILIES,
                                       default=("cps", "tss", "cat", "sqcat")),
        schemes=scan_sec.get_str_list("schemes", choices=SCHEMES,
                                      default=("st", "bsb", "sbs")),
        suppress_storage_us=scan_sec.get_float("suppress_storage_us", default=200.0,
                                               minimum=0.0),
        suppress_rate_hz=scan_sec.get_float("suppress_rate_hz", default=5e3,
                                            minimum=0.0),
    )
    if parser.has_section("scan"):
        scan_sec.reject_unknown()

    depth_sec = _Section(source, parser, "depth-theory")
    depth_theory = DepthTheoryParams(
        epsilon=depth_sec.get_float("epsilon", default=0.0975, minimum=1e-12),
        levels_db=depth_sec.get_float_list("levels_db",
                                           default=(1.0, 2.0, 3.0, 4.0, 5.0)),
    )
    if parser.has_section("depth-theory"):
        depth_sec.reject_unknown()

    extra_states = {}
    for name in parser.sections():
        if name.startswith("state."):
            family = name.split(".", 1)[1]
            sec = _Section(source, parser, name)
            sec.name = name
            extra_states[family] = _parse_state_section(sec)

    known = {"scenario", "state", "protocol", "noise", "protect", "leakage",
             "scan", "depth-theory"}
    for name in parser.sections():
        if name not in known and not name.startswith("state."):
            raise source.error(name, None, "unknown section")

    return ScenarioConfig(kind, cutoff, output, state, protocol, noise,
                          protect, leakage, scan, depth_theory, extra_states)


def parse_config(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, path)


def _fmt(value) -> str:
    if isinstance(value, float):
        if np.isinf(value):
            return "inf"
        return format(value, ".17g")
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical INI serialization; parse(serialize(parse(x))) is identity."""
    out = io.StringIO()

    def section(name, pairs):
        out.write(f"[{name}]\n")
        for key, value in pairs:
            out.write(f"{key} = {value}\n")
        out.write("\n")

    section("scenario", [("kind", cfg.kind), ("cutoff", cfg.cutoff),
                         ("output", cfg.output)])

    def state_pairs(sp: StateParams):
        return [("family", sp.family),
                ("squeezing_db", _fmt(sp.squeezing_db)),
                ("eta", _fmt(sp.eta)),
                ("trisqueezing_db", _fmt(sp.trisqueezing_db)),
                ("alpha_re", _fmt(sp.alpha_re)),
                ("alpha_im", _fmt(sp.alpha_im)),
                ("sign", sp.sign)]

    section("state", state_pairs(cfg.state))
    section("protocol", [
        ("scheme", cfg.protocol.scheme),
        ("gamma_hz", _fmt(cfg.protocol.gamma_hz)),
        ("dt_grid_ns", ", ".join(_fmt(v) for v in cfg.protocol.dt_grid_ns)),
        ("n_max", cfg.protocol.n_max)])
    section("noise", [
        ("photon_loss_hz", _fmt(cfg.noise.photon_loss_hz)),
        ("dephasing_hz", _fmt(cfg.noise.dephasing_hz)),
        ("qubit_t1_us", _fmt(cfg.noise.qubit_t1_us)),
        ("qubit_t2_us", _fmt(cfg.noise.qubit_t2_us))])
    section("protect", [
        ("strategy", cfg.protect.strategy),
        ("horizon_us", _fmt(cfg.protect.horizon_us)),
        ("round_interval_us", _fmt(cfg.protect.round_interval_us)),
        ("round_depth", cfg.protect.round_depth),
        ("round_dt_ns", _fmt(cfg.protect.round_dt_ns)),
        ("storage_error", cfg.protect.storage_error),
        ("storage_rate_hz", _fmt(cfg.protect.storage_rate_hz)),
        ("include_noisy_qec", _fmt(cfg.protect.include_noisy_qec)),
        ("readout_every", cfg.protect.readout_every)])
    section("leakage", [
        ("gamma_dt", _fmt(cfg.leakage.gamma_dt)),
        ("eps_grid", ", ".join(_fmt(v) for v in cfg.leakage.eps_grid)),
        ("schemes", ", ".join(cfg.leakage.schemes)),
        *([("alpha_grid", ", ".join(_fmt(v) for v in cfg.leakage.alpha_grid))]
          if cfg.leakage.alpha_grid else []),
        *([("r_grid", ", ".join(_fmt(v) for v in cfg.leakage.r_grid))]
          if cfg.leakage.r_grid else [])])
    section("scan", [
        ("families", ", ".join(cfg.scan.families)),
        ("schemes", ", ".join(cfg.scan.schemes)),
        ("suppress_storage_us", _fmt(cfg.scan.suppress_storage_us)),
        ("suppress_rate_hz", _fmt(cfg.scan.suppress_rate_hz))])
    section("depth-theory", [
        ("epsilon", _fmt(cfg.depth_theory.epsilon)),
        ("levels_db", ", ".join(_fmt(v) for v in cfg.depth_theory.levels_db))])
    for family in sorted(cfg.extra_states):
        section(f"state.{family}", state_pairs(cfg.extra_states[family]))
    return out.getvalue()


def config_hash(cfg: ScenarioConfig) -> str:
    digest = hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()
    return digest[:12]


def config_as_dict(cfg: ScenarioConfig) -> dict:
    return asdict(cfg)
