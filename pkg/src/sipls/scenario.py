"""Scenario configuration: parameter records, unit conversion and file I/O.

The scenario file is a flat ``key = value`` text file. ``#`` starts a
comment. Physical quantities accept a linear key or a unit-suffixed key:

    ``<name>_w``      watts                 ``<name>_dbm``  dBm
    ``<name>``        linear gain/ratio     ``<name>_dbi``  dBi, ``<name>_db`` dB
    ``cone_half_angle`` radians             ``cone_angle_deg`` full beamwidth, degrees

Supplying both forms of one quantity is an error. Missing keys take the
defaults in :data:`DEFAULTS` (the reference vehicular ISAC setup).
"""
from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConfigError", "ConfigParseError", "ConfigValidationError",
    "RadarParams", "CommParams", "RoadParams", "Thresholds", "ScenarioConfig",
    "LANES", "ROLES",
    "db_to_linear", "linear_to_db", "dbm_to_watts", "watts_to_dbm",
    "effective_aperture", "unit_power_density",
    "default_config", "load_config", "parse_config", "build_config", "dump_config",
    "replace_field", "get_field", "config_hash",
]

ROLES = ("alice", "bob", "eve", "carol")
# lane index per role, y = lane * lane_width
LANES = {"alice": 0, "bob": 0, "eve": 1, "carol": 2}


class ConfigError(ValueError):
    pass


class ConfigParseError(ConfigError):
    pass


class ConfigValidationError(ConfigError):
    def __init__(self, field_name, msg):
        self.field = field_name
        super().__init__(f"{field_name}: {msg}")


# -- unit conversion --------------------------------------------------------

def db_to_linear(x):
    if np.ndim(x):
        return 10.0 ** (np.asarray(x, dtype=float) / 10.0)
    return 10.0 ** (float(x) / 10.0)


def linear_to_db(x):
    if np.ndim(x):
        return 10.0 * np.log10(np.asarray(x, dtype=float))
    return 10.0 * math.log10(x)


def dbm_to_watts(x):
    return db_to_linear(x) * 1e-3


def watts_to_dbm(x):
    return linear_to_db(np.asarray(x, dtype=float) * 1e3 if np.ndim(x) else float(x) * 1e3)


# -- records ----------------------------------------------------------------

@dataclass(frozen=True)
class RadarParams:
    sense_power: float        # W
    tx_gain: float            # linear
    rx_gain: float            # linear
    wavelength: float         # m
    max_range: float          # m
    cone_half_angle: float    # rad
    target_range: float       # m, Alice's sensing target
    rcs_dof: float            # Gamma shape
    rcs_mean: float           # m^2
    target_range_bob: float   # m, self-echo range at Bob
    target_range_eve: float   # m, self-echo range at Eve


@dataclass(frozen=True)
class CommParams:
    tx_power_max: float
    tx_power: float           # nominal operating point for metric evaluation
    path_loss_exp: float
    noise_bob: float
    noise_eve: float
    noise_alice: float
    thresh_bob: float
    thresh_eve: float
    thresh_sense: float
    propagation_speed: float
    opt_path_loss_exp: float  # exponent used by the optimizer channel


@dataclass(frozen=True)
class RoadParams:
    lane_width: float
    min_follow: float
    v_max: float
    a_max: float
    carol_density_m2: float   # areal, plane derivations
    carol_density_m: float    # linear, along the Carol lane
    eve_density: float        # per m^2
    horizon: float
    num_slots: int

    @property
    def dt(self):
        return self.horizon / self.num_slots


@dataclass(frozen=True)
class Thresholds:
    rel_min: float
    sec_max: float
    sen_min: float


@dataclass(frozen=True)
class ScenarioConfig:
    radar: RadarParams
    comm: CommParams
    road: RoadParams
    thresholds: Thresholds
    initial_positions: dict = field(default_factory=dict)   # role -> (x, lane)
    initial_speed: float = 16.0

    def lane_y(self, role):
        return LANES[role] * self.road.lane_width


# canonical (linear) defaults
DEFAULTS = {
    "sense_power": dbm_to_watts(10.0),
    "tx_gain": db_to_linear(45.0),
    "rx_gain": db_to_linear(45.0),
    "wavelength": 0.0039,
    "max_range": 200.0,
    "cone_half_angle": math.radians(30.0),
    "target_range": 10.0,
    "rcs_dof": 2.0,
    "rcs_mean": 1.0,
    "target_range_bob": None,   # -> min_follow
    "target_range_eve": None,
    "tx_power_max": dbm_to_watts(50.0),
    "tx_power": dbm_to_watts(10.0),
    "path_loss_exp": 4.0,
    "noise_bob": dbm_to_watts(-90.0),
    "noise_eve": dbm_to_watts(-90.0),
    "noise_alice": dbm_to_watts(-90.0),
    "thresh_bob": 1.0,
    "thresh_eve": 1.0,
    "thresh_sense": 1e-4,
    "propagation_speed": 2.998e8,
    "opt_path_loss_exp": 2.0,
    "lane_width": 3.6,
    "min_follow": 5.0,
    "v_max": 20.0,
    "a_max": 3.0,
    "carol_density_m2": 1e-3,
    "carol_density_m": 1e-3,
    "eve_density": 1e-4,
    "horizon": 8.0,
    "num_slots": 64,
    "rel_min": 0.0,
    "sec_max": 1.0,
    "sen_min": 0.0,
    "alice_x": 0.0,
    "bob_x": 15.0,
    "eve_x": 9.0,
    "carol_x": 249.0,
    "initial_speed": 16.0,
}

_POWER_KEYS = {"sense_power", "tx_power_max", "tx_power", "noise_bob", "noise_eve", "noise_alice"}
_GAIN_KEYS = {"tx_gain", "rx_gain"}
_RATIO_KEYS = {"thresh_bob", "thresh_eve", "thresh_sense"}
_LANE_KEYS = {f"{r}_lane" for r in ROLES}

_RADAR = [f.name for f in dataclasses.fields(RadarParams)]
_COMM = [f.name for f in dataclasses.fields(CommParams)]
_ROAD = [f.name for f in dataclasses.fields(RoadParams)]
_THRESH = [f.name for f in dataclasses.fields(Thresholds)]


def _canonical_key(key, value):
    """Map a (possibly suffixed) key to (canonical name, linear value)."""
    if key == "cone_angle_deg":
        return "cone_half_angle", math.radians(value) / 2.0
    if key == "carol_density":
        return "carol_density", value
    for base in _POWER_KEYS:
        if key == base + "_w":
            return base, value
        if key == base + "_dbm":
            return base, dbm_to_watts(value)
    for base in _GAIN_KEYS:
        if key == base + "_dbi":
            return base, db_to_linear(value)
    for base in _RATIO_KEYS:
        if key == base + "_db":
            return base, db_to_linear(value)
    if key in DEFAULTS or key in _LANE_KEYS:
        return key, value
    raise ConfigParseError(f"unknown key {key!r}")


def parse_config(text, source="<string>"):
    raw = {}
    seen = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"{source}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key or not val:
            raise ConfigParseError(f"{source}:{lineno}: empty key or value")
        try:
            num = float(val)
        except ValueError:
            raise ConfigParseError(f"{source}:{lineno}: {key}: not a number: {val!r}") from None
        name, lin = _canonical_key(key.lower(), num)
        if name in seen:
            raise ConfigParseError(f"{source}:{lineno}: {name} given twice ({seen[name]}, {key})")
        seen[name] = key
        raw[name] = lin
    if "carol_density" in raw:
        v = raw.pop("carol_density")
        for k in ("carol_density_m2", "carol_density_m"):
            if k in raw:
                raise ConfigParseError(f"{source}: carol_density conflicts with {k}")
            raw[k] = v
    return build_config(raw)


def build_config(values):
    """Build and validate a ScenarioConfig from canonical linear values."""
    v = dict(DEFAULTS)
    v.update(values)
    if v["target_range_bob"] is None:
        v["target_range_bob"] = v["min_follow"]
    if v["target_range_eve"] is None:
        v["target_range_eve"] = v["min_follow"]
    for role in ROLES:
        lane = v.get(f"{role}_lane", LANES[role])
        if lane != LANES[role]:
            raise ConfigValidationError(f"{role}_lane", f"must be {LANES[role]}")
    ns = v["num_slots"]
    if ns != int(ns):
        raise ConfigValidationError("num_slots", "must be an integer")
    v["num_slots"] = int(ns)
    cfg = ScenarioConfig(
        radar=RadarParams(**{k: float(v[k]) for k in _RADAR}),
        comm=CommParams(**{k: float(v[k]) for k in _COMM}),
        road=RoadParams(**{k: (v[k] if k == "num_slots" else float(v[k])) for k in _ROAD}),
        thresholds=Thresholds(**{k: float(v[k]) for k in _THRESH}),
        initial_positions={r: (float(v[f"{r}_x"]), LANES[r]) for r in ROLES},
        initial_speed=float(v["initial_speed"]),
    )
    validate(cfg)
    return cfg


def _check(ok, name, msg):
    if not ok:
        raise ConfigValidationError(name, msg)


def validate(cfg):
    r, c, rd, th = cfg.radar, cfg.comm, cfg.road, cfg.thresholds
    for name in _RADAR:
        val = getattr(r, name)
        _check(math.isfinite(val) and val > 0, name, f"must be positive, got {val}")
    _check(r.cone_half_angle < math.pi / 2, "cone_half_angle", "must be below pi/2")
    _check(r.target_range <= r.max_range, "target_range", "exceeds max_range")
    _check(2.0 <= c.path_loss_exp <= 6.0, "path_loss_exp", "must lie in [2, 6]")
    _check(2.0 <= c.opt_path_loss_exp <= 6.0, "opt_path_loss_exp", "must lie in [2, 6]")
    for name in ("tx_power_max", "tx_power", "noise_bob", "noise_eve", "noise_alice",
                 "thresh_bob", "thresh_eve", "thresh_sense"):
        val = getattr(c, name)
        _check(math.isfinite(val) and val > 0, name, f"must be positive, got {val}")
    _check(c.propagation_speed > rd.v_max, "propagation_speed", "must exceed v_max")
    _check(rd.lane_width > 0, "lane_width", "must be positive")
    _check(rd.min_follow > 0, "min_follow", "must be positive")
    _check(rd.v_max > 0, "v_max", "must be positive")
    _check(rd.a_max > 0, "a_max", "must be positive")
    _check(rd.horizon > 0, "horizon", "must be positive")
    _check(rd.num_slots >= 1, "num_slots", "must be at least 1")
    for name in ("carol_density_m2", "carol_density_m", "eve_density"):
        val = getattr(rd, name)
        _check(math.isfinite(val) and val >= 0, name, "must be nonnegative")
    for name in _THRESH:
        val = getattr(th, name)
        _check(0.0 <= val <= 1.0, name, "must lie in [0, 1]")
    _check(abs(cfg.initial_speed) <= rd.v_max, "initial_speed", "exceeds v_max")
    pos = cfg.initial_positions
    _check(pos["bob"][0] - pos["alice"][0] >= rd.min_follow, "bob_x",
           "Bob must lead Alice by at least min_follow")


def load_config(path):
    if not os.path.isfile(path):
        raise ConfigParseError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def default_config():
    return build_config({})


def _flat(cfg):
    out = {}
    for sec in (cfg.radar, cfg.comm, cfg.road, cfg.thresholds):
        out.update(dataclasses.asdict(sec))
    for role in ROLES:
        out[f"{role}_x"] = cfg.initial_positions[role][0]
    out["initial_speed"] = cfg.initial_speed
    return out


def dump_config(cfg):
    """Emit a scenario file holding the exact linear values of ``cfg``."""
    lines = []
    for key, val in _flat(cfg).items():
        if key in _POWER_KEYS:
            key = key + "_w"
        lines.append(f"{key} = {val!r}")
    return "\n".join(lines) + "\n"


def get_field(cfg, path):
    """Look up a dotted parameter path such as ``comm.noise_bob``."""
    sec, _, name = path.partition(".")
    if sec == "initial_positions":
        return cfg.initial_positions[name][0]
    if not name:
        return getattr(cfg, sec)
    obj = getattr(cfg, sec, None)
    if obj is None or not hasattr(obj, name):
        raise ConfigValidationError(path, "no such parameter")
    return getattr(obj, name)


def replace_field(cfg, path, value):
    """Return a validated copy of ``cfg`` with one parameter replaced."""
    sec, _, name = path.partition(".")
    if sec == "initial_positions":
        if name not in ROLES:
            raise ConfigValidationError(path, "no such parameter")
        pos = dict(cfg.initial_positions)
        pos[name] = (float(value), pos[name][1])
        new = dataclasses.replace(cfg, initial_positions=pos)
    elif sec == "initial_speed" and not name:
        new = dataclasses.replace(cfg, initial_speed=float(value))
    else:
        obj = getattr(cfg, sec, None)
        if obj is None or not dataclasses.is_dataclass(obj) or not hasattr(obj, name):
            raise ConfigValidationError(path, "no such parameter")
        if name == "num_slots":
            value = int(value)
        new = dataclasses.replace(cfg, **{sec: dataclasses.replace(obj, **{name: value})})
    validate(new)
    return new


def config_hash(cfg, *extra):
    import hashlib
    txt = dump_config(cfg) + "".join(f"{x!r};" for x in extra)
    return hashlib.sha256(txt.encode()).hexdigest()[:16]


def effective_aperture(r):
    """A_ea = G_r lambda^2 / (4 pi)."""
    return r.rx_gain * r.wavelength ** 2 / (4.0 * math.pi)


def unit_power_density(r):
    """S = P_sen G_t / (4 pi)."""
    return r.sense_power * r.tx_gain / (4.0 * math.pi)
