"""Simulation configuration: defaults, file parsing, and validation.

Config files are plain INI (key = value under a section per module). Every key
has a default so an empty file is a valid configuration. Unknown sections or
keys are rejected rather than ignored; command-line flags override file values.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Raised for unparseable or invalid configuration input."""


def _fractions(text):
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    return tuple(float(p) for p in parts)


@dataclass
class SimConfig:
    # network
    node_count: int = 200
    area_side: float = 500.0
    comm_range: float = 50.0
    sink_count: int = 1

    # energy
    initial_energy: float = 100.0
    e_elec: float = 50e-9
    eps_amp: float = 0.0013e-12
    path_loss_exponent: float = 2.0

    # traffic
    send_rate: float = 5.0
    packet_size: int = 512
    traffic_mix: tuple = (0.15, 0.25, 0.60)
    bit_rate: float = 512_000.0

    # queue
    buffer_capacity: int = 100
    queue_update_interval: float = 1.0
    ell1: float = 0.5
    ell2: float = 0.5
    cap_min_frac: float = 0.1
    cap_max_frac: float = 0.8
    rate_smoothing: float = 0.3

    # hello
    hello_interval: float = 1.0
    expiry_factor: float = 2.5
    hello_size: int = 32
    ack_size: int = 16
    ack_timeout: float = 0.05
    link_delay_smoothing: float = 0.3

    # clustering
    fuzziness: float = 2.0
    max_iter: int = 100
    tol: float = 1e-5
    cluster_interval: float = 50.0
    membership_threshold: float = 0.25
    weight_rate_min: float = 0.05
    weight_rate_max: float = 0.30

    # learning
    alpha: float = 0.9
    gamma: float = 0.5
    epsilon_start: float = 0.9
    epsilon_decay: float = 0.99
    epsilon_min: float = 0.05
    max_hops: int = 32
    warmup_episodes: int = 0

    # mac
    contention_base: float = 0.002
    collision_kappa: float = 0.01
    collision_cap: float = 0.8
    per_bit_error_prob: float = 1e-5
    interference_factor: float = 0.0
    ack_turnaround: float = 0.002
    ack_loss_prob: float = 0.0

    # sim
    sim_duration: float = 5000.0
    rng_seed: int = 1
    metric_interval: float = 1.0

    def validate(self):
        """Check cross-field invariants; raises ConfigError naming the offender."""
        if self.node_count < 2:
            raise ConfigError("node_count must be >= 2")
        if self.sink_count != 1:
            raise ConfigError("sink_count: only a single sink is supported")
        for name in ("area_side", "comm_range", "initial_energy", "send_rate",
                     "bit_rate", "hello_interval", "queue_update_interval"):
            if getattr(self, name) <= 0:
                raise ConfigError("%s must be > 0" % name)
        for name in ("packet_size", "buffer_capacity", "hello_size", "ack_size",
                     "max_iter", "max_hops"):
            if getattr(self, name) <= 0:
                raise ConfigError("%s must be > 0" % name)
        if self.sim_duration < 0:
            raise ConfigError("sim_duration must be >= 0")
        if abs(self.ell1 + self.ell2 - 1.0) > 1e-9:
            raise ConfigError("ell1 + ell2 must equal 1 (got %g + %g)" % (self.ell1, self.ell2))
        if len(self.traffic_mix) != 3:
            raise ConfigError("traffic_mix needs exactly 3 fractions")
        if any(f < 0 for f in self.traffic_mix) or abs(sum(self.traffic_mix) - 1.0) > 1e-9:
            raise ConfigError("traffic_mix fractions must be nonnegative and sum to 1")
        if not 2.0 <= self.path_loss_exponent <= 4.0:
            raise ConfigError("path_loss_exponent must lie in [2, 4]")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must lie in (0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must lie in [0, 1)")
        for name in ("epsilon_start", "epsilon_decay", "epsilon_min", "collision_cap",
                     "per_bit_error_prob", "ack_loss_prob", "membership_threshold",
                     "rate_smoothing", "link_delay_smoothing"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError("%s must lie in [0, 1]" % name)
        if self.fuzziness <= 1.0:
            raise ConfigError("fuzziness must be > 1")
        if not 0.0 < self.cap_min_frac <= self.cap_max_frac <= 1.0:
            raise ConfigError("cap fractions must satisfy 0 < cap_min_frac <= cap_max_frac <= 1")
        if 3 * self.cap_min_frac > 1.0:
            raise ConfigError("cap_min_frac too large: three minimum shares exceed the buffer")
        if not 0.0 <= self.weight_rate_min <= self.weight_rate_max <= 1.0:
            raise ConfigError("weight learning rates must satisfy 0 <= min <= max <= 1")
        if self.interference_factor < 0:
            raise ConfigError("interference_factor must be >= 0")
        if self.tol <= 0:
            raise ConfigError("tol must be > 0")
        return self


# section -> keys; doubles as the unknown-key whitelist.
SECTIONS = {
    "network": ("node_count", "area_side", "comm_range", "sink_count"),
    "energy": ("initial_energy", "e_elec", "eps_amp", "path_loss_exponent"),
    "traffic": ("send_rate", "packet_size", "traffic_mix", "bit_rate"),
    "queue": ("buffer_capacity", "queue_update_interval", "ell1", "ell2",
              "cap_min_frac", "cap_max_frac", "rate_smoothing"),
    "hello": ("hello_interval", "expiry_factor", "hello_size", "ack_size",
              "ack_timeout", "link_delay_smoothing"),
    "clustering": ("fuzziness", "max_iter", "tol", "cluster_interval",
                   "membership_threshold", "weight_rate_min", "weight_rate_max"),
    "learning": ("alpha", "gamma", "epsilon_start", "epsilon_decay", "epsilon_min",
                 "max_hops", "warmup_episodes"),
    "mac": ("contention_base", "collision_kappa", "collision_cap",
            "per_bit_error_prob", "interference_factor", "ack_turnaround",
            "ack_loss_prob"),
    "sim": ("sim_duration", "rng_seed", "metric_interval"),
}

_FIELD_TYPES = {f.name: f.type for f in fields(SimConfig)}
_KEY_SECTION = {key: sec for sec, keys in SECTIONS.items() for key in keys}


def _coerce(key, raw):
    if key == "traffic_mix":
        return _fractions(raw)
    ftype = _FIELD_TYPES[key]
    try:
        if ftype == "int":
            return int(str(raw).strip())
        return float(str(raw).strip())
    except ValueError as exc:
        raise ConfigError("%s: cannot parse %r" % (key, raw)) from exc


def parse_config(path) -> SimConfig:
    """Load a config file, apply defaults for missing keys, validate.

    The ell1/ell2 pair is completed automatically when exactly one of the two
    is given; giving both with a sum other than 1 is a validation error.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError("cannot read config file %s: %s" % (path, exc)) from exc
    except configparser.Error as exc:
        raise ConfigError("config parse failure in %s: %s" % (path, exc)) from exc

    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError("unknown config section [%s]" % section)
        for key, raw in parser.items(section):
            if key not in SECTIONS[section]:
                raise ConfigError("unknown key '%s' in section [%s]" % (key, section))
            values[key] = _coerce(key, raw)
    return build_config(values)


def build_config(values: dict) -> SimConfig:
    """Construct a validated SimConfig from explicit key -> value overrides."""
    unknown = set(values) - set(_KEY_SECTION)
    if unknown:
        raise ConfigError("unknown config keys: %s" % ", ".join(sorted(unknown)))
    values = dict(values)
    if "ell1" in values and "ell2" not in values:
        values["ell2"] = 1.0 - values["ell1"]
    elif "ell2" in values and "ell1" not in values:
        values["ell1"] = 1.0 - values["ell2"]
    cfg = SimConfig(**values)
    cfg.validate()
    return cfg


def config_to_dict(cfg: SimConfig) -> dict:
    """Flat, JSON-friendly snapshot of every parameter."""
    out = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        out[f.name] = list(value) if isinstance(value, tuple) else value
    return out


def config_from_dict(snapshot: dict) -> SimConfig:
    values = dict(snapshot)
    if "traffic_mix" in values:
        values["traffic_mix"] = tuple(values["traffic_mix"])
    cfg = SimConfig(**values)
    cfg.validate()
    return cfg
