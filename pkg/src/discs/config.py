"""Run configuration and the line-oriented ``key = value`` config format.

Recognised keys are the field names of :class:`RunConfig`. Tuples are
written comma-separated (``q_hidden = 256, 256, 64``); ``#`` starts a comment.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

from .baselines import MethodMode
from .discriminator import LOG_DENSITY_FLOOR, RECENT_WINDOW, DiscUpdateVariant
from .hipps import HippsConfig, PreferenceSource


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    method: str = "discs"
    m: int = 2
    env: str = "nowall"
    seed: int = 0
    total_timesteps: int = 3_000_000

    batch_size: int = 1024
    disc_batch_size: int = 16384
    buffer_size: int = 2_000_000
    gamma: float = 0.99
    alpha: float = 0.1
    tau: float = 0.005
    lr: float = 3e-4
    q_hidden: tuple = (256, 256, 64)
    policy_hidden: tuple = (256, 256)
    disc_hidden: tuple = (256, 256)
    collect_steps: int = 8
    update_steps: int = 8
    policy_every: int = 8
    target_every: int = 8
    disc_every: int = 50_000
    disc_warmup: int = 50_000
    learning_starts: int = 100

    hipps_k: int = 1
    hipps_source: str = "posterior"
    disc_variant: str = "entire"
    recent_window: int = RECENT_WINDOW
    diayn_skills: int = 10
    log_density_floor: float = LOG_DENSITY_FLOOR

    log_every: int = 5_000
    heatmap_every: int = 50_000
    cell_size: float = 0.5
    checkpoint_every: int = 0

    env_bound: float = 10.0
    env_dt: float = 0.05
    env_f_max: float = 1.0
    env_drag: float = 2.0
    env_v_max: float = 0.4

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        try:
            MethodMode(self.method)
            DiscUpdateVariant(self.disc_variant)
            PreferenceSource(self.hipps_source)
            HippsConfig(self.hipps_k, self.hipps_source)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.env not in ("nowall", "uwall"):
            raise ConfigError(f"env must be nowall or uwall, got {self.env!r}")
        if self.m < 1 or (self.method != "diayn" and self.m < 2):
            raise ConfigError(f"m={self.m} too small for method {self.method}")
        if self.method == "diayn" and self.diayn_skills < 2:
            raise ConfigError("diayn_skills must be >= 2")
        positive = ("batch_size", "disc_batch_size", "buffer_size", "collect_steps", "update_steps",
                    "policy_every", "target_every", "disc_every", "log_every", "heatmap_every", "lr",
                    "recent_window", "cell_size", "env_dt", "env_bound", "env_v_max")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.total_timesteps < 0:
            raise ConfigError("total_timesteps must be nonnegative")
        if self.total_timesteps and self.total_timesteps % self.collect_steps:
            raise ConfigError("total_timesteps must be a multiple of collect_steps")
        if self.log_every % self.collect_steps:
            raise ConfigError("log_every must be a multiple of collect_steps")
        if self.checkpoint_every % self.collect_steps:
            raise ConfigError("checkpoint_every must be a multiple of collect_steps")

    @property
    def hipps(self) -> HippsConfig:
        return HippsConfig(self.hipps_k, self.hipps_source)

    @classmethod
    def desk(cls, **overrides) -> "RunConfig":
        """Laptop-scale preset: narrower networks, smaller batches, faster discriminator cadence."""
        base = dict(q_hidden=(64, 64, 32), policy_hidden=(64, 64), disc_hidden=(64, 64),
                    batch_size=256, disc_batch_size=1024, disc_every=8, disc_warmup=1000,
                    total_timesteps=150_000)
        base.update(overrides)
        return cls(**base)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        kwargs = {}
        known = {f.name: f for f in fields(cls)}
        for key, value in d.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = tuple(value) if isinstance(value, list) else value
        return cls(**kwargs)

    def dumps(self) -> str:
        lines = []
        for key, value in self.to_dict().items():
            if isinstance(value, list):
                value = ", ".join(str(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def _coerce(field: dataclasses.Field, text: str):
    default = field.default
    try:
        if isinstance(default, bool):
            return text.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(float(text)) if "e" in text.lower() else int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(int(p) for p in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"bad value {text!r} for {field.name}") from None
    return text


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse ``key = value`` lines; ``preset = desk`` switches the base to :meth:`RunConfig.desk`."""
    known = {f.name: f for f in fields(RunConfig)}
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "preset":
            if value not in ("full", "desk"):
                raise ConfigError(f"line {lineno}: unknown preset {value!r}")
            base = RunConfig.desk() if value == "desk" else RunConfig()
            continue
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        pairs.append((key, _coerce(known[key], value)))
    values = (base or RunConfig()).to_dict()
    values.update(pairs)
    return RunConfig.from_dict(values)


def load_config(path) -> RunConfig:
    with open(path) as f:
        return parse_config(f.read())
