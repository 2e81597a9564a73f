"""Run configuration: flat key-value files, typed validation, presets.

Config files are plain text, one `key = value` per line, `#` comments.
Defaults reproduce the shipped SAC hyperparameters; presets cover the
built-in pendulum task, bridge training, and the standard shape axes
(layer width, LUT arity, input bits).
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from importlib import resources

from .errors import ConfigError

RECORD_FORMAT_VERSION = 1


@dataclass
class RunConfig:
    # environment / experiment
    env: str = "pendulum"
    seed: int = 1
    algorithm: str = "sac"   # schema reserves the field; only sac is implemented
    policy: str = "lut"      # lut | mlp (floating-point baseline actor)
    total_steps: int = 1_000_000
    eval_every: int = 5_000
    eval_episodes: int = 10
    out_dir: str = "runs"
    # policy shape
    n_layers: int = 2
    width: int = 1024
    arity: int = 6
    bits: int = 63
    trainable_interconnect: str = "true"  # "true"/"false" or per-layer list "true,false"
    alpha_p_init: float = -3.0
    beta_init: float = 0.0
    gradient_backend: str = "exact"
    # SAC hyperparameters
    buffer_size: int = 1_000_000
    gamma: float = 0.99
    tau: float = 0.005
    batch_size: int = 256
    learning_starts: int = 5_000
    policy_lr: float = 3e-4
    q_lr: float = 1e-3
    policy_frequency: int = 2
    target_network_frequency: int = 1
    autotune: bool = True
    alpha: float = 0.2       # entropy coefficient when autotune is off
    # compile-time quantization
    adc_scale: str = "0.0009765625"  # raw int -> real factor; scalar or per-dim list
    out_quant_bits: int = 15

    def interconnect_flags(self) -> list:
        flags = [f.strip().lower() for f in self.trainable_interconnect.split(",")]
        for f in flags:
            if f not in ("true", "false"):
                raise ConfigError("trainable_interconnect: entries must be true/false")
        flags = [f == "true" for f in flags]
        if len(flags) == 1:
            return flags * self.n_layers
        if len(flags) != self.n_layers:
            raise ConfigError("trainable_interconnect: need one flag or one per layer")
        return flags

    def adc_scales(self, d_in: int) -> list:
        try:
            scales = [float(s) for s in self.adc_scale.split(",")]
        except ValueError:
            raise ConfigError("adc_scale: must be a float or comma-separated floats")
        if len(scales) == 1:
            scales = scales * d_in
        if len(scales) != d_in:
            raise ConfigError(f"adc_scale: need 1 or {d_in} entries, got {len(scales)}")
        if any(s <= 0 for s in scales):
            raise ConfigError("adc_scale: scales must be positive")
        return scales

    def validate(self) -> None:
        if self.algorithm != "sac":
            raise ConfigError(f"algorithm: only 'sac' is implemented, got {self.algorithm!r}")
        if self.policy not in ("lut", "mlp"):
            raise ConfigError(f"policy: must be 'lut' or 'mlp', got {self.policy!r}")
        if self.total_steps < 0:
            raise ConfigError("total_steps: must be >= 0")
        if self.n_layers < 1:
            raise ConfigError("n_layers: must be >= 1")
        if not 2 <= self.arity <= 6:
            raise ConfigError(f"arity: must lie in [2, 6], got {self.arity}")
        if self.bits % 2 == 0 or self.bits < 3:
            raise ConfigError(f"bits: must be odd and >= 3, got {self.bits}")
        if self.width < 1:
            raise ConfigError("width: must be >= 1")
        if self.gradient_backend not in ("exact", "efd"):
            raise ConfigError(f"gradient_backend: must be exact or efd, got {self.gradient_backend!r}")
        if not 0 < self.tau <= 1:
            raise ConfigError("tau: must lie in (0, 1]")
        if not 0 <= self.gamma <= 1:
            raise ConfigError("gamma: must lie in [0, 1]")
        if self.batch_size < 1:
            raise ConfigError("batch_size: must be >= 1")
        if self.eval_every < 1:
            raise ConfigError("eval_every: must be >= 1")
        if self.eval_episodes < 1:
            raise ConfigError("eval_episodes: must be >= 1")
        if self.out_quant_bits < 1 or self.out_quant_bits > 15:
            raise ConfigError("out_quant_bits: must lie in [1, 15]")
        self.interconnect_flags()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_REQUIRED_KEYS = ("env", "seed", "total_steps")


def _coerce(key: str, raw: str):
    target = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if target == "int":
            return int(raw)
        if target == "float":
            return float(raw)
        if target == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {target}")


def parse_config_text(text: str, require: bool = True) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{key}: unknown configuration key")
        if key in values:
            raise ConfigError(f"{key}: duplicate key")
        values[key] = _coerce(key, raw)
    if require:
        for key in _REQUIRED_KEYS:
            if key not in values:
                raise ConfigError(f"{key}: required key is missing")
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def preset_names() -> list:
    files = resources.files("lutpolicy").joinpath("presets")
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".cfg"))


def load_preset(name: str) -> RunConfig:
    path = resources.files("lutpolicy").joinpath("presets", f"{name}.cfg")
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return parse_config_text(path.read_text(encoding="utf-8"))


def resolve_config(name_or_path: str) -> RunConfig:
    """Treat the argument as a shipped preset name first, then as a file path."""
    candidates = preset_names()
    if name_or_path in candidates:
        return load_preset(name_or_path)
    return load_config(name_or_path)


@dataclass
class RunRecord:
    """Self-describing experiment output, serialized as JSON."""

    config: dict
    curve: list = field(default_factory=list)  # {"step", "mean", "std"}
    final_eval: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0
    format_version: int = RECORD_FORMAT_VERSION

    def add_checkpoint(self, step: int, mean: float, std: float) -> None:
        self.curve.append({"step": int(step), "mean": float(mean), "std": float(std)})

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "RunRecord":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        version = data.get("format_version")
        if version != RECORD_FORMAT_VERSION:
            raise ConfigError(f"run record format version {version} unsupported")
        return cls(config=data["config"], curve=data["curve"],
                   final_eval=data["final_eval"], wall_clock_s=data["wall_clock_s"],
                   format_version=version)


class Stopwatch:
    def __init__(self):
        self.start = time.monotonic()

    def elapsed(self) -> float:
        return time.monotonic() - self.start
