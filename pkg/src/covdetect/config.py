"""Experiment configuration: defaults, config files and validation."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .detector import ThresholdPolicy
from .errors import ConfigError, InvalidParameterError
from .sim import dbm_to_mw

DEFAULT_SEED = 20210607
PILOT_SCHEMES = ("designed", "gaussian")


@dataclass(frozen=True)
class ExperimentConfig:
    N: int = 100
    K: int = 5
    L: int = 12
    M: tuple = (8, 16, 32, 64, 128)
    delta: float = 0.5
    tx_power_dbm: float = 25.0
    noise_psd_dbm_hz: float = -169.0
    bandwidth_hz: float = 10e3
    d_min_km: float = 0.005
    d_max_km: float = 0.1
    trials: int = 10_000
    master_seed: int = DEFAULT_SEED
    threshold: ThresholdPolicy = field(default_factory=ThresholdPolicy)
    pilots: str = "designed"
    noise_var: float = 1.0  # simulation units; the physical noise power maps to 1
    out: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "M", tuple(int(m) for m in self.M))
        self.validate()

    @property
    def power(self) -> float:
        """Linear transmit power in noise-normalized units (mW)."""
        return float(dbm_to_mw(self.tx_power_dbm))

    def validate(self) -> None:
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        if not 0 <= self.K <= self.N:
            raise ConfigError(f"need 0 <= K <= N, got K={self.K}, N={self.N}")
        if not self.K < self.L:
            raise ConfigError(
                f"pilot length must exceed the number of active users (L > K), "
                f"got K={self.K}, L={self.L}")
        if self.L > self.N:
            raise ConfigError(f"need L <= N, got L={self.L}, N={self.N}")
        if not self.M or any(m < 1 for m in self.M):
            raise ConfigError(f"antenna counts must be >= 1, got {self.M}")
        if not 0 < self.delta <= 0.5:
            raise ConfigError(f"delta must lie in (0, 1/2], got {self.delta}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not 0 < self.d_min_km <= self.d_max_km:
            raise ConfigError(f"need 0 < dmin <= dmax, got {self.d_min_km}, {self.d_max_km}")
        if self.bandwidth_hz <= 0:
            raise ConfigError("bandwidth must be positive")
        if self.noise_var < 0:
            raise ConfigError("noise variance must be non-negative")
        if self.pilots not in PILOT_SCHEMES:
            raise ConfigError(f"pilots must be one of {PILOT_SCHEMES}, got {self.pilots!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# flag / file key -> (field name, converter)
def _int_list(value):
    if isinstance(value, (list, tuple)):
        items = []
        for v in value:
            items.extend(_int_list(v))
        return tuple(items)
    return tuple(int(v) for v in str(value).replace(",", " ").split())


def _policy(value):
    if isinstance(value, ThresholdPolicy):
        return value
    try:
        return ThresholdPolicy.parse(str(value))
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from None


KEYS = {
    "n": ("N", int),
    "k": ("K", int),
    "l": ("L", int),
    "m": ("M", _int_list),
    "delta": ("delta", float),
    "trials": ("trials", int),
    "seed": ("master_seed", int),
    "threshold": ("threshold", _policy),
    "pilots": ("pilots", str),
    "dmin-km": ("d_min_km", float),
    "dmax-km": ("d_max_km", float),
    "tx-power-dbm": ("tx_power_dbm", float),
    "noise-psd-dbm-hz": ("noise_psd_dbm_hz", float),
    "bandwidth-hz": ("bandwidth_hz", float),
    "noise-var": ("noise_var", float),
    "out": ("out", str),
    "workers": ("workers", int),
}


def read_config_file(path) -> dict:
    """Read flat ``key = value`` lines; ``#`` starts a comment."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lstrip("-").replace("_", "-").lower()
        if not sep or key not in KEYS:
            raise ConfigError(f"{path}:{lineno}: unrecognized entry {raw.strip()!r}")
        values[key] = value.strip()
    return values


def parse_config(args: Optional[dict] = None, config_file=None) -> ExperimentConfig:
    """Merge defaults, then config-file values, then flag values.

    ``args`` maps flag names (as in ``KEYS``) to values; ``None`` entries
    mean "not given".
    """
    merged = {}
    if config_file is not None:
        merged.update(read_config_file(config_file))
    for key, value in (args or {}).items():
        if value is None:
            continue
        key = key.replace("_", "-").lower()
        if key not in KEYS:
            raise ConfigError(f"unknown option {key!r}")
        merged[key] = value
    fields = {}
    for key, value in merged.items():
        name, conv = KEYS[key]
        try:
            fields[name] = conv(value)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    return ExperimentConfig(**fields)
