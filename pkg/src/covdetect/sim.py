"""Ground-truth scenes and received pilot blocks.

All powers are in noise-normalized units: the total receiver noise power
(PSD times bandwidth) maps to 1, large-scale gains ``beta`` are expressed
relative to it, and the transmit power lives in the pilot book.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .pilot import PilotBook


@dataclass(frozen=True)
class ActivityPattern:
    active_set: frozenset
    indicators: np.ndarray

    @classmethod
    def from_users(cls, users, N: int) -> "ActivityPattern":
        users = frozenset(int(u) for u in users)
        if any(u < 1 or u > N for u in users):
            raise InvalidParameterError(f"user indices must lie in 1..{N}")
        ind = np.zeros(N, dtype=np.int8)
        ind[[u - 1 for u in users]] = 1
        ind.setflags(write=False)
        return cls(active_set=users, indicators=ind)

    @property
    def K(self) -> int:
        return len(self.active_set)

    @property
    def N(self) -> int:
        return self.indicators.shape[0]

    def sorted_users(self) -> list:
        return sorted(self.active_set)


@dataclass(frozen=True)
class Scene:
    betas: np.ndarray
    distances: np.ndarray
    activity: ActivityPattern


@dataclass(frozen=True)
class RxBlock:
    Y: np.ndarray
    H_true: np.ndarray  # rows follow activity.sorted_users()
    noise_var: float


def draw_activity(N: int, K: int, rng: np.random.Generator) -> ActivityPattern:
    """Uniformly random K-subset of users ``1..N``."""
    if not 0 <= K <= N:
        raise InvalidParameterError(f"need 0 <= K <= N, got K={K}, N={N}")
    users = rng.choice(N, size=K, replace=False) + 1
    return ActivityPattern.from_users(users, N)


def path_loss_db(d_km):
    """Large-scale gain in dB, ``-128.1 - 36.7 log10(d)`` with d in km."""
    d = np.asarray(d_km, dtype=float)
    if np.any(d <= 0):
        raise InvalidParameterError("distance must be positive")
    g = -128.1 - 36.7 * np.log10(d)
    return float(g) if g.ndim == 0 else g


def noise_power_dbm(psd_dbm_hz: float, bandwidth_hz: float) -> float:
    return psd_dbm_hz + 10 * np.log10(bandwidth_hz)


def dbm_to_mw(dbm):
    return 10 ** (np.asarray(dbm, dtype=float) / 10)


def build_scene(config, rng: np.random.Generator) -> Scene:
    activity = draw_activity(config.N, config.K, rng)
    d = rng.uniform(config.d_min_km, config.d_max_km, size=config.N)
    g_db = path_loss_db(d)
    n0b = noise_power_dbm(config.noise_psd_dbm_hz, config.bandwidth_hz)
    betas = 10 ** ((g_db - n0b) / 10)
    return Scene(betas=betas, distances=d, activity=activity)


def complex_normal(rng: np.random.Generator, shape, var=1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with per-entry variance ``var``."""
    scale = np.sqrt(np.asarray(var, dtype=float) / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channels(scene: Scene, M: int, rng: np.random.Generator) -> np.ndarray:
    """Rayleigh channels of the active users, shape (K, M), ordered by user index."""
    if M < 1:
        raise InvalidParameterError(f"M must be >= 1, got {M}")
    users = scene.activity.sorted_users()
    beta = scene.betas[np.asarray(users, dtype=int) - 1] if users else np.empty(0)
    return complex_normal(rng, (len(users), M), beta[:, None])


def synthesize_rx(pilot_book: PilotBook, scene: Scene, M: int, noise_var: float,
                  rng: np.random.Generator, H: np.ndarray | None = None) -> RxBlock:
    """Received block ``Y = sum_k a_k h_k^T + Z``.

    Channels are drawn from ``rng`` first, then the noise, unless ``H`` is
    supplied (rows ordered by user index).
    """
    if pilot_book.N != scene.activity.N:
        raise InvalidParameterError(
            f"pilot book has {pilot_book.N} users but scene has {scene.activity.N}")
    if noise_var < 0:
        raise InvalidParameterError("noise variance must be non-negative")
    if H is None:
        H = draw_channels(scene, M, rng)
    elif H.shape != (scene.activity.K, M):
        raise InvalidParameterError(f"channel matrix shape {H.shape} != {(scene.activity.K, M)}")
    A_bar = pilot_book.columns(scene.activity.sorted_users())
    Y = A_bar @ H
    if noise_var > 0:
        Y = Y + complex_normal(rng, (pilot_book.L, M), noise_var)
    return RxBlock(Y=Y, H_true=H, noise_var=float(noise_var))
