"""Constant-modulus signature pilots and the i.i.d. Gaussian baseline."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidParameterError

DEFAULT_DELTA = 0.5


@dataclass(frozen=True)
class PilotBook:
    """L x N pilot matrix, one column per user.

    ``signatures`` is ``None`` for the Gaussian baseline, which has no
    signature structure to invert.
    """

    A: np.ndarray
    signatures: Optional[np.ndarray]
    delta: Optional[float]
    power: float
    designed: bool = field(default=True)

    def __post_init__(self):
        self.A.setflags(write=False)
        if self.signatures is not None:
            self.signatures.setflags(write=False)

    @property
    def L(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return self.A.shape[1]

    def columns(self, users) -> np.ndarray:
        """Pilot columns for 1-based user indices, in the given order."""
        idx = np.asarray(sorted(users) if isinstance(users, (set, frozenset)) else users, dtype=int)
        return self.A[:, idx - 1]


def _check_delta(delta: float) -> None:
    if not 0.0 < delta <= 0.5:
        raise InvalidParameterError(f"delta must lie in (0, 1/2], got {delta}")


def assign_signatures(N: int) -> np.ndarray:
    """Return the signature grid ``n*pi/N`` for ``n = 1..N``."""
    if N < 1:
        raise InvalidParameterError(f"N must be >= 1, got {N}")
    return np.arange(1, N + 1) * np.pi / N


def phase_step(phi, delta: float = DEFAULT_DELTA):
    """Per-symbol phase rotation ``exp(-j 2 pi delta cos(phi))`` of a pilot."""
    return np.exp(-2j * np.pi * delta * np.cos(phi))


def make_pilot(phi: float, L: int, delta: float = DEFAULT_DELTA, p: float = 1.0) -> np.ndarray:
    """Geometric pilot of length ``L`` with constant modulus ``sqrt(p)``.

    Entry ``l`` (0-based) is ``sqrt(p) * exp(-j * l * 2*pi*delta*cos(phi))``.
    """
    if L < 1:
        raise InvalidParameterError(f"L must be >= 1, got {L}")
    _check_delta(delta)
    if p <= 0:
        raise InvalidParameterError(f"power must be positive, got {p}")
    if not 0.0 <= phi <= np.pi:
        raise InvalidParameterError(f"signature must lie in [0, pi], got {phi}")
    ramp = np.arange(L) * (2 * np.pi * delta * np.cos(phi))
    return np.sqrt(p) * np.exp(-1j * ramp)


def build_pilot_book(N: int, L: int, delta: float = DEFAULT_DELTA, p: float = 1.0) -> PilotBook:
    signatures = assign_signatures(N)
    if L < 1:
        raise InvalidParameterError(f"L must be >= 1, got {L}")
    _check_delta(delta)
    if p <= 0:
        raise InvalidParameterError(f"power must be positive, got {p}")
    ramp = np.outer(np.arange(L), 2 * np.pi * delta * np.cos(signatures))
    A = np.sqrt(p) * np.exp(-1j * ramp)
    return PilotBook(A=A, signatures=signatures, delta=float(delta), power=float(p))


def gaussian_pilot_book(N: int, L: int, p: float, rng: np.random.Generator) -> PilotBook:
    """I.i.d. CN(0, p) pilots, power-matched to the designed book."""
    if N < 1 or L < 1:
        raise InvalidParameterError(f"N and L must be >= 1, got N={N}, L={L}")
    if p <= 0:
        raise InvalidParameterError(f"power must be positive, got {p}")
    A = np.sqrt(p / 2) * (rng.standard_normal((L, N)) + 1j * rng.standard_normal((L, N)))
    return PilotBook(A=A, signatures=None, delta=None, power=float(p), designed=False)
