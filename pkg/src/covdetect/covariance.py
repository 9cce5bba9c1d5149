"""Spatial sample covariance, model covariance and the noise-debiased matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .pilot import PilotBook


@dataclass(frozen=True)
class SampleCov:
    sigma_hat: np.ndarray
    M_used: int


def hermitize(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.conj().T)


def sample_covariance(Y: np.ndarray) -> SampleCov:
    """``(1/M) Y Y^H`` averaged over the M antennas (columns of ``Y``)."""
    Y = np.asarray(Y)
    if Y.ndim != 2 or Y.shape[0] == 0 or Y.shape[1] == 0:
        raise InvalidParameterError(f"Y must be a non-empty L x M matrix, got shape {Y.shape}")
    M = Y.shape[1]
    return SampleCov(sigma_hat=hermitize(Y @ Y.conj().T / M), M_used=M)


def ideal_covariance(pilot_book: PilotBook, activity, betas, noise_var: float) -> np.ndarray:
    """``A diag(lambda * beta) A^H + noise_var * I``.

    ``activity`` is an ActivityPattern or an iterable of 1-based user indices.
    """
    users = activity.sorted_users() if hasattr(activity, "sorted_users") else sorted(activity)
    betas = np.asarray(betas, dtype=float)
    if betas.shape != (pilot_book.N,):
        raise InvalidParameterError(f"need {pilot_book.N} betas, got shape {betas.shape}")
    idx = np.asarray(users, dtype=int) - 1
    A_bar = pilot_book.A[:, idx]
    Q = (A_bar * betas[idx]) @ A_bar.conj().T
    return hermitize(Q) + noise_var * np.eye(pilot_book.L)


def q_matrix(cov, noise_var: float) -> np.ndarray:
    if noise_var < 0:
        raise InvalidParameterError("noise variance must be non-negative")
    cov = cov.sigma_hat if isinstance(cov, SampleCov) else np.asarray(cov)
    return cov - noise_var * np.eye(cov.shape[0])
