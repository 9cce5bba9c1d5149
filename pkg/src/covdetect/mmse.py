"""MMSE channel estimation for a known set of active users."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import hermitize
from .errors import InvalidParameterError, SingularSystemError


@dataclass(frozen=True)
class ChannelEstimate:
    H_hat: np.ndarray      # K_hat x M
    error_cov: np.ndarray  # K_hat x K_hat, per-antenna error covariance


def _precision(A_bar, betas_bar, noise_var):
    """``A^H A + noise_var * Gamma^-1`` and its Cholesky factor.

    This is the information form of the estimator: by the matrix inversion
    lemma ``Gamma A^H (A Gamma A^H + s I)^-1 = (A^H A + s Gamma^-1)^-1 A^H``,
    a K_hat x K_hat system whose conditioning does not depend on the spread
    of the large-scale gains.
    """
    A_bar = np.asarray(A_bar)
    betas_bar = np.asarray(betas_bar, dtype=float)
    if A_bar.ndim != 2 or A_bar.shape[1] == 0:
        raise InvalidParameterError("need at least one detected user")
    if betas_bar.shape != (A_bar.shape[1],):
        raise InvalidParameterError("one large-scale gain per detected user is required")
    if np.any(betas_bar <= 0):
        raise InvalidParameterError("large-scale gains must be positive")
    if noise_var < 0:
        raise InvalidParameterError("noise variance must be non-negative")
    G = hermitize(A_bar.conj().T @ A_bar) + noise_var * np.diag(1.0 / betas_bar)
    try:
        chol = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise SingularSystemError("pilots of the detected users are linearly dependent") from None
    if noise_var == 0 and np.linalg.cond(chol) ** 2 > 1e14:
        raise SingularSystemError("pilots of the detected users are linearly dependent")
    return G, chol


def _chol_solve(chol, B):
    return np.linalg.solve(chol.conj().T, np.linalg.solve(chol, B))


def mmse_error_cov(A_bar, betas_bar, noise_var: float) -> np.ndarray:
    """Per-antenna error covariance ``Gamma - Gamma A^H (A Gamma A^H + s I)^-1 A Gamma``."""
    G, chol = _precision(A_bar, betas_bar, noise_var)
    return hermitize(noise_var * _chol_solve(chol, np.eye(G.shape[0])))


def mmse_estimate(Y, A_bar, betas_bar, noise_var: float) -> ChannelEstimate:
    """``H_hat = Gamma A^H (A Gamma A^H + s I)^-1 Y`` with its error covariance."""
    Y = np.asarray(Y)
    G, chol = _precision(A_bar, betas_bar, noise_var)
    if Y.ndim != 2 or Y.shape[0] != np.shape(A_bar)[0]:
        raise InvalidParameterError(f"Y has shape {Y.shape}, pilots have length {np.shape(A_bar)[0]}")
    H_hat = _chol_solve(chol, np.asarray(A_bar).conj().T @ Y)
    err = hermitize(noise_var * _chol_solve(chol, np.eye(G.shape[0])))
    return ChannelEstimate(H_hat=H_hat, error_cov=err)
