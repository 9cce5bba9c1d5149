"""Closed-form activity detection from the received covariance.

The pipeline is: covariance -> noise-debiased Q -> Hermitian EVD -> count
of signal eigenvalues -> shift-invariance (ESPRIT) phase recovery ->
nearest-signature matching.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .covariance import SampleCov, q_matrix, sample_covariance
from .errors import DegenerateSubspaceError, InvalidParameterError
from .pilot import PilotBook

HERMITIAN_RTOL = 1e-8
MAX_SHIFT_COND = 1e12


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray   # descending
    eigenvectors: np.ndarray  # columns aligned with eigenvalues


@dataclass(frozen=True)
class ThresholdPolicy:
    """How the number of active users is estimated.

    ``kind`` is ``"ideal"`` (numerical rank, for exact covariances; ``value`` is
    the relative rank tolerance, ``None`` for the default),
    ``"mp"`` (Marchenko-Pastur edge scaled by ``value``) or ``"fixed"``
    (``value`` is the threshold itself).
    """

    kind: str = "mp"
    value: Optional[float] = 1.5

    def __post_init__(self):
        if self.kind not in ("ideal", "mp", "fixed"):
            raise InvalidParameterError(f"unknown threshold policy {self.kind!r}")
        if self.value is None:
            if self.kind != "ideal":
                raise InvalidParameterError(f"{self.kind} threshold needs a parameter")
        elif not self.value > 0:
            raise InvalidParameterError(f"{self.kind} threshold parameter must be positive")

    @classmethod
    def parse(cls, text: str) -> "ThresholdPolicy":
        """Parse ``ideal``, ``mp:<gamma>`` or ``fixed:<eta>``."""
        kind, _, arg = text.strip().partition(":")
        if kind == "ideal":
            try:
                return cls("ideal", float(arg) if arg else None)
            except ValueError:
                raise InvalidParameterError(f"bad rank tolerance in {text!r}") from None
        if kind in ("mp", "fixed"):
            try:
                value = float(arg) if arg else 1.5
            except ValueError:
                raise InvalidParameterError(f"bad threshold value in {text!r}") from None
            if kind == "fixed" and not arg:
                raise InvalidParameterError("fixed threshold needs a value, e.g. fixed:0.8")
            return cls(kind, value)
        raise InvalidParameterError(f"threshold must be ideal, mp:<gamma> or fixed:<eta>, got {text!r}")

    def __str__(self) -> str:
        if self.value is None:
            return self.kind
        return f"{self.kind}:{self.value:g}"


@dataclass(frozen=True)
class DetectionReport:
    k_hat: int
    phases: np.ndarray
    active_set_hat: frozenset
    spectrum: Spectrum
    psi_eigenvalues: np.ndarray
    eta: Optional[float] = field(default=None)


def hermitian_evd(Q: np.ndarray) -> Spectrum:
    """Full eigendecomposition of a Hermitian matrix, eigenvalues descending."""
    Q = np.asarray(Q)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise InvalidParameterError(f"Q must be square, got shape {Q.shape}")
    scale = np.linalg.norm(Q)
    if np.linalg.norm(Q - Q.conj().T) > HERMITIAN_RTOL * max(scale, np.finfo(float).tiny):
        raise InvalidParameterError("Q is not Hermitian")
    w, U = np.linalg.eigh(0.5 * (Q + Q.conj().T))
    return Spectrum(eigenvalues=w[::-1].copy(), eigenvectors=U[:, ::-1].copy())


def estimate_k_ideal(spectrum: Spectrum, rel_tol: Optional[float] = None) -> int:
    """Numerical rank of Q: eigenvalues above ``rel_tol`` times the largest.

    The default tolerance is ``L * eps``, the usual numerical-rank cutoff
    for an L x L matrix.
    """
    if rel_tol is None:
        rel_tol = spectrum.eigenvalues.size * np.finfo(float).eps
    if rel_tol <= 0:
        raise InvalidParameterError("rel_tol must be positive")
    s = spectrum.eigenvalues
    top = s.max() if s.size else 0.0
    if top <= 0:
        return 0
    return int(np.count_nonzero(s > rel_tol * top))


def default_threshold(noise_var: float, L: int, M: int, gamma: float = 1.5) -> float:
    """Marchenko-Pastur bulk-edge excursion of noise eigenvalues of Q, times ``gamma``."""
    if M < 1:
        raise InvalidParameterError(f"M must be >= 1, got {M}")
    if gamma <= 0:
        raise InvalidParameterError("gamma must be positive")
    return gamma * noise_var * ((1 + np.sqrt(L / M)) ** 2 - 1)


def estimate_k_threshold(spectrum: Spectrum, eta: float) -> int:
    # capped at L-1: the shift-invariance step needs more pilot symbols than users
    if eta <= 0:
        raise InvalidParameterError("eta must be positive")
    s = spectrum.eigenvalues
    return int(min(np.count_nonzero(s > eta), max(s.size - 1, 0)))


def shift_invariance_eigenvalues(U_bar: np.ndarray) -> np.ndarray:
    """Eigenvalues of the least-squares map between shifted signal subspaces.

    With ``U0 = U_bar[:-1]`` and ``U1 = U_bar[1:]`` this solves
    ``(U0^H U0) Psi = U0^H U1`` and returns ``eig(Psi)``.
    """
    U_bar = np.asarray(U_bar)
    L, k = U_bar.shape
    if k < 1 or k >= L:
        raise InvalidParameterError(f"need 1 <= K_hat < L, got K_hat={k}, L={L}")
    U0, U1 = U_bar[:-1], U_bar[1:]
    G = U0.conj().T @ U0
    if np.linalg.cond(G) > MAX_SHIFT_COND:
        raise DegenerateSubspaceError("shifted signal subspace is rank deficient")
    Psi = np.linalg.solve(G, U0.conj().T @ U1)
    return np.linalg.eigvals(Psi)


def wrap_cut(signatures, delta: float) -> float:
    """Branch cut for the phase of Psi's eigenvalues.

    Placed midway across the arc between the largest signature phase step
    and the smallest one (taken once around the circle), so round-off
    cannot push an estimate at one end of the signature range onto the
    other end.
    """
    steps = -2 * np.pi * delta * np.cos(np.asarray(signatures, dtype=float))
    return 0.5 * (steps.max() + steps.min() + 2 * np.pi)


def phases_from_eigenvalues(mu, delta: float, branch_cut: float = np.pi) -> np.ndarray:
    """Invert ``mu = exp(-j 2 pi delta cos(phi))`` for ``phi`` in [0, pi].

    Equivalent to ``arccos(clip(-arg(mu) / (2 pi delta), -1, 1))`` with
    ``arg`` taken on ``(branch_cut - 2 pi, branch_cut]``; the default cut
    gives the principal argument. Near ``cos(phi) = +-1`` the distance to
    the endpoint is measured directly as an angle, which keeps full
    precision where ``arccos`` has an infinite slope.
    """
    mu = np.asarray(mu, dtype=complex)
    two = 2 * np.pi * delta
    shift = branch_cut - np.pi
    theta = np.angle(mu * np.exp(-1j * shift)) + shift
    out = np.empty(mu.shape)
    upper = theta > 0  # cos(phi) < 0
    # 1 + cos(phi) and 1 - cos(phi), each as an angle measured from its endpoint
    one_plus = -np.angle(mu[upper] * np.exp(-1j * two)) / two
    one_minus = np.angle(mu[~upper] * np.exp(1j * two)) / two
    out[upper] = np.pi - 2 * np.arcsin(np.sqrt(np.clip(one_plus / 2, 0.0, 1.0)))
    out[~upper] = 2 * np.arcsin(np.sqrt(np.clip(one_minus / 2, 0.0, 1.0)))
    return out


def esprit_phases(U_bar: np.ndarray, delta: float = 0.5, branch_cut: float = np.pi) -> np.ndarray:
    """Recover signatures from the top-K_hat eigenvectors of Q."""
    return phases_from_eigenvalues(shift_invariance_eigenvalues(U_bar), delta, branch_cut)


def match_active_set(phases, signatures) -> frozenset:
    """Nearest signature for each estimate; duplicates collapse.

    Returns 1-based user indices. Ties go to the smaller index.
    """
    signatures = np.asarray(signatures, dtype=float)
    if signatures.size == 0:
        raise InvalidParameterError("signature list is empty")
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    if phases.size == 0:
        return frozenset()
    d2 = (signatures[None, :] - phases[:, None]) ** 2
    return frozenset(int(i) + 1 for i in np.argmin(d2, axis=1))


def _empty_report(spectrum, eta):
    return DetectionReport(k_hat=0, phases=np.empty(0), active_set_hat=frozenset(),
                           spectrum=spectrum, psi_eigenvalues=np.empty(0, dtype=complex), eta=eta)


def detect(pilot_book: PilotBook, noise_var: float, *, Y=None, cov=None,
           policy: ThresholdPolicy = ThresholdPolicy(), M: Optional[int] = None) -> DetectionReport:
    """Run the full detector on received data ``Y`` or a covariance ``cov``.

    ``M`` is only needed for the ``mp`` policy when a bare covariance
    matrix (not a SampleCov) is passed.
    """
    if pilot_book.signatures is None:
        raise InvalidParameterError("detection needs a designed (signature) pilot book")
    if (Y is None) == (cov is None):
        raise InvalidParameterError("pass exactly one of Y or cov")
    if Y is not None:
        cov = sample_covariance(Y)
    if isinstance(cov, SampleCov):
        M = cov.M_used if M is None else M
    if np.shape(cov.sigma_hat if isinstance(cov, SampleCov) else cov) != (pilot_book.L,) * 2:
        raise InvalidParameterError("covariance size does not match the pilot length")

    spectrum = hermitian_evd(q_matrix(cov, noise_var))
    L = pilot_book.L
    eta = None
    if policy.kind == "ideal":
        k_hat = estimate_k_ideal(spectrum, policy.value)
        if k_hat >= L:
            raise InvalidParameterError(
                f"rank of Q is {k_hat} >= L={L}; use a threshold policy for noisy covariances")
    else:
        if policy.kind == "mp":
            if M is None:
                raise InvalidParameterError("the mp threshold policy needs the antenna count M")
            eta = default_threshold(noise_var, L, M, policy.value)
        else:
            eta = policy.value
        k_hat = estimate_k_threshold(spectrum, eta)

    if k_hat == 0:
        return _empty_report(spectrum, eta)
    mu = shift_invariance_eigenvalues(spectrum.eigenvectors[:, :k_hat])
    cut = wrap_cut(pilot_book.signatures, pilot_book.delta)
    phases = phases_from_eigenvalues(mu, pilot_book.delta, cut)
    return DetectionReport(k_hat=k_hat, phases=phases,
                           active_set_hat=match_active_set(phases, pilot_book.signatures),
                           spectrum=spectrum, psi_eigenvalues=mu, eta=eta)


IDEAL = ThresholdPolicy("ideal", None)
