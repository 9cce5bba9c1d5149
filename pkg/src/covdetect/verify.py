"""Exhaustive and randomized checks of the noise-free detector."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.spatial.distance import pdist

from .config import ExperimentConfig
from .covariance import ideal_covariance
from .detector import IDEAL, detect
from .harness import brute_force_detect
from .pilot import build_pilot_book
from .sim import build_scene


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _unit_rows(X):
    return np.concatenate([X.real.reshape(len(X), -1), X.imag.reshape(len(X), -1)], axis=1)


def check_identifiability(N_max: int = 12, L_max: int = 8, delta: float = 0.5,
                          rel_tol: float = 1e-6) -> CheckResult:
    """Every K-column submatrix (K < L) has full column rank."""
    worst = np.inf
    where = None
    count = 0
    for N in range(1, N_max + 1):
        for L in range(2, L_max + 1):
            A = build_pilot_book(N, L, delta).A
            for K in range(1, min(L - 1, N) + 1):
                idx = np.array(list(combinations(range(N), K)))
                sv = np.linalg.svd(A[:, idx].transpose(1, 0, 2), compute_uv=False)
                ratio = sv[:, -1] / sv[:, 0]
                count += len(idx)
                j = int(np.argmin(ratio))
                if ratio[j] < worst:
                    worst, where = ratio[j], (N, L, tuple(int(u) + 1 for u in idx[j]))
    return CheckResult("identifiability", bool(worst > rel_tol),
                       f"{count} submatrices, min sv ratio {worst:.3e} at N,L,users={where}")


def check_pattern_separation(N_max: int = 12, L_max: int = 8, delta: float = 0.5) -> CheckResult:
    """Distinct activity patterns (at most L-1 users) give distinct covariances."""
    worst = np.inf
    where = None
    pairs = 0
    for N in range(1, N_max + 1):
        for L in range(2, L_max + 1):
            A = build_pilot_book(N, L, delta).A
            R = np.einsum("ln,mn->nlm", A, A.conj())
            pats = [()]
            for K in range(1, min(L - 1, N) + 1):
                pats.extend(combinations(range(N), K))
            covs = np.stack([R[list(p)].sum(axis=0) if p else np.zeros((L, L), complex)
                             for p in pats])
            d = pdist(_unit_rows(covs))
            pairs += d.size
            j = int(np.argmin(d))
            scale = np.abs(R).max()
            if d[j] / scale < worst:
                # pdist is condensed; recover the pair for the report
                n = len(pats)
                i = int(n - 2 - np.floor(np.sqrt(-8 * j + 4 * n * (n - 1) - 7) / 2 - 0.5))
                k = int(j + i + 1 - n * (n - 1) // 2 + (n - i) * ((n - i) - 1) // 2)
                worst = d[j] / scale
                where = (N, L, tuple(u + 1 for u in pats[i]), tuple(u + 1 for u in pats[k]))
    return CheckResult("pattern-separation", bool(worst > 0),
                       f"{pairs} pattern pairs, min relative distance {worst:.3e} at {where}")


@dataclass(frozen=True)
class RecoveryStats:
    trials: int
    sets_ok: int
    phase_ok: int
    max_phase_error: float


def exact_recovery_stats(trials: int = 1000, N: int = 100, K: int = 5, L: int = 12,
                         delta: float = 0.5, seed: int = 7, phase_tol: float = 1e-8) -> RecoveryStats:
    """Noise-free detector on exact covariances with random patterns and path losses."""
    cfg = ExperimentConfig(N=N, K=K, L=L, delta=delta, trials=1)
    book = build_pilot_book(N, L, delta, cfg.power)
    rng = np.random.default_rng(seed)
    sets_ok = phase_ok = 0
    worst = 0.0
    for _ in range(trials):
        scene = build_scene(cfg, rng)
        Sigma = ideal_covariance(book, scene.activity, scene.betas, cfg.noise_var)
        rep = detect(book, cfg.noise_var, cov=Sigma, policy=IDEAL)
        if rep.active_set_hat == scene.activity.active_set and rep.k_hat == K:
            sets_ok += 1
            true = np.sort(book.signatures[np.asarray(scene.activity.sorted_users()) - 1])
            err = float(np.max(np.abs(np.sort(rep.phases) - true)))
            worst = max(worst, err)
            phase_ok += err <= phase_tol
    return RecoveryStats(trials, sets_ok, phase_ok, worst)


def check_exact_recovery(trials: int = 1000, phase_tol: float = 1e-8, **kw) -> list:
    st = exact_recovery_stats(trials, phase_tol=phase_tol, **kw)
    return [
        CheckResult("exact-recovery-sets", st.sets_ok == st.trials,
                    f"{st.sets_ok}/{st.trials} active sets recovered"),
        CheckResult("exact-recovery-phases", st.phase_ok == st.trials,
                    f"{st.phase_ok}/{st.trials} trials with every phase within {phase_tol:g}, "
                    f"worst {st.max_phase_error:.3e}"),
    ]


def check_oracle_agreement(N: int = 10, k_max: int = 3, L: int = 6, delta: float = 0.5,
                           seed: int = 11) -> CheckResult:
    """Detector and brute-force covariance fit agree on every pattern."""
    cfg = ExperimentConfig(N=N, K=0, L=L, delta=delta, trials=1)
    book = build_pilot_book(N, L, delta, cfg.power)
    betas = build_scene(cfg, np.random.default_rng(seed)).betas
    total = disagree = wrong = 0
    for K in range(k_max + 1):
        for users in combinations(range(1, N + 1), K):
            Sigma = ideal_covariance(book, users, betas, cfg.noise_var)
            got = detect(book, cfg.noise_var, cov=Sigma, policy=IDEAL).active_set_hat
            oracle = brute_force_detect(Sigma, book, betas, cfg.noise_var, k_max)
            total += 1
            disagree += got != oracle
            wrong += got != frozenset(users)
    return CheckResult("oracle-agreement", disagree == 0 and wrong == 0,
                       f"{total} patterns, {disagree} disagreements, {wrong} wrong vs truth")


def run_all() -> list:
    results = [check_identifiability(), check_pattern_separation()]
    results.extend(check_exact_recovery())
    results.append(check_oracle_agreement())
    return results

