"""Monte-Carlo trials, scoring, exhaustive oracle and timing benchmarks."""
from __future__ import annotations

import logging
import math
import time
from functools import partial
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .config import ExperimentConfig
from .covariance import sample_covariance
from .detector import detect
from .errors import InvalidParameterError, PatternLimitError
from .mmse import mmse_estimate
from .pilot import PilotBook, build_pilot_book, gaussian_pilot_book
from .sim import build_scene, complex_normal, draw_channels, synthesize_rx

log = logging.getLogger(__name__)

MAX_PATTERNS = 1_000_000


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    true_set: frozenset
    detected_set: frozenset
    k_hat: int
    miss_count: int
    false_alarm_count: int
    channel_mse: float
    channel_mse_analytic: float
    detect_wall_time: float


@dataclass(frozen=True)
class SweepRow:
    M: int
    p_md: float
    p_fa: float
    p_md_se: float
    p_fa_se: float
    mse_emp: float
    mse_analytic: float
    detect_time_s: float
    trials: int


@dataclass(frozen=True)
class ExperimentSummary:
    config: ExperimentConfig
    rows: list


@dataclass(frozen=True)
class MseRow:
    M: int
    pilots: str
    mse_emp: float
    mse_analytic: float
    mean_ratio: float  # trial average of empirical / analytic
    trials: int


def trial_streams(master_seed: int, trial_index: int):
    """Independent generators (scene, channels, noise, pilots) for one trial.

    Depends only on ``(master_seed, trial_index)``, so results do not
    change with the order or process in which trials run.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(trial_index,))
    return [np.random.default_rng(s) for s in ss.spawn(4)]


def score_sets(true_set, detected_set):
    """Return (miss_count, false_alarm_count)."""
    hits = len(true_set & detected_set)
    return len(true_set) - hits, len(detected_set - true_set)


def score_channels(H_true, true_users, H_hat, detected_users, error_cov, betas):
    """Empirical and analytic per-entry MSE over the true users.

    Missed users count as estimated zero; false alarms are ignored.
    """
    K = len(true_users)
    if K == 0:
        return 0.0, 0.0
    M = H_true.shape[1]
    pos = {u: i for i, u in enumerate(detected_users)}
    err = 0.0
    ana = 0.0
    for row, u in enumerate(true_users):
        if u in pos:
            i = pos[u]
            err += float(np.sum(np.abs(H_hat[i] - H_true[row]) ** 2))
            ana += float(error_cov[i, i].real)
        else:
            err += float(np.sum(np.abs(H_true[row]) ** 2))
            ana += float(betas[u - 1])
    return err / (K * M), ana / K


def run_trial(config: ExperimentConfig, pilot_book: PilotBook, trial_seed: int,
              M: Optional[int] = None) -> TrialRecord:
    """One block: scene, received signal, detection, MMSE, scoring.

    Only detection (covariance through matching) is timed.
    """
    M = config.M[0] if M is None else M
    r_scene, r_chan, r_noise, _ = trial_streams(config.master_seed, trial_seed)
    scene = build_scene(config, r_scene)
    H = draw_channels(scene, M, r_chan)
    rx = synthesize_rx(pilot_book, scene, M, config.noise_var, r_noise, H=H)

    t0 = time.perf_counter()
    report = detect(pilot_book, config.noise_var, Y=rx.Y, policy=config.threshold)
    elapsed = time.perf_counter() - t0

    true_users = scene.activity.sorted_users()
    detected = sorted(report.active_set_hat)
    miss, fa = score_sets(scene.activity.active_set, report.active_set_hat)
    if detected:
        idx = np.asarray(detected) - 1
        est = mmse_estimate(rx.Y, pilot_book.A[:, idx], scene.betas[idx], config.noise_var)
        mse, mse_a = score_channels(H, true_users, est.H_hat, detected, est.error_cov, scene.betas)
    else:
        mse, mse_a = score_channels(H, true_users, None, [], None, scene.betas)
    return TrialRecord(trial_index=trial_seed, true_set=scene.activity.active_set,
                       detected_set=report.active_set_hat, k_hat=report.k_hat,
                       miss_count=miss, false_alarm_count=fa, channel_mse=mse,
                       channel_mse_analytic=mse_a, detect_wall_time=elapsed)


def _run_chunk(config, M, indices):
    book = build_pilot_book(config.N, config.L, config.delta, config.power)
    return [run_trial(config, book, i, M) for i in indices]


def _map_trials(fn, config, M, workers):
    indices = list(range(config.trials))
    if workers <= 1:
        return fn(config, M, indices)
    chunks = [indices[w::workers] for w in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, [config] * workers, [M] * workers, chunks))
    records = [r for part in parts for r in part]
    return sorted(records, key=lambda r: r.trial_index if isinstance(r, TrialRecord) else r[0])


def _se(p, n):
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n else 0.0


def summarize(records: Sequence[TrialRecord], M: int, N: int, K: int) -> SweepRow:
    records = sorted(records, key=lambda r: r.trial_index)
    n = len(records)
    misses = sum(r.miss_count for r in records)
    fas = sum(r.false_alarm_count for r in records)
    p_md = misses / (n * K) if K else 0.0
    p_fa = fas / (n * (N - K)) if N > K else 0.0
    return SweepRow(
        M=M, p_md=p_md, p_fa=p_fa,
        p_md_se=_se(p_md, n * K), p_fa_se=_se(p_fa, n * (N - K)),
        mse_emp=math.fsum(r.channel_mse for r in records) / n,
        mse_analytic=math.fsum(r.channel_mse_analytic for r in records) / n,
        detect_time_s=math.fsum(r.detect_wall_time for r in records) / n,
        trials=n)


def run_experiment(config: ExperimentConfig) -> ExperimentSummary:
    """Detection sweep over ``config.M``; trial i uses the same scene at every M."""
    if config.pilots != "designed":
        raise InvalidParameterError("activity detection needs designed pilots")
    rows = []
    for M in config.M:
        log.info("sweep M=%d, %d trials", M, config.trials)
        records = _map_trials(_run_chunk, config, M, config.workers)
        rows.append(summarize(records, M, config.N, config.K))
    return ExperimentSummary(config=config, rows=rows)


def mse_trial(config: ExperimentConfig, designed: PilotBook, trial_seed: int, M: int,
              schemes=("designed", "gaussian")) -> dict:
    """Channel estimation with the true active set, for each pilot scheme.

    Both schemes see the same users, channels and noise. Returns
    ``{scheme: (empirical_mse, analytic_mse)}``.
    """
    r_scene, r_chan, r_noise, r_pilot = trial_streams(config.master_seed, trial_seed)
    scene = build_scene(config, r_scene)
    H = draw_channels(scene, M, r_chan)
    Z = complex_normal(r_noise, (config.L, M), config.noise_var)
    users = scene.activity.sorted_users()
    if not users:
        return {s: (0.0, 0.0) for s in schemes}
    idx = np.asarray(users) - 1
    out = {}
    for scheme in schemes:
        book = designed if scheme == "designed" else gaussian_pilot_book(
            config.N, config.L, config.power, r_pilot)
        A_bar = book.A[:, idx]
        Y = A_bar @ H + Z
        est = mmse_estimate(Y, A_bar, scene.betas[idx], config.noise_var)
        out[scheme] = score_channels(H, users, est.H_hat, users, est.error_cov, scene.betas)
    return out


def _mse_chunk(config, M, indices, schemes=("designed", "gaussian")):
    book = build_pilot_book(config.N, config.L, config.delta, config.power)
    return [(i, mse_trial(config, book, i, M, schemes)) for i in indices]


def run_mse_experiment(config: ExperimentConfig, schemes=("designed", "gaussian")) -> list:
    """Perfect-detection channel-estimation sweep; one MseRow per (M, scheme)."""
    rows = []
    for M in config.M:
        if config.workers <= 1:
            results = _mse_chunk(config, M, range(config.trials), schemes)
        else:
            results = _map_trials(partial(_mse_chunk, schemes=schemes), config, M, config.workers)
        results.sort(key=lambda r: r[0])
        for scheme in schemes:
            emp = [res[scheme][0] for _, res in results]
            ana = [res[scheme][1] for _, res in results]
            ratios = [e / a for e, a in zip(emp, ana) if a > 0]
            rows.append(MseRow(
                M=M, pilots=scheme,
                mse_emp=math.fsum(emp) / len(emp),
                mse_analytic=math.fsum(ana) / len(ana),
                mean_ratio=math.fsum(ratios) / len(ratios) if ratios else float("nan"),
                trials=len(results)))
    return rows


def brute_force_detect(Sigma, pilot_book: PilotBook, betas, noise_var: float, k_max: int) -> frozenset:
    """Exhaustive covariance fit over every pattern with at most ``k_max`` users.

    Minimizes ``||Sigma - (A Gamma A^H + noise_var I)||_F``; ties go to the
    smaller pattern, then the lexicographically first one.
    """
    N, L = pilot_book.N, pilot_book.L
    count = sum(math.comb(N, k) for k in range(k_max + 1))
    if count > MAX_PATTERNS:
        raise PatternLimitError(f"{count} patterns exceeds the limit of {MAX_PATTERNS}")
    betas = np.asarray(betas, dtype=float)
    A = pilot_book.A
    R = np.einsum("ln,mn->nlm", A * betas, A.conj())  # beta_n a_n a_n^H
    target = np.asarray(Sigma) - noise_var * np.eye(L)

    best, best_val = frozenset(), np.linalg.norm(target)
    for k in range(1, k_max + 1):
        combos = np.array(list(combinations(range(N), k)), dtype=int)
        for start in range(0, len(combos), 20_000):
            chunk = combos[start:start + 20_000]
            resid = target[None] - R[chunk].sum(axis=1)
            vals = np.sqrt(np.sum(np.abs(resid) ** 2, axis=(1, 2)))
            j = int(np.argmin(vals))
            if vals[j] < best_val:
                best_val = vals[j]
                best = frozenset(int(u) + 1 for u in chunk[j])
    return best


def benchmark_scaling(config: ExperimentConfig, M_list, L_list, repeats: int = 100,
                      warmup: int = 10) -> list:
    """Median detection time per (L, M) cell, single-threaded BLAS.

    Cells are timed round-robin, one detection each per pass, so slow
    drift in machine load hits every cell alike. Returns a list of
    ``(L, M, median_seconds, repeats)`` tuples.
    """
    from threadpoolctl import threadpool_limits

    if repeats < 1:
        raise InvalidParameterError("repeats must be >= 1")
    rng = np.random.default_rng(config.master_seed)
    cells = []
    for L in L_list:
        cfg = config.replace(L=L, M=tuple(M_list))
        book = build_pilot_book(cfg.N, L, cfg.delta, cfg.power)
        cells.extend((L, M, cfg, book) for M in M_list)
    times = {(L, M): [] for L, M, _, _ in cells}
    with threadpool_limits(limits=1):
        for rep in range(warmup + repeats):
            for L, M, cfg, book in cells:
                Y = synthesize_rx(book, build_scene(cfg, rng), M, cfg.noise_var, rng).Y
                t0 = time.perf_counter()
                detect(book, cfg.noise_var, Y=Y, policy=cfg.threshold)
                dt = time.perf_counter() - t0
                if rep >= warmup:
                    times[L, M].append(dt)
    return [(L, M, float(np.median(times[L, M])), repeats) for L, M, _, _ in cells]


def covariance_error_curve(config: ExperimentConfig, M_list, reps: int = 200):
    """Mean ``||sample_cov - ideal_cov||_F`` per M over random scenes."""
    from .covariance import ideal_covariance

    book = build_pilot_book(config.N, config.L, config.delta, config.power)
    out = []
    for M in M_list:
        errs = []
        for r in range(reps):
            r_scene, r_chan, r_noise, _ = trial_streams(config.master_seed, r)
            scene = build_scene(config, r_scene)
            rx = synthesize_rx(book, scene, M, config.noise_var, r_noise)
            S = ideal_covariance(book, scene.activity, scene.betas, config.noise_var)
            errs.append(np.linalg.norm(sample_covariance(rx.Y).sigma_hat - S))
        out.append((M, float(np.mean(errs))))
    return out
