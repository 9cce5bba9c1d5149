import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covdetect.config import ExperimentConfig
from covdetect.covariance import ideal_covariance, q_matrix
from covdetect.detector import (IDEAL, ThresholdPolicy, default_threshold, detect, esprit_phases,
                                estimate_k_ideal, estimate_k_threshold, hermitian_evd,
                                match_active_set, phases_from_eigenvalues,
                                shift_invariance_eigenvalues, Spectrum, wrap_cut)
from covdetect.errors import DegenerateSubspaceError, InvalidParameterError
from covdetect.pilot import assign_signatures, build_pilot_book, make_pilot, phase_step
from covdetect.sim import build_scene, complex_normal


def _spec(values):
    v = np.asarray(values, float)
    return Spectrum(eigenvalues=v, eigenvectors=np.eye(len(v)))


def test_evd_diagonal():
    sp = hermitian_evd(np.diag([1.0, 3.0, 0.0]))
    assert np.allclose(sp.eigenvalues, [3, 1, 0])
    assert np.allclose(np.abs(sp.eigenvectors), np.eye(3)[:, [1, 0, 2]])


def test_evd_rank_one_and_reconstruction():
    a = make_pilot(1.1, 7, 0.5, 2.0)
    Q = 0.4 * np.outer(a, a.conj())
    sp = hermitian_evd(Q)
    assert sp.eigenvalues[0] == pytest.approx(0.4 * 14)
    assert np.allclose(sp.eigenvalues[1:], 0, atol=1e-12)
    U, s = sp.eigenvectors, sp.eigenvalues
    assert np.linalg.norm(U @ np.diag(s) @ U.conj().T - Q) <= 1e-10 * np.linalg.norm(Q)
    assert np.allclose(U.conj().T @ U, np.eye(7), atol=1e-8)


def test_evd_rejects_non_hermitian():
    with pytest.raises(InvalidParameterError):
        hermitian_evd(np.array([[1.0, 2.0], [0.0, 1.0]]))


def _paper_cov(seed, K=5, N=100, L=12):
    cfg = ExperimentConfig(N=N, K=K, L=L)
    book = build_pilot_book(N, L, 0.5, cfg.power)
    scene = build_scene(cfg, np.random.default_rng(seed))
    return book, scene, ideal_covariance(book, scene.activity, scene.betas, 1.0)


def test_evd_ideal_k5_has_five_signal_eigenvalues():
    _, _, S = _paper_cov(3)
    s = hermitian_evd(q_matrix(S, 1.0)).eigenvalues
    assert np.count_nonzero(s > 1e-9 * s[0]) == 5


@pytest.mark.parametrize("seed", range(5))
def test_k_ideal_paper_scenario(seed):
    _, _, S = _paper_cov(seed)
    assert estimate_k_ideal(hermitian_evd(q_matrix(S, 1.0))) == 5


def test_k_ideal_zero_and_boundary():
    assert estimate_k_ideal(hermitian_evd(np.zeros((4, 4)))) == 0
    book = build_pilot_book(20, 8)
    S = ideal_covariance(book, [1, 4, 7, 11, 14, 17, 20], np.ones(20), 1.0)
    assert estimate_k_ideal(hermitian_evd(q_matrix(S, 1.0))) == 7


def test_default_threshold():
    assert default_threshold(1.0, 12, 128, 1.5) == pytest.approx(1.0592, abs=1e-4)
    assert default_threshold(1.0, 12, 10 ** 12, 1.5) < 1e-4
    with pytest.raises(InvalidParameterError):
        default_threshold(1.0, 12, 128, 0.0)


def test_k_threshold():
    assert estimate_k_threshold(_spec([9, 7, 0.3, 0.1, -0.2]), 1.0) == 2
    assert estimate_k_threshold(_spec([0.5, 0.1, -0.2]), 1.0) == 0
    assert estimate_k_threshold(_spec([9, 8, 7, 6]), 1.0) == 3


def test_esprit_single_user():
    a = make_pilot(np.pi / 3, 12, 0.5, 1.0)
    U = (a / np.linalg.norm(a))[:, None] * np.exp(0.7j)
    mu = shift_invariance_eigenvalues(U)
    assert mu[0] == pytest.approx(np.exp(-1j * np.pi / 2), abs=1e-12)
    assert esprit_phases(U, 0.5)[0] == pytest.approx(np.pi / 3, abs=1e-10)


def test_phase_inversion_ramp_free_signature():
    assert phases_from_eigenvalues([1.0 + 0j], 0.5)[0] == pytest.approx(np.pi / 2)


def test_esprit_errors():
    with pytest.raises(InvalidParameterError):
        esprit_phases(np.eye(4, 4))
    U = np.zeros((5, 2), complex)
    U[0, 0] = U[4, 1] = 1  # shifted blocks are rank one
    with pytest.raises(DegenerateSubspaceError):
        shift_invariance_eigenvalues(U)


@settings(max_examples=200, deadline=None)
@given(phi=st.floats(1e-3, np.pi - 1e-3), delta=st.floats(0.05, 0.5),
       radius=st.floats(0.5, 2.0))
def test_inversion_matches_arccos_form(phi, delta, radius):
    mu = radius * phase_step(phi, delta)
    naive = np.arccos(np.clip(-np.angle(mu) / (2 * np.pi * delta), -1, 1))
    assert phases_from_eigenvalues([mu], delta)[0] == pytest.approx(naive, abs=1e-9)
    assert naive == pytest.approx(phi, abs=1e-7)


def test_wrap_cut_keeps_last_signature_at_pi():
    sig = assign_signatures(100)
    cut = wrap_cut(sig, 0.5)
    assert np.pi < cut < np.pi + 0.01
    # round-off on the far side of -1
    mu = np.exp(1j * (np.pi + 1e-14))
    assert phases_from_eigenvalues([mu], 0.5, cut)[0] == pytest.approx(np.pi, abs=1e-12)
    assert phases_from_eigenvalues([mu], 0.5)[0] < 1e-6  # principal branch flips to phi ~ 0
    assert match_active_set(phases_from_eigenvalues([mu], 0.5, cut), sig) == {100}


def test_match_active_set():
    sig = assign_signatures(100)
    assert match_active_set([sig[36]], sig) == {37}
    assert match_active_set([sig[11] + 1e-4, sig[11] - 1e-4], sig) == {12}
    assert match_active_set([0.5 * (sig[3] + sig[4])], sig) == {4}
    assert match_active_set([], sig) == frozenset()


@pytest.mark.parametrize("seed", range(20))
def test_detect_exact_covariance(seed):
    book, scene, S = _paper_cov(seed)
    rep = detect(book, 1.0, cov=S, policy=IDEAL)
    assert rep.k_hat == 5
    assert rep.active_set_hat == scene.activity.active_set


def test_detect_exact_covariance_all_k():
    rng = np.random.default_rng(4)
    book = build_pilot_book(30, 9)
    for K in range(0, 9):
        users = rng.choice(30, K, replace=False) + 1
        S = ideal_covariance(book, users, rng.uniform(0.2, 5, 30), 0.8)
        assert detect(book, 0.8, cov=S, policy=IDEAL).active_set_hat == set(users.tolist())


def test_detect_ideal_policy_rejects_full_rank_noise(rng):
    book = build_pilot_book(20, 6)
    with pytest.raises(InvalidParameterError):
        detect(book, 0.0, Y=complex_normal(rng, (6, 64)), policy=IDEAL)


def test_detect_needs_designed_pilots(rng):
    from covdetect.pilot import gaussian_pilot_book
    with pytest.raises(InvalidParameterError):
        detect(gaussian_pilot_book(10, 4, 1.0, rng), 1.0, cov=np.eye(4), policy=IDEAL)


def test_noise_only_false_alarm_rate(rng):
    book = build_pilot_book(100, 12)
    empty = sum(detect(book, 1.0, Y=complex_normal(rng, (12, 128))).k_hat == 0
                for _ in range(400))
    assert empty / 400 >= 0.95


def test_scale_equivariance():
    book = build_pilot_book(40, 10)
    users = [3, 11, 25, 38]
    betas = np.linspace(1, 4, 40)
    r1 = detect(book, 1.0, cov=ideal_covariance(book, users, betas, 1.0), policy=IDEAL)
    r2 = detect(book, 1.0, cov=ideal_covariance(book, users, 7.5 * betas, 1.0), policy=IDEAL)
    assert np.allclose(np.sort(r1.phases), np.sort(r2.phases), atol=1e-10)
    s1, s2 = r1.spectrum.eigenvalues[:4], r2.spectrum.eigenvalues[:4]
    assert np.allclose(s2 / s1, 7.5, rtol=1e-10)


def test_permutation_invariance():
    # relabel users by swapping their gains: same signature multiset
    book = build_pilot_book(30, 8)
    betas = np.linspace(1, 3, 30)
    swapped = betas.copy()
    swapped[[4, 20]] = betas[[20, 4]]
    users = [5, 13, 21]
    r1 = detect(book, 1.0, cov=ideal_covariance(book, users, betas, 1.0), policy=IDEAL)
    r2 = detect(book, 1.0, cov=ideal_covariance(book, users, swapped, 1.0), policy=IDEAL)
    assert np.allclose(np.sort(r1.phases), np.sort(r2.phases), atol=1e-10)


def test_unit_modulus_in_ideal_case():
    book = build_pilot_book(50, 12)
    S = ideal_covariance(book, [2, 19, 33, 40, 47], np.linspace(1, 2, 50), 1.0)
    mu = detect(book, 1.0, cov=S, policy=IDEAL).psi_eigenvalues
    assert np.allclose(np.abs(mu), 1, atol=1e-10)


def test_policy_parsing():
    assert ThresholdPolicy.parse("ideal") == IDEAL
    assert ThresholdPolicy.parse("mp:2") == ThresholdPolicy("mp", 2.0)
    assert ThresholdPolicy.parse("fixed:0.8") == ThresholdPolicy("fixed", 0.8)
    for bad in ("fixed", "mp:x", "other", "mp:-1"):
        with pytest.raises(InvalidParameterError):
            ThresholdPolicy.parse(bad)
