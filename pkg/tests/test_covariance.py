from itertools import combinations

import numpy as np
import pytest

from covdetect.covariance import ideal_covariance, q_matrix, sample_covariance
from covdetect.errors import InvalidParameterError
from covdetect.pilot import build_pilot_book
from covdetect.sim import complex_normal
from covdetect.verify import check_pattern_separation


def test_sample_covariance_trivial():
    assert np.array_equal(sample_covariance(np.zeros((3, 4))).sigma_hat, np.zeros((3, 3)))
    y = np.array([[1 + 1j], [2.0], [-1j]])
    sc = sample_covariance(y)
    assert sc.M_used == 1
    assert np.allclose(sc.sigma_hat, y @ y.conj().T)


def test_sample_covariance_rejects_empty():
    with pytest.raises(InvalidParameterError):
        sample_covariance(np.zeros((3, 0)))


def test_sample_covariance_hermitian_psd(rng):
    Y = complex_normal(rng, (12, 5), 1e6)
    S = sample_covariance(Y).sigma_hat
    assert np.array_equal(S, S.conj().T)
    assert np.linalg.eigvalsh(S).min() >= -np.finfo(float).eps * np.trace(S).real * 12


def test_noise_only_convergence_rate(rng):
    Ms = 2 ** np.arange(3, 11)
    errs = []
    for M in Ms:
        e = [np.linalg.norm(sample_covariance(complex_normal(rng, (12, M))).sigma_hat - np.eye(12))
             for _ in range(100)]
        errs.append(np.mean(e))
    slope = np.polyfit(np.log(Ms), np.log(errs), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.05)


def test_ideal_covariance_no_users():
    book = build_pilot_book(8, 5)
    assert np.allclose(ideal_covariance(book, [], np.ones(8), 2.0), 2 * np.eye(5))


def test_ideal_covariance_single_user():
    p, L, beta, s2 = 3.0, 6, 0.7, 0.5
    book = build_pilot_book(10, L, 0.5, p)
    betas = np.full(10, 9.9)
    betas[3] = beta
    S = ideal_covariance(book, [4], betas, s2)
    a = book.A[:, 3]
    assert np.allclose(S, beta * np.outer(a, a.conj()) + s2 * np.eye(L))
    assert np.linalg.eigvalsh(S)[-1] == pytest.approx(p * L * beta + s2)


def test_sample_covariance_approaches_ideal(rng):
    book = build_pilot_book(20, 8)
    betas = rng.uniform(0.5, 2.0, 20)
    users = [2, 9, 17]
    S = ideal_covariance(book, users, betas, 1.0)
    M = 4096
    H = complex_normal(rng, (3, M), betas[np.array(users) - 1][:, None])
    Y = book.A[:, np.array(users) - 1] @ H + complex_normal(rng, (8, M))
    rel = np.linalg.norm(sample_covariance(Y).sigma_hat - S) / np.linalg.norm(S)
    assert rel < 0.05


def test_q_matrix_rank_and_zero():
    book = build_pilot_book(10, 6)
    betas = np.linspace(0.5, 2, 10)
    Q = q_matrix(ideal_covariance(book, [1, 5, 10], betas, 1.3), 1.3)
    w = np.linalg.eigvalsh(Q)
    assert w.min() > -1e-12 * w.max()
    assert np.count_nonzero(w > 1e-9 * w.max()) == 3
    assert np.allclose(q_matrix(ideal_covariance(book, [], betas, 1.3), 1.3), 0)


def test_q_matrix_noise_only_has_negative_eigenvalues(rng):
    Q = q_matrix(sample_covariance(complex_normal(rng, (12, 128))), 1.0)
    assert np.linalg.eigvalsh(Q).min() < 0


def test_rank_identity_exhaustive():
    N, L = 10, 6
    book = build_pilot_book(N, L)
    betas = np.ones(N)
    for K in range(0, L + 1):
        for users in combinations(range(1, N + 1), K):
            w = np.linalg.eigvalsh(q_matrix(ideal_covariance(book, users, betas, 1.0), 1.0))
            top = max(w.max(), 0.0)
            assert np.count_nonzero(w > 1e-9 * top) == K if K else np.allclose(w, 0)


def test_distinct_patterns_distinct_covariances():
    assert check_pattern_separation(N_max=10, L_max=6).passed
