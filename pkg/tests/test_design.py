import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nfisac.array import ArrayConfig, Dictionary, SteeringParams, build_dictionary, steering_vector
from nfisac.channel import array_response, optimal_beamformer
from nfisac.design import (
    TradeoffConfig,
    bsa_baseband,
    design_hybrid,
    fd_isac_beamformer,
    jrc_beamformer,
    ls_baseband,
    normalize_baseband,
    omp_select,
    procrustes_rows,
    radar_beamformer,
    sd_analog,
    update_pi,
)

from conftest import crandn, random_row_orthonormal

CFG = ArrayConfig.half_wavelength(16, 300e9)


def random_dictionary(rng, n_t, n_atoms):
    phases = rng.uniform(-np.pi, np.pi, (n_t, n_atoms))
    grid = [SteeringParams(0.0, float(j + 1)) for j in range(n_atoms)]
    return Dictionary(np.exp(1j * phases) / np.sqrt(n_t), grid, phases)


def dft_dictionary(n):
    k = np.arange(n)
    phases = 2 * np.pi * np.outer(k, k) / n
    return Dictionary(np.exp(1j * phases) / np.sqrt(n), [SteeringParams(0.0, float(j + 1)) for j in range(n)], phases)


# --- TradeoffConfig ---------------------------------------------------------


def test_tradeoff_validation():
    TradeoffConfig(0.0, 4, 2, 2).check_array(4)
    for bad in [dict(epsilon=-0.1), dict(epsilon=1.1), dict(num_targets=5), dict(num_streams=9)]:
        with pytest.raises(ValueError):
            TradeoffConfig(**bad)
    with pytest.raises(ValueError):
        TradeoffConfig(0.5, 8, 4, 3).check_array(4)


# --- radar / JRC -------------------------------------------------------------


def test_radar_beamformer(rng):
    F = radar_beamformer([SteeringParams(0.0, 10.0)], CFG)
    assert F.shape == (16, 1)
    np.testing.assert_array_equal(F[:, 0], steering_vector(CFG, (0.0, 10.0)))
    targets = [SteeringParams(rng.uniform(-1, 1), rng.uniform(0.1, 5)) for _ in range(3)]
    F = radar_beamformer(targets, CFG)
    np.testing.assert_allclose(F, np.column_stack([steering_vector(CFG, t) for t in targets]), atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(F, axis=0), 1.0, atol=1e-12)
    with pytest.warns(UserWarning, match="duplicate"):
        radar_beamformer([targets[0], targets[0]], CFG)
    with pytest.raises(ValueError):
        radar_beamformer([], CFG)


def test_jrc_beamformer(rng):
    F_opt, F_R, Pi = crandn(rng, 16, 3), crandn(rng, 16, 2), crandn(rng, 2, 3)
    np.testing.assert_array_equal(jrc_beamformer(F_opt, F_R, Pi, 1.0), F_opt)
    np.testing.assert_allclose(jrc_beamformer(F_opt, F_R, Pi, 0.0), F_R @ Pi, atol=1e-12)
    out = jrc_beamformer(F_opt, F_R, Pi, 0.5)
    for i, j in itertools.product(range(16), range(3)):
        expected = 0.5 * F_opt[i, j] + 0.5 * sum(F_R[i, k] * Pi[k, j] for k in range(2))
        assert abs(out[i, j] - expected) <= 1e-12
    with pytest.raises(ValueError):
        jrc_beamformer(F_opt, F_R, crandn(rng, 2, 2), 0.5)


# --- OMP ---------------------------------------------------------------------


def brute_force_omp(atoms, residuals):
    best, best_score = 0, -1.0
    for p in range(atoms.shape[1]):
        score = 0.0
        for R in residuals:
            for j in range(R.shape[1]):
                score += abs(np.sum(atoms[:, p].conj() * R[:, j])) ** 2
        if score > best_score:
            best, best_score = p, score
    return best


def test_omp_matches_brute_force(rng):
    for _ in range(50):
        d = random_dictionary(rng, 4, 8)
        residuals = [crandn(rng, 4, 2) for _ in range(3)]
        assert omp_select(d, residuals) == brute_force_omp(d.atoms, residuals)
        assert omp_select(d, [7.5j * R for R in residuals]) == omp_select(d, residuals)


def test_omp_perfect_match(rng):
    d = random_dictionary(rng, 16, 20)
    R = np.zeros((16, 2), complex)
    R[:, 1] = 3 * d.atoms[:, 13]
    assert omp_select(d, [R]) == 13


def test_omp_exclusion_and_ties(rng):
    d = random_dictionary(rng, 8, 6)
    R = [crandn(rng, 8, 2)]
    first = omp_select(d, R)
    second = omp_select(d, R, exclude=[first])
    assert second != first
    tied = Dictionary(np.column_stack([d.atoms[:, 0]] * 3), d.grid[:3])
    assert omp_select(tied, R) == 0
    with pytest.raises(ValueError):
        omp_select(tied, R, exclude=[0, 1, 2])


def test_omp_zero_residual_warns(rng):
    d = random_dictionary(rng, 8, 5)
    with pytest.warns(UserWarning, match="degenerate"):
        assert omp_select(d, [np.zeros((8, 2))]) == 0


# --- least squares -----------------------------------------------------------


def test_ls_baseband(rng):
    Q, _ = np.linalg.qr(crandn(rng, 16, 4))
    C = crandn(rng, 16, 2)
    np.testing.assert_allclose(ls_baseband(Q, C), Q.conj().T @ C, atol=1e-12)
    B = crandn(rng, 4, 2)
    A = crandn(rng, 16, 4)
    assert np.linalg.norm(A @ ls_baseband(A, A @ B) - A @ B) <= 1e-10
    A, C = crandn(rng, 8, 4), crandn(rng, 8, 3)
    oracle = np.linalg.solve(A.conj().T @ A, A.conj().T @ C)
    np.testing.assert_allclose(ls_baseband(A, C), oracle, atol=1e-10)


def test_ls_baseband_rank_deficient(rng):
    a = crandn(rng, 8, 1)
    A = np.column_stack([a, a])
    C = crandn(rng, 8, 2)
    with pytest.warns(UserWarning, match="rank-deficient"):
        B = ls_baseband(A, C)
    np.testing.assert_allclose(B, np.linalg.pinv(A) @ C, atol=1e-10)
    np.testing.assert_allclose(B[0], B[1], atol=1e-12)  # minimum-norm splits evenly


def test_normalize_baseband(rng):
    A, B = crandn(rng, 16, 4), crandn(rng, 4, 3)
    out = normalize_baseband(A, B)
    assert np.linalg.norm(A @ out) == pytest.approx(np.sqrt(3), abs=1e-12)
    np.testing.assert_allclose(normalize_baseband(A, out), out, atol=1e-12)
    np.testing.assert_allclose(normalize_baseband(A, 7 * B), out, atol=1e-12)
    assert np.linalg.norm(A @ normalize_baseband(A, B, 2)) == pytest.approx(np.sqrt(2), abs=1e-12)
    with pytest.raises(ValueError):
        normalize_baseband(A, np.zeros((4, 3)))


# --- Procrustes --------------------------------------------------------------


def pi_objective(F_R, F_RF, F_BB, F_opt, eps, Pi):
    return np.linalg.norm(F_RF @ F_BB - eps * F_opt - (1 - eps) * F_R @ Pi)


def test_update_pi_row_orthonormal(rng):
    for _ in range(20):
        K, MN = 2, 8
        Pi = update_pi(crandn(rng, 16, K), crandn(rng, 16, 4), crandn(rng, 4, MN), crandn(rng, 16, MN), 0.3)
        np.testing.assert_allclose(Pi @ Pi.conj().T, np.eye(K), atol=1e-10)


def test_update_pi_fixed_point(rng):
    # with F_RF F_BB = F_R Q + eps F_opt we get T = F_R Q/(1-eps) ... choose F_R orthonormal so F_R^H T = Q
    F_R, _ = np.linalg.qr(crandn(rng, 16, 2))
    Q = random_row_orthonormal(rng, 2, 6)
    eps = 0.4
    F_opt = crandn(rng, 16, 6)
    target = (1 - eps) * F_R @ Q + eps * F_opt
    Pi = update_pi(F_R, np.eye(16), target, F_opt, eps)
    np.testing.assert_allclose(Pi, Q, atol=1e-10)


def test_update_pi_beats_random_samples(rng):
    F_R, F_RF = crandn(rng, 16, 2), crandn(rng, 16, 4)
    F_BB, F_opt = crandn(rng, 4, 6), crandn(rng, 16, 6)
    eps = 0.5
    best = pi_objective(F_R, F_RF, F_BB, F_opt, eps, update_pi(F_R, F_RF, F_BB, F_opt, eps))
    for _ in range(1000):
        assert best <= pi_objective(F_R, F_RF, F_BB, F_opt, eps, random_row_orthonormal(rng, 2, 6)) + 1e-12


def test_update_pi_edge_cases(rng):
    prev = random_row_orthonormal(rng, 2, 4)
    assert update_pi(crandn(rng, 16, 2), crandn(rng, 16, 4), crandn(rng, 4, 4), crandn(rng, 16, 4), 1.0, prev) is prev
    with pytest.raises(ValueError):
        update_pi(crandn(rng, 16, 3), crandn(rng, 16, 4), crandn(rng, 4, 2), crandn(rng, 16, 2), 0.5)


def test_procrustes_rows_is_polar_factor(rng):
    A = crandn(rng, 3, 7)
    Q = procrustes_rows(A)
    # Q^H-weighted A is Hermitian PSD: A Q^H = (A A^H)^{1/2}
    P = A @ Q.conj().T
    np.testing.assert_allclose(P, P.conj().T, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(P) > 0)


# --- SD analog and BSA -------------------------------------------------------


def test_sd_analog_examples(rng):
    F = np.exp(1j * rng.uniform(-np.pi, np.pi, (16, 4))) / 4
    np.testing.assert_array_equal(sd_analog(F, 1.0), F)
    one = np.full((16, 4), np.exp(1j * np.pi / 4) / 4)
    np.testing.assert_allclose(np.angle(sd_analog(one, 2.0)), np.pi / 2, atol=1e-14)
    np.testing.assert_allclose(np.abs(sd_analog(F, 1.03)), 0.25, atol=1e-15)
    with pytest.raises(ValueError):
        sd_analog(np.zeros((4, 2)), 1.0)
    with pytest.raises(ValueError):
        sd_analog(F, 1.0, phases=np.zeros((3, 3)))


def test_sd_analog_with_continuous_phase_tracks_squint(rng):
    d = build_dictionary(CFG, 9, 3, (0.05, 0.4))
    sel = [2, 11, 20]
    F = d.atoms[:, sel]
    for eta in (0.95, 1.04):
        sd = sd_analog(F, eta, d.phases[:, sel])
        expected = np.column_stack([array_response(CFG, d.grid[j], eta) for j in sel])
        np.testing.assert_allclose(sd, expected, atol=1e-12)


def test_bsa_baseband(rng):
    F_RF = np.exp(1j * rng.uniform(-np.pi, np.pi, (16, 4))) / 4
    F_BB = crandn(rng, 4, 2)
    np.testing.assert_allclose(bsa_baseband(F_RF, F_RF, F_BB), F_BB, atol=1e-10)
    sd = sd_analog(F_RF, 1.05)
    bsa = bsa_baseband(F_RF, sd, F_BB)
    assert np.linalg.norm(F_RF @ bsa - sd @ F_BB) <= np.linalg.norm(F_RF @ F_BB - sd @ F_BB)
    square = np.exp(1j * rng.uniform(-np.pi, np.pi, (8, 8))) / np.sqrt(8)
    sd = sd_analog(square, 0.97)
    F_BB = crandn(rng, 8, 2)
    assert np.linalg.norm(square @ bsa_baseband(square, sd, F_BB) - sd @ F_BB) <= 1e-10


# --- Algorithm ---------------------------------------------------------------


def _design_inputs(rng, n_t=16, M=3, n_s=2, K=2, paths=3):
    cfg = ArrayConfig.half_wavelength(n_t, 300e9)
    d = build_dictionary(cfg, 17, 4, (0.02, cfg.fraunhofer_distance))
    F_opt = [optimal_beamformer(crandn(rng, 4, n_t), n_s) for _ in range(M)]
    targets = [SteeringParams(rng.uniform(-0.8, 0.8), rng.uniform(0.02, 0.1)) for _ in range(K)]
    return cfg, d, F_opt, radar_beamformer(targets, cfg)


def test_design_single_atom_exact(rng):
    d = random_dictionary(rng, 8, 6)
    F_opt = [d.atoms[:, [4]].copy()]
    tr = TradeoffConfig(1.0, 1, 1, 1)
    out = design_hybrid(d, F_opt, crandn(rng, 8, 1), tr, [1.0])
    assert out.selected_atoms == [4]
    best = min(np.linalg.norm(d.atoms[:, [p]] @ ls_baseband(d.atoms[:, [p]], F_opt[0]) - F_opt[0]) for p in range(6))
    assert out.residual_history[0] <= best + 1e-12


def test_design_complete_dictionary_exact():
    rng = np.random.default_rng(3)
    n = 8
    F_opt = [optimal_beamformer(crandn(rng, 4, n), 2)]
    out = design_hybrid(dft_dictionary(n), F_opt, crandn(rng, n, 1), TradeoffConfig(1.0, n, 2, 1), [1.0])
    assert np.linalg.norm(out.analog @ out.baseband[0] - F_opt[0]) <= 1e-6


@pytest.mark.parametrize("eps", [0.0, 0.3, 0.5, 1.0])
def test_design_invariants(rng, eps):
    cfg, d, F_opt, F_R = _design_inputs(rng)
    etas = [1.02, 1.0, 0.98]
    out = design_hybrid(d, F_opt, F_R, TradeoffConfig(eps, 4, 2, 2), etas)
    assert len(set(out.selected_atoms)) == len(out.selected_atoms) == out.analog.shape[1]
    np.testing.assert_allclose(np.abs(out.analog), 1 / np.sqrt(16), atol=1e-12)
    for B, Bb in zip(out.baseband, out.bsa_baseband):
        assert np.linalg.norm(out.analog @ B) ** 2 == pytest.approx(2.0, rel=1e-10)
        assert np.linalg.norm(out.analog @ Bb) ** 2 == pytest.approx(2.0, rel=1e-10)
    if eps < 1:
        np.testing.assert_allclose(out.auxiliary @ out.auxiliary.conj().T, np.eye(2), atol=1e-10)
        assert len(out.auxiliary_blocks()) == 3
    else:
        assert out.auxiliary is None
    for S, B, raw in zip(out.sd_analog, out.baseband, out.bsa_raw):
        assert np.linalg.norm(out.analog @ raw - S @ B) <= np.linalg.norm(out.analog @ B - S @ B) + 1e-12
    assert np.all(np.isfinite(out.residual_history))
    assert len(out.precoders()) == 3


def test_fit_non_increasing_with_fixed_target(rng):
    cfg, d, F_opt, F_R = _design_inputs(rng)
    out = design_hybrid(d, F_opt, F_R, TradeoffConfig(1.0, 6, 2, 2), [1.0] * 3)
    assert np.all(np.diff(out.fit_history) <= 1e-12)


def test_bsa_noop_at_unit_eta(rng):
    cfg, d, F_opt, F_R = _design_inputs(rng)
    out = design_hybrid(d, F_opt, F_R, TradeoffConfig(0.5, 4, 2, 2), [1.0] * 3)
    for B, Bb in zip(out.baseband, out.bsa_baseband):
        np.testing.assert_allclose(Bb, B, atol=1e-10)


def test_design_errors(rng):
    cfg, d, F_opt, F_R = _design_inputs(rng)
    tr = TradeoffConfig(0.5, 4, 2, 2)
    with pytest.raises(ValueError):
        design_hybrid(d, F_opt, F_R, tr, [1.0])
    with pytest.raises(ValueError):
        design_hybrid(d, F_opt, F_R[:, :1], tr, [1.0] * 3)
    with pytest.raises(ValueError):
        design_hybrid(d, F_opt, F_R, TradeoffConfig(0.5, 17, 2, 2), [1.0] * 3)


def test_extra_sweeps_keep_invariants(rng):
    cfg, d, F_opt, F_R = _design_inputs(rng)
    out = design_hybrid(d, F_opt, F_R, TradeoffConfig(0.5, 4, 2, 2), [1.01, 1.0, 0.99], extra_sweeps=3)
    assert len(out.residual_history) == 4 + 3
    np.testing.assert_allclose(out.auxiliary @ out.auxiliary.conj().T, np.eye(2), atol=1e-10)


def test_fd_isac_beamformer(rng):
    F_opt = [optimal_beamformer(crandn(rng, 4, 16), 2) for _ in range(3)]
    F_R = radar_beamformer([SteeringParams(0.2, 0.1), SteeringParams(-0.4, 0.3)], CFG)
    for eps in (0.0, 0.5):
        for F in fd_isac_beamformer(F_opt, F_R, eps):
            assert np.linalg.norm(F) ** 2 == pytest.approx(2.0, rel=1e-12)
    for F, G in zip(fd_isac_beamformer(F_opt, F_R, 1.0), F_opt):
        np.testing.assert_allclose(F, G, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), eps=st.floats(0, 1), n_rf=st.integers(2, 5), M=st.integers(1, 4))
def test_design_invariants_property(seed, eps, n_rf, M):
    rng = np.random.default_rng(seed)
    cfg, d, F_opt, F_R = _design_inputs(rng, M=M)
    etas = list(1 + 0.05 * rng.uniform(-1, 1, M))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = design_hybrid(d, F_opt, F_R, TradeoffConfig(eps, n_rf, 2, 2), etas)
    np.testing.assert_allclose(np.abs(out.analog), 1 / np.sqrt(16), atol=1e-12)
    for B in out.bsa_baseband:
        assert np.linalg.norm(out.analog @ B) ** 2 == pytest.approx(2.0, rel=1e-10)
    if eps < 1:
        np.testing.assert_allclose(out.auxiliary @ out.auxiliary.conj().T, np.eye(2), atol=1e-10)
