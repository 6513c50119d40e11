"""Hybrid ISAC beamformer design with beam-squint-aware baseband compensation.

The analog beamformer is built greedily from dictionary atoms (OMP) to fit
the joint radar-communication target

    F_CR[m] = eps F_opt[m] + (1 - eps) F_R Pi[m],

alternating with least-squares baseband solves and an orthogonal
Procrustes update of the stacked auxiliary matrix Pi. After the greedy
loop, the baseband of every subcarrier is re-solved so that the fixed
analog weights emulate a subcarrier-dependent analog beamformer whose
phases are scaled by eta_m = f_c / f_m.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .array import ArrayConfig, Dictionary, SteeringParams, far_field_steering, steering_vector


class NumericalError(FloatingPointError):
    """A non-finite intermediate appeared during design."""


@dataclass(frozen=True)
class TradeoffConfig:
    epsilon: float = 0.5
    num_rf_chains: int = 8
    num_streams: int = 4
    num_targets: int = 3

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 1 <= self.num_targets <= self.num_streams <= self.num_rf_chains:
            raise ValueError("need 1 <= K <= N_S <= N_RF")

    def check_array(self, num_elements: int):
        if self.num_rf_chains > num_elements:
            raise ValueError(f"N_RF={self.num_rf_chains} exceeds N_T={num_elements}")


@dataclass
class HybridDesign:
    """Output of :func:`design_hybrid`.

    ``baseband`` and ``bsa_baseband`` are both power-normalized so that
    ``||analog @ B||_F^2 = N_S`` on every subcarrier. ``bsa_raw`` keeps the
    un-normalized least-squares compensation.
    """

    analog: np.ndarray
    baseband: list[np.ndarray]
    bsa_baseband: list[np.ndarray]
    auxiliary: np.ndarray | None
    selected_atoms: list[int]
    sd_analog: list[np.ndarray] = field(default_factory=list)
    bsa_raw: list[np.ndarray] = field(default_factory=list)
    jrc: list[np.ndarray] = field(default_factory=list)
    residual_history: list[float] = field(default_factory=list)
    fit_history: list[float] = field(default_factory=list)

    @property
    def num_subcarriers(self) -> int:
        return len(self.baseband)

    def auxiliary_blocks(self) -> list[np.ndarray]:
        "Per-subcarrier K x N_S slices of the stacked auxiliary matrix."
        if self.auxiliary is None:
            return []
        return np.split(self.auxiliary, self.num_subcarriers, axis=1)

    def precoders(self, bsa: bool = True) -> list[np.ndarray]:
        bases = self.bsa_baseband if bsa else self.baseband
        return [self.analog @ B for B in bases]


def radar_beamformer(targets: Sequence[SteeringParams], cfg: ArrayConfig, far_field: bool = False) -> np.ndarray:
    "One carrier-frequency steering column per target."
    if len(targets) < 1:
        raise ValueError("need at least one target")
    if len(set(map(tuple, targets))) < len(targets):
        warnings.warn("duplicate radar targets", stacklevel=2)
    if far_field:
        cols = [far_field_steering(cfg, SteeringParams(*t).validate().direction) for t in targets]
    else:
        cols = [steering_vector(cfg, SteeringParams(*t)) for t in targets]
    return np.stack(cols, axis=1)


def jrc_beamformer(F_opt, F_R, Pi, epsilon: float) -> np.ndarray:
    "eps F_opt + (1 - eps) F_R Pi; the radar term is skipped at eps = 1."
    if epsilon == 1.0:
        return np.array(F_opt, dtype=complex)
    radar = F_R @ Pi
    if epsilon == 0.0:
        return radar
    if F_opt.shape != radar.shape:
        raise ValueError(f"shape mismatch: F_opt {F_opt.shape} vs F_R Pi {radar.shape}")
    return epsilon * F_opt + (1.0 - epsilon) * radar


def omp_scores(atoms: np.ndarray, residuals: Sequence[np.ndarray]) -> np.ndarray:
    "sum_m ||a_p^H R[m]||^2 for every atom p."
    R = np.concatenate(list(residuals), axis=1)
    return np.sum(np.abs(atoms.conj().T @ R) ** 2, axis=1)


def omp_select(dictionary: Dictionary, residuals: Sequence[np.ndarray], exclude: Sequence[int] = ()) -> int:
    """Index of the atom with the largest correlation energy over all subcarriers.

    Ties go to the lowest index. Atoms in ``exclude`` are never returned.
    """
    scores = omp_scores(dictionary.atoms, residuals)
    mask = np.ones(len(scores), dtype=bool)
    mask[list(exclude)] = False
    if not mask.any():
        raise ValueError("every dictionary atom is excluded")
    if not np.any(scores[mask] > 0):
        warnings.warn("all-zero residual; selection is degenerate", stacklevel=2)
        return int(np.flatnonzero(mask)[0])
    scores = np.where(mask, scores, -np.inf)
    return int(np.argmax(scores))


def _pinv(A: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    keep = s > rtol * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    if keep.sum() < A.shape[1]:
        warnings.warn(
            f"rank-deficient analog beamformer (rank {keep.sum()} < {A.shape[1]}); "
            "using the minimum-norm solution",
            stacklevel=3,
        )
    return (Vh[keep].conj().T / s[keep]) @ U[:, keep].conj().T


def ls_baseband(F_RF: np.ndarray, F_CR: np.ndarray) -> np.ndarray:
    "Least-squares baseband minimizing ||F_RF F_BB - F_CR||_F."
    return _pinv(F_RF) @ F_CR


def normalize_baseband(F_RF: np.ndarray, F_BB: np.ndarray, num_streams: int | None = None) -> np.ndarray:
    "Scale F_BB so that ||F_RF F_BB||_F = sqrt(N_S); N_S defaults to F_BB's column count."
    n_s = F_BB.shape[1] if num_streams is None else num_streams
    norm = np.linalg.norm(F_RF @ F_BB)
    if not norm > 0:
        raise ValueError("cannot normalize a zero hybrid beamformer")
    return np.sqrt(n_s) * F_BB / norm


def procrustes_rows(A: np.ndarray) -> np.ndarray:
    """Row-orthonormal Q (Q Q^H = I) maximizing Re tr(Q^H A), i.e. U V^H of A = U S V^H."""
    U, _, Vh = np.linalg.svd(A, full_matrices=False)
    return U @ Vh


def update_pi(F_R, F_RF, F_BB_stack, F_opt_stack, epsilon: float, previous=None) -> np.ndarray:
    """Stacked auxiliary matrix minimizing the JRC fit over row-orthonormal Pi.

    With ``T = (F_RF F_BB - eps F_opt) / (1 - eps)`` the objective reduces to
    ``||T - F_R Pi||_F``; because ``Pi Pi^H = I_K`` fixes ``||F_R Pi||_F``,
    the optimum is the polar factor of ``F_R^H T``.
    """
    if epsilon == 1.0:
        return previous
    K = F_R.shape[1]
    if K > F_BB_stack.shape[1]:
        raise ValueError("K must not exceed M * N_S")
    T = F_RF @ F_BB_stack
    if epsilon != 0.0:
        T = (T - epsilon * F_opt_stack) / (1.0 - epsilon)
    return procrustes_rows(F_R.conj().T @ T)


def initial_pi(F_R, F_opt_stack) -> np.ndarray:
    "Pi aligning the radar beams with the comm-only precoders: polar factor of F_R^H F_opt."
    return procrustes_rows(F_R.conj().T @ F_opt_stack)


def sd_analog(F_RF: np.ndarray, eta: float, phases: np.ndarray | None = None) -> np.ndarray:
    """Subcarrier-dependent analog beamformer exp(j eta angle(F_RF)) / sqrt(N_T).

    ``phases`` supplies the continuous phase of each entry. Without it the
    principal value in (-pi, pi] is used, which only scales the wrapped
    residue and so does not track the squint of long arrays.
    """
    if np.any(F_RF == 0):
        raise ValueError("zero entries have no phase")
    if phases is None:
        if eta == 1.0:
            return np.array(F_RF, dtype=complex)
        phases = np.angle(F_RF)
    elif phases.shape != F_RF.shape:
        raise ValueError("phases must match F_RF in shape")
    return np.exp(1j * eta * phases) / np.sqrt(F_RF.shape[0])


def bsa_baseband(F_RF: np.ndarray, F_RF_sd: np.ndarray, F_BB: np.ndarray) -> np.ndarray:
    "Baseband making F_RF F~_BB the least-squares match of F_RF_sd F_BB (not power-normalized)."
    return ls_baseband(F_RF, F_RF_sd @ F_BB)


def fd_isac_beamformer(F_opt_per_m: Sequence[np.ndarray], F_R: np.ndarray, epsilon: float) -> list[np.ndarray]:
    "Fully-digital JRC precoders, each scaled to ||F||_F^2 = N_S."
    stack = np.concatenate(list(F_opt_per_m), axis=1)
    M = len(F_opt_per_m)
    blocks = np.split(initial_pi(F_R, stack), M, axis=1) if epsilon < 1 else [None] * M
    out = []
    for F_opt, Pi in zip(F_opt_per_m, blocks):
        F = jrc_beamformer(F_opt, F_R, Pi, epsilon)
        out.append(np.sqrt(F.shape[1]) * F / np.linalg.norm(F))
    return out


def _finite(name, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalError(f"non-finite values in {name}")


def design_hybrid(
    dictionary: Dictionary,
    F_opt_per_m: Sequence[np.ndarray],
    F_R: np.ndarray,
    tradeoff: TradeoffConfig,
    etas: Sequence[float],
    extra_sweeps: int = 0,
    continuous_phase: bool = True,
) -> HybridDesign:
    """Alternating OMP design of the hybrid ISAC beamformer.

    ``continuous_phase`` feeds the atoms' unwrapped phases to
    :func:`sd_analog` (when the dictionary carries them); otherwise wrapped
    phases are scaled.
    """
    M = len(F_opt_per_m)
    if M != len(etas):
        raise ValueError("need one eta per subcarrier")
    N_T = dictionary.atoms.shape[0]
    tradeoff.check_array(N_T)
    if F_R.shape != (N_T, tradeoff.num_targets):
        raise ValueError(f"F_R must be {N_T} x {tradeoff.num_targets}")
    n_s = tradeoff.num_streams
    eps = tradeoff.epsilon
    F_opt_stack = np.concatenate(list(F_opt_per_m), axis=1)
    if F_opt_stack.shape != (N_T, M * n_s):
        raise ValueError(f"each F_opt must be {N_T} x {n_s}")

    Pi = initial_pi(F_R, F_opt_stack) if eps < 1 else None

    def targets(Pi):
        blocks = np.split(Pi, M, axis=1) if Pi is not None else [None] * M
        return [jrc_beamformer(F, F_R, P, eps) for F, P in zip(F_opt_per_m, blocks)]

    F_CR = targets(Pi)
    residual = [C.copy() for C in F_CR]
    selected: list[int] = []
    history: list[float] = []
    fit_history: list[float] = []
    F_RF = np.zeros((N_T, 0), dtype=complex)
    F_BB: list[np.ndarray] = []

    for _ in range(tradeoff.num_rf_chains):
        p = omp_select(dictionary, residual, exclude=selected)
        selected.append(p)
        F_RF = dictionary.atoms[:, selected]
        F_BB = [ls_baseband(F_RF, C) for C in F_CR]
        _finite("baseband", *F_BB)
        fit_history.append(sum(np.linalg.norm(C - F_RF @ B) for C, B in zip(F_CR, F_BB)))
        if eps < 1.0:
            Pi = update_pi(F_R, F_RF, np.concatenate(F_BB, axis=1), F_opt_stack, eps, Pi)
            _finite("auxiliary", Pi)
            F_CR = targets(Pi)
        diff = [C - F_RF @ B for C, B in zip(F_CR, F_BB)]
        norms = [np.linalg.norm(D) for D in diff]
        history.append(float(sum(norms)))
        scale = max(np.linalg.norm(C) for C in F_CR)
        if max(norms) <= 1e-12 * scale:
            break
        residual = [D / n if n > 0 else D for D, n in zip(diff, norms)]

    for _ in range(extra_sweeps):
        F_BB = [ls_baseband(F_RF, C) for C in F_CR]
        if eps < 1.0:
            Pi = update_pi(F_R, F_RF, np.concatenate(F_BB, axis=1), F_opt_stack, eps, Pi)
            F_CR = targets(Pi)
        history.append(float(sum(np.linalg.norm(C - F_RF @ B) for C, B in zip(F_CR, F_BB))))

    F_BB = [normalize_baseband(F_RF, B, n_s) for B in F_BB]
    phases = None
    if continuous_phase and dictionary.phases is not None:
        phases = dictionary.phases[:, selected]
    F_sd = [sd_analog(F_RF, eta, phases) for eta in etas]
    bsa_raw = [bsa_baseband(F_RF, S, B) for S, B in zip(F_sd, F_BB)]
    bsa = [normalize_baseband(F_RF, B, n_s) for B in bsa_raw]
    _finite("design output", F_RF, *F_BB, *bsa)
    return HybridDesign(
        analog=F_RF,
        baseband=F_BB,
        bsa_baseband=bsa,
        auxiliary=Pi,
        selected_atoms=selected,
        sd_analog=F_sd,
        bsa_raw=bsa_raw,
        jrc=F_CR,
        residual_history=history,
        fit_history=fit_history,
    )
