"""Transmit covariance, radar beampattern, spectral efficiency, design residual."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array import ArrayConfig


@dataclass
class BeampatternGrid:
    directions: np.ndarray
    ranges: np.ndarray
    gains: np.ndarray  # (n_directions, n_ranges), or (M, n_directions, n_ranges)


def transmit_covariance(F_RF, F_BB, num_streams: int) -> np.ndarray:
    "R_x = F_RF F_BB F_BB^H F_RF^H / N_S."
    F = F_RF @ F_BB
    return F @ F.conj().T / num_streams


def probe_matrix(cfg: ArrayConfig, directions, ranges, eta: float = 1.0) -> np.ndarray:
    """Array responses for every (direction, range) pair, shape (N_T, n_dir * n_rng).

    Column order is direction-major, matching :func:`array_response` per point.
    """
    P, R = np.meshgrid(np.asarray(directions, float), np.asarray(ranges, float), indexing="ij")
    P, R = P.ravel(), R.ravel()
    if np.any(np.abs(P) > 1) or np.any(R <= 0):
        raise ValueError("probe directions must lie in [-1, 1] and ranges be positive")
    delta = np.arange(cfg.num_elements)[:, None] * cfg.spacing
    k = 2.0 * np.pi * cfg.carrier_frequency * eta / cfg.speed_of_light
    phase = k * (delta * P - delta**2 * ((1.0 - P**2) / (2.0 * R)))
    return np.exp(1j * phase) / np.sqrt(cfg.num_elements)


def beampattern(R_x, directions, ranges, cfg: ArrayConfig, frequency: float | None = None) -> BeampatternGrid:
    """Gain a^H R_x a over a direction x range probe grid.

    Probes are the array responses at ``frequency`` (carrier if omitted), so
    at a subcarrier the pattern shows where power actually lands once
    squint is accounted for.
    """
    directions = np.asarray(directions, dtype=float)
    ranges = np.asarray(ranges, dtype=float)
    eta = 1.0 if frequency is None else cfg.carrier_frequency / frequency
    A = probe_matrix(cfg, directions, ranges, eta)
    g = np.einsum("ip,ij,jp->p", A.conj(), R_x, A).real
    g = np.maximum(g, 0.0)
    return BeampatternGrid(directions, ranges, g.reshape(len(directions), len(ranges)))


def spectral_efficiency(H_per_m, F_RF, F_BB_per_m, noise_variance: float, num_streams: int) -> float:
    """Average log-det rate over subcarriers, bits/s/Hz.

    ``F_RF`` may be ``None`` when ``F_BB_per_m`` already holds full
    (fully-digital) precoders.
    """
    if noise_variance <= 0:
        raise ValueError("noise_variance must be positive")
    total = 0.0
    for H, F_BB in zip(H_per_m, F_BB_per_m):
        F = F_BB if F_RF is None else F_RF @ F_BB
        HF = H @ F
        G = np.eye(H.shape[0]) + HF @ HF.conj().T / (num_streams * noise_variance)
        sign, logdet = np.linalg.slogdet(G)
        if not np.isfinite(logdet) or sign.real <= 0:
            raise FloatingPointError("non-finite log-determinant in spectral efficiency")
        total += logdet / np.log(2.0)
    return total / len(H_per_m)


def design_residual(F_RF, F_BB_per_m, F_CR_per_m) -> float:
    "Sum over subcarriers of ||F_RF F_BB[m] - F_CR[m]||_F."
    return float(sum(np.linalg.norm(F_RF @ B - C) for B, C in zip(F_BB_per_m, F_CR_per_m)))
