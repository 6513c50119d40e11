"""Wideband THz multipath channels with near-field beam squint."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array import ArrayConfig, SteeringParams, squint_map, steering_vector


@dataclass(frozen=True)
class Scenario:
    """Sampling law for multipath parameters.

    ``direction_interval`` is in radians; angles are drawn uniformly and
    mapped to sine-angles.
    """

    num_paths: int = 8
    direction_interval: tuple[float, float] = (-np.pi / 3, np.pi / 3)
    range_interval: tuple[float, float] = (5.0, 30.0)
    bandwidth: float = 20e9
    cp_length: int = 16


@dataclass
class PathSet:
    """Per-path parameters; each field is an array of length L."""

    gain: np.ndarray
    delay: np.ndarray
    tx_direction: np.ndarray
    tx_range: np.ndarray
    rx_direction: np.ndarray
    rx_range: np.ndarray

    def __post_init__(self):
        n = len(self.gain)
        if n < 1:
            raise ValueError("need at least one path")
        fields = (self.delay, self.tx_direction, self.tx_range, self.rx_direction, self.rx_range)
        if any(len(f) != n for f in fields):
            raise ValueError("all path fields must have the same length")
        if np.any(self.tx_range <= 0) or np.any(self.rx_range <= 0):
            raise ValueError("path ranges must be positive")
        if np.any(np.abs(self.tx_direction) > 1) or np.any(np.abs(self.rx_direction) > 1):
            raise ValueError("path directions must lie in [-1, 1]")

    def __len__(self) -> int:
        return len(self.gain)


@dataclass
class ChannelRealization:
    per_subcarrier: list[np.ndarray]
    subcarrier_frequencies: np.ndarray
    squint: bool


def subcarrier_frequencies(f_c: float, bandwidth: float, M: int) -> np.ndarray:
    "M subcarriers spaced B/M apart, symmetric about f_c."
    if bandwidth < 0 or M < 1:
        raise ValueError("need bandwidth >= 0 and M >= 1")
    m = np.arange(1, M + 1)
    return f_c + (bandwidth / M) * (m - 1 - (M - 1) / 2.0)


def _check_interval(lo, hi, name):
    if not lo < hi:
        raise ValueError(f"empty {name} interval ({lo}, {hi})")


def sample_targets(rng: np.random.Generator, K: int, direction_interval, range_interval) -> list[SteeringParams]:
    "K radar targets drawn like the path scatterers (angle in radians, range in meters)."
    _check_interval(*direction_interval, "direction")
    _check_interval(*range_interval, "range")
    dirs = np.sin(rng.uniform(*direction_interval, K))
    rngs = rng.uniform(*range_interval, K)
    return [SteeringParams(float(p), float(r)) for p, r in zip(dirs, rngs)]


def sample_paths(rng: np.random.Generator, scenario: Scenario = Scenario()) -> PathSet:
    """Draw L paths: uniform angles/ranges/delays, CN(0, 1) gains.

    Delays lie in [0, (cp_length - 1) / bandwidth].
    """
    L = scenario.num_paths
    if L < 1:
        raise ValueError("num_paths must be >= 1")
    _check_interval(*scenario.direction_interval, "direction")
    _check_interval(*scenario.range_interval, "range")
    gain = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / np.sqrt(2.0)
    max_delay = (scenario.cp_length - 1) / scenario.bandwidth if scenario.bandwidth > 0 else 0.0
    delay = rng.uniform(0.0, max_delay, L)
    tx_dir = np.sin(rng.uniform(*scenario.direction_interval, L))
    tx_rng = rng.uniform(*scenario.range_interval, L)
    rx_dir = np.sin(rng.uniform(*scenario.direction_interval, L))
    rx_rng = rng.uniform(*scenario.range_interval, L)
    return PathSet(gain, delay, tx_dir, tx_rng, rx_dir, rx_rng)


def array_response(cfg: ArrayConfig, params: SteeringParams, eta: float = 1.0) -> np.ndarray:
    """Response toward the physical point ``params`` at the subcarrier with ratio ``eta``.

    This is the carrier-frequency steering vector of the squinted location
    ``squint_map(params, eta)``; in the Fresnel model every element phase is
    simply scaled by ``eta``, so it is evaluated that way to stay finite at
    endfire.
    """
    return steering_vector(cfg, params, cfg.carrier_frequency * eta)


def squinted_steering(cfg: ArrayConfig, params: SteeringParams, eta: float) -> np.ndarray:
    "Same vector as :func:`array_response`, built via the explicit squint mapping."
    return steering_vector(cfg, squint_map(params, eta))


def channel_at(
    paths: PathSet, tx_cfg: ArrayConfig, rx_cfg: ArrayConfig, f_m: float, squint: bool = True
) -> np.ndarray:
    """N_R x N_T channel matrix at subcarrier frequency ``f_m``.

    With ``squint`` the transmit and receive steering vectors point at the
    squinted locations for ``eta = f_c / f_m``; without it they point at the
    physical locations. The delay phase ``exp(-j 2 pi tau f_m)`` is applied
    either way.
    """
    if f_m <= 0:
        raise ValueError("f_m must be positive")
    eta = tx_cfg.carrier_frequency / f_m if squint else 1.0
    H = np.zeros((rx_cfg.num_elements, tx_cfg.num_elements), dtype=complex)
    for l in range(len(paths)):
        a_t = array_response(tx_cfg, SteeringParams(paths.tx_direction[l], paths.tx_range[l]), eta)
        a_r = array_response(rx_cfg, SteeringParams(paths.rx_direction[l], paths.rx_range[l]), eta)
        coef = paths.gain[l] * np.exp(-2j * np.pi * paths.delay[l] * f_m)
        H += coef * np.outer(a_r, a_t.conj())
    return H


def build_channels(
    paths: PathSet, tx_cfg: ArrayConfig, rx_cfg: ArrayConfig, freqs, squint: bool = True
) -> ChannelRealization:
    freqs = np.asarray(freqs, dtype=float)
    mats = [channel_at(paths, tx_cfg, rx_cfg, f, squint) for f in freqs]
    return ChannelRealization(mats, freqs, squint)


def optimal_beamformer(H: np.ndarray, num_streams: int, allow_zero: bool = False) -> np.ndarray:
    """Unconstrained comm-only precoder: top right singular vectors of ``H``.

    Columns are orthonormal, so the Frobenius norm is sqrt(N_S).
    """
    n_r, n_t = H.shape
    if num_streams > min(n_r, n_t):
        raise ValueError(f"num_streams={num_streams} exceeds min(N_R, N_T)={min(n_r, n_t)}")
    _, s, Vh = np.linalg.svd(H)
    if s[0] == 0:
        if allow_zero:
            return np.zeros((n_t, num_streams), dtype=complex)
        raise ValueError("channel is identically zero")
    return Vh[:num_streams].conj().T


def received_signal(H, F_RF, F_BB, s, noise=None):
    "y = H F_RF F_BB s + n."
    y = H @ (F_RF @ (F_BB @ s))
    if noise is not None:
        y = y + noise
    return y
