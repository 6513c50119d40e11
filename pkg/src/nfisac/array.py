"""Near-field uniform linear array geometry.

Steering vectors follow the Fresnel phase model

    [a(phi, r; f)]_n = exp(j 2 pi f/c0 ((n-1) d phi - (n-1)^2 d^2 zeta)) / sqrt(N),
    zeta = (1 - phi^2) / (2 r),

where ``phi`` is the sine of the angle off broadside. The common phase
``exp(-j 2 pi f r / c0)`` is dropped; nothing downstream depends on it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

SPEED_OF_LIGHT = 299792458.0
"Speed of light in m/s."


class DegenerateGeometryError(ValueError):
    """Raised when a squint mapping is requested at endfire (|phi| = 1)."""


@dataclass(frozen=True)
class ArrayConfig:
    """ULA geometry and carrier."""

    num_elements: int
    spacing: float
    carrier_frequency: float
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if int(self.num_elements) != self.num_elements or self.num_elements < 2:
            raise ValueError(f"num_elements must be an integer >= 2, got {self.num_elements}")
        if self.spacing <= 0 or self.carrier_frequency <= 0:
            raise ValueError("spacing and carrier_frequency must be positive")

    @classmethod
    def half_wavelength(cls, num_elements: int, carrier_frequency: float) -> "ArrayConfig":
        "Array with d = lambda/2 at the carrier."
        return cls(num_elements, SPEED_OF_LIGHT / (2.0 * carrier_frequency), carrier_frequency)

    @property
    def wavelength(self) -> float:
        return self.speed_of_light / self.carrier_frequency

    @property
    def aperture(self) -> float:
        return aperture(self)

    @property
    def fraunhofer_distance(self) -> float:
        return fraunhofer_distance(self.aperture, self.wavelength)


class SteeringParams(NamedTuple):
    """A focus point: sine-angle ``direction`` in [-1, 1] and ``range`` in meters."""

    direction: float
    range: float

    def validate(self) -> "SteeringParams":
        if not abs(self.direction) <= 1.0:
            raise ValueError(f"direction must lie in [-1, 1], got {self.direction}")
        if not self.range > 0:
            raise ValueError(f"range must be positive, got {self.range}")
        return self


@dataclass
class Dictionary:
    """Grid of unit-norm steering vectors, one column per grid point.

    ``phases`` optionally holds the unwrapped phase of every atom entry, so
    that ``atoms == exp(1j * phases) / sqrt(N)``.
    """

    atoms: np.ndarray
    grid: list[SteeringParams]
    phases: np.ndarray | None = None

    def __post_init__(self):
        if self.atoms.ndim != 2 or self.atoms.shape[1] != len(self.grid):
            raise ValueError("atoms must have one column per grid point")
        if len(self.grid) == 0:
            raise ValueError("empty dictionary")

    def __len__(self) -> int:
        return len(self.grid)


def aperture(cfg: ArrayConfig) -> float:
    "Array aperture (N - 1) d."
    return (cfg.num_elements - 1) * cfg.spacing


def fraunhofer_distance(aperture: float, wavelength: float) -> float:
    "Fraunhofer distance 2 D^2 / lambda."
    if aperture <= 0 or wavelength <= 0:
        raise ValueError("aperture and wavelength must be positive")
    return 2.0 * aperture**2 / wavelength


def _offsets(element_index, spacing):
    n = np.asarray(element_index)
    if np.any(n < 1):
        raise ValueError("element_index is 1-based")
    return (n - 1) * spacing


def element_range(params: SteeringParams, element_index, spacing: float):
    """Exact distance from the focus point to element ``n`` (1-based).

    Element 1 is the phase reference at the origin; the array lies along the
    axis for which ``direction`` is the sine of the angle off broadside.
    """
    phi, r = SteeringParams(*params).validate()
    delta = _offsets(element_index, spacing)
    return np.sqrt(r**2 + delta**2 - 2.0 * r * delta * phi)


def element_range_fresnel(params: SteeringParams, element_index, spacing: float):
    "Second-order (Fresnel) expansion of :func:`element_range`."
    phi, r = SteeringParams(*params).validate()
    delta = _offsets(element_index, spacing)
    zeta = (1.0 - phi**2) / (2.0 * r)
    return r - delta * phi + delta**2 * zeta


def steering_phase(cfg: ArrayConfig, params: SteeringParams, frequency: float | None = None) -> np.ndarray:
    """Unwrapped per-element phase (radians) of :func:`steering_vector`."""
    if frequency is None:
        frequency = cfg.carrier_frequency
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    phi, r = SteeringParams(*params).validate()
    delta = np.arange(cfg.num_elements) * cfg.spacing
    zeta = (1.0 - phi**2) / (2.0 * r)
    k = 2.0 * np.pi * frequency / cfg.speed_of_light
    return k * (delta * phi - delta**2 * zeta)


def steering_vector(cfg: ArrayConfig, params: SteeringParams, frequency: float | None = None) -> np.ndarray:
    """Unit-norm near-field steering vector.

    Evaluated at the carrier it is the response toward the physical point
    ``params``; evaluated at a subcarrier ``f_m`` it is the vector whose
    beam the analog weights actually form at that subcarrier.
    """
    return np.exp(1j * steering_phase(cfg, params, frequency)) / np.sqrt(cfg.num_elements)


def far_field_steering(cfg: ArrayConfig, direction: float, frequency: float | None = None) -> np.ndarray:
    "Plane-wave steering vector (quadratic phase term dropped)."
    return np.exp(1j * _linear_phase(cfg, direction, frequency)) / np.sqrt(cfg.num_elements)


def _linear_phase(cfg, direction, frequency=None):
    if not abs(direction) <= 1.0:
        raise ValueError(f"direction must lie in [-1, 1], got {direction}")
    f = cfg.carrier_frequency if frequency is None else frequency
    if f <= 0:
        raise ValueError("frequency must be positive")
    delta = np.arange(cfg.num_elements) * cfg.spacing
    return 2.0 * np.pi * f / cfg.speed_of_light * delta * direction


def squint_map(params: SteeringParams, eta: float) -> SteeringParams:
    """Location at which a beam designed for ``params`` at f_c lands at f_m.

    ``eta = f_c / f_m``. The direction scales linearly with ``eta``; the
    range follows from matching the quadratic phase term. If ``eta * |phi|``
    exceeds 1 the direction is clamped to +-1 and a warning is issued.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    phi, r = SteeringParams(*params).validate()
    if abs(phi) == 1.0:
        raise DegenerateGeometryError("range mapping is singular at |direction| = 1")
    phi_bar = eta * phi
    r_bar = (1.0 - eta**2 * phi**2) / (eta * (1.0 - phi**2)) * r
    if abs(phi_bar) > 1.0:
        warnings.warn(f"squinted direction {phi_bar:.6f} clamped to the visible region", stacklevel=2)
        phi_bar = float(np.sign(phi_bar))
        r_bar = abs(r_bar)
    return SteeringParams(phi_bar, r_bar)


def squint_deviation(params: SteeringParams, eta: float) -> tuple[float, float]:
    "Direction and range offsets ``squint_map(params, eta) - params``."
    phi_bar, r_bar = squint_map(params, eta)
    return phi_bar - params[0], r_bar - params[1]


def build_dictionary(
    cfg: ArrayConfig,
    n_directions: int,
    n_ranges: int,
    range_interval: tuple[float, float] = (1.0, None),
    *,
    directions: Sequence[float] | None = None,
    far_field: bool = False,
) -> Dictionary:
    """Grid of steering vectors over direction x range.

    Directions are spaced uniformly over [-1, 1] (both endpoints included)
    unless ``directions`` is given; ranges uniformly over ``range_interval``.
    An upper range of ``None`` means the Fraunhofer distance. With
    ``far_field=True`` every atom is a plane wave, i.e. the quadratic term is
    forced to zero, but the grid layout is unchanged.
    """
    if n_directions < 1 or n_ranges < 1:
        raise ValueError("dictionary grid must be non-empty")
    r_min, r_max = range_interval
    if r_max is None:
        r_max = cfg.fraunhofer_distance
    if not 0 < r_min <= r_max:
        raise ValueError(f"invalid range interval ({r_min}, {r_max})")
    if directions is None:
        directions = np.linspace(-1.0, 1.0, n_directions) if n_directions > 1 else np.zeros(1)
    elif len(directions) != n_directions:
        raise ValueError("len(directions) must equal n_directions")
    ranges = np.linspace(r_min, r_max, n_ranges) if n_ranges > 1 else np.array([r_min])

    grid = [SteeringParams(float(p), float(r)) for p in directions for r in ranges]
    if far_field:
        phases = np.stack([_linear_phase(cfg, g.direction) for g in grid], axis=1)
        atoms = np.stack([far_field_steering(cfg, g.direction) for g in grid], axis=1)
    else:
        phases = np.stack([steering_phase(cfg, g) for g in grid], axis=1)
        atoms = np.stack([steering_vector(cfg, g) for g in grid], axis=1)
    return Dictionary(atoms, grid, phases)
