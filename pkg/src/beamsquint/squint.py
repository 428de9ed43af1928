"""Beam squint across subbands, and the phase correction that undoes it.

Frequency-flat phase weights point where they cancel the element phases.
Those phases grow with frequency, so a beam designed at the array's design
frequency drifts when the same weights radiate on an offset carrier: the
sine of the pointing angle scales by the frequency ratio. The correction
is a per-element phase ramp matching the offset, multiplied elementwise
onto the original weights. Near endfire a beam can show two main lobes;
the ramp is then built towards whichever lobe the served device is
estimated to sit in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    Direction,
    unit_vector,
    unit_vectors,
)
from .patterns import _golden_max, gain_db, steering_vectors


@dataclass(frozen=True)
class FrequencyPlan:
    """Measurement subband center f1 and the signed data-subband offset."""

    f1_hz: float
    delta_f_hz: float

    def __post_init__(self):
        if self.f1_hz <= 0:
            raise ValueError("f1 must be positive")
        if self.f2_hz <= 0:
            raise ValueError("f1 + delta_f must be positive")

    @property
    def f2_hz(self) -> float:
        return self.f1_hz + self.delta_f_hz


@dataclass(eq=False)
class CompensationVector:
    """Unit-modulus per-element correction aimed at target_direction."""

    entries: np.ndarray
    target_direction: Direction


def squinted_angle_deg(theta_deg, design_freq_hz: float, eval_freq_hz: float):
    """Exact peak angle of a beam steered to theta_deg at the design
    frequency when the array radiates at eval_freq_hz instead.

    Angles whose scaled sine leaves [-1, 1] have no peak in the visible
    region and come back as nan.
    """
    s = np.sin(np.deg2rad(np.asarray(theta_deg, dtype=float)))
    scaled = s * (design_freq_hz / eval_freq_hz)
    out = np.degrees(np.arcsin(np.where(np.abs(scaled) <= 1.0, scaled, np.nan)))
    if out.ndim == 0:
        return float(out)
    return out


def predict_squint(theta1_deg, f1_hz: float, delta_f_hz: float):
    """First-order squint shift -tan(theta1) * df/f1 in radians, returned
    in degrees. Rejects angles at or beyond 90 degrees."""
    theta = np.asarray(theta1_deg, dtype=float)
    if np.any(np.abs(theta) >= 90.0):
        raise ValueError("prediction needs |theta1| < 90 degrees")
    out = np.degrees(-np.tan(np.deg2rad(theta)) * (delta_f_hz / f1_hz))
    if out.ndim == 0:
        return float(out)
    return out


def compensation_vector(
    geometry: ArrayGeometry, plan: FrequencyPlan, u_star: Direction
) -> CompensationVector:
    """Phase ramp exp(-j 2pi df/c u*.R_n) that holds a beam on u_star when
    the carrier moves from the design frequency to f2."""
    if geometry.n_elements < 1:
        raise ValueError("geometry has no elements")
    u = unit_vector(u_star)
    k = 2.0 * np.pi * plan.delta_f_hz / SPEED_OF_LIGHT
    entries = np.exp(-1j * k * (geometry.positions @ u))
    return CompensationVector(entries, u_star)


def apply_compensation(weights, comp: CompensationVector) -> np.ndarray:
    """Hadamard product of the weights with the compensation entries;
    phase-only, so weight magnitudes are preserved."""
    w = np.asarray(weights)
    if w.shape[-1] != comp.entries.shape[0]:
        raise ValueError("weights and compensation lengths differ")
    return w * comp.entries


def ula_compensation(
    n_elements: int, f1_hz: float, delta_f_hz: float, theta_star_deg: float
) -> CompensationVector:
    """Closed-form ULA correction c_n = exp(-j pi (df/f1) n sin(theta*)).

    Differs from the generic compensation_vector by a global phase only;
    the in-plane target (zenith 90) is implied.
    """
    n = np.arange(1, n_elements + 1, dtype=float)
    s = np.sin(np.deg2rad(theta_star_deg))
    entries = np.exp(-1j * np.pi * (delta_f_hz / f1_hz) * n * s)
    return CompensationVector(entries, Direction(theta_star_deg, 90.0))


def ura_compensation(
    n_rows: int,
    n_cols: int,
    f1_hz: float,
    delta_f_hz: float,
    theta_star_deg: float,
    phi_star_deg: float,
) -> CompensationVector:
    """Closed-form URA correction, row-major to match ura_positions:
    c = exp(-j pi (df/f1) (n_r sin(phi*) sin(theta*) + n_c cos(phi*)))."""
    nr = np.arange(1, n_rows + 1, dtype=float)[:, None]
    nc = np.arange(1, n_cols + 1, dtype=float)[None, :]
    theta = np.deg2rad(theta_star_deg)
    phi = np.deg2rad(phi_star_deg)
    phase = nr * np.sin(phi) * np.sin(theta) + nc * np.cos(phi)
    entries = np.exp(-1j * np.pi * (delta_f_hz / f1_hz) * phase).ravel()
    return CompensationVector(entries, Direction(theta_star_deg, phi_star_deg))


def compensated_codebook(
    geometry: ArrayGeometry, codebook, delta_f_hz: float, azimuths_deg, zeniths_deg=90.0
) -> np.ndarray:
    """Apply per-beam compensation to every codebook row at once.

    azimuths_deg/zeniths_deg give each row's target direction.
    """
    u = unit_vectors(azimuths_deg, zeniths_deg)
    k = 2.0 * np.pi * delta_f_hz / SPEED_OF_LIGHT
    ramp = np.exp(-1j * k * (u @ geometry.positions.T))
    return np.asarray(codebook) * ramp


def disambiguate_peak(candidates, estimated: Direction) -> Direction:
    """Candidate whose unit vector is nearest the estimated direction's,
    ties resolved by list order."""
    if not candidates:
        raise ValueError("no candidate directions")
    est = unit_vector(estimated)
    cand = np.stack([unit_vector(c) for c in candidates])
    dist = np.linalg.norm(cand - est, axis=1)
    return candidates[int(np.argmin(dist))]


def find_all_main_directions(
    geometry: ArrayGeometry,
    pattern,
    weights,
    freq_hz,
    threshold_db: float,
    grid_step_deg: float = 0.05,
    tol_deg: float = 1e-4,
):
    """All local pattern maxima within threshold_db of the global maximum,
    sorted by gain descending (ties by azimuth).

    A beam is considered ambiguous when this returns more than one
    direction at a small threshold (grating lobes near endfire).
    """
    if threshold_db <= 0:
        raise ValueError("threshold must be positive")
    # Refinement can lift a candidate by a fraction of a dB, so seeds keep
    # an extra margin below the requested threshold before the final cut.
    seed_floor = threshold_db + 1.0
    if geometry.n_cols == 1:
        found = _linear_main_directions(
            geometry, pattern, weights, freq_hz, grid_step_deg, tol_deg, seed_floor
        )
    else:
        found = _planar_main_directions(
            geometry, pattern, weights, freq_hz, tol_deg, seed_floor
        )
    best = max(g for _, _, g in found)
    kept = [(az, zen, g) for az, zen, g in found if g >= best - threshold_db]
    kept.sort(key=lambda t: (-t[2], t[0], t[1]))
    return [Direction(az, zen) for az, zen, _ in kept]


def _linear_main_directions(geometry, pattern, weights, freq_hz, step, tol, floor_db):
    n = int(np.ceil(360.0 / step))
    az_grid = np.linspace(-180.0, 180.0, n + 1)[1:]
    p = gain_db(geometry, pattern, weights, freq_hz, az_grid, 90.0)
    left = np.roll(p, 1)
    right = np.roll(p, -1)
    seeds = az_grid[(p > left) & (p >= right) & (p >= p.max() - floor_db)]
    found = []
    for az0 in seeds:
        az, g = _golden_max(
            lambda a: float(gain_db(geometry, pattern, weights, freq_hz, a, 90.0)),
            az0 - step,
            az0 + step,
            tol,
        )
        if not any(abs(az - a) < 2 * step for a, _, _ in found):
            found.append((az, 90.0, g))
    return found


def _planar_main_directions(geometry, pattern, weights, freq_hz, tol, floor_db, coarse=0.5):
    n_az = int(np.ceil(360.0 / coarse))
    n_zen = int(np.ceil(180.0 / coarse))
    az_grid = np.linspace(-180.0, 180.0, n_az + 1)[1:]
    zen_grid = np.linspace(0.0, 180.0, n_zen + 1)
    grid = np.empty((az_grid.size, zen_grid.size))
    for j, zen in enumerate(zen_grid):
        grid[:, j] = gain_db(geometry, pattern, weights, freq_hz, az_grid, zen)
    interior = grid[1:-1, 1:-1]
    local = (
        (interior > grid[:-2, 1:-1])
        & (interior >= grid[2:, 1:-1])
        & (interior > grid[1:-1, :-2])
        & (interior >= grid[1:-1, 2:])
        & (interior >= grid.max() - floor_db)
    )
    found = []
    for i, j in np.argwhere(local):
        az, zen = float(az_grid[i + 1]), float(zen_grid[j + 1])
        for _ in range(2):
            az, _ = _golden_max(
                lambda a: float(gain_db(geometry, pattern, weights, freq_hz, a, zen)),
                az - coarse,
                az + coarse,
                tol,
            )
            zen, g = _golden_max(
                lambda z: float(gain_db(geometry, pattern, weights, freq_hz, az, z)),
                max(zen - coarse, 0.0),
                min(zen + coarse, 180.0),
                tol,
            )
        if not any(
            abs(az - a) < 2 * coarse and abs(zen - z) < 2 * coarse
            for a, z, _ in found
        ):
            found.append((az, zen, g))
    return found
