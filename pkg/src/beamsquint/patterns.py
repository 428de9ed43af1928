"""Element patterns, steering vectors, DFT codebooks, and beam measurements.

All pattern evaluations happen in the array's local frame. Weights are
plain complex vectors, one entry per element in codebook order, so a beam
is fully described by (geometry, pattern, weights, frequency).
"""

from __future__ import annotations

import numpy as np

from .geometry import SPEED_OF_LIGHT, ArrayGeometry, Direction, unit_vectors

HALF_POWER_DB = 10.0 * np.log10(2.0)

_DB_FLOOR = 1e-300


class ElementPattern:
    """Radiation pattern of a single array element in its local frame."""

    def __init__(self, name, max_gain_dbi, gain_db_fn):
        self.name = name
        self.max_gain_dbi = max_gain_dbi
        self._gain_db_fn = gain_db_fn

    def gain_db(self, azimuth_deg, zenith_deg):
        return self._gain_db_fn(azimuth_deg, zenith_deg)

    def amplitude(self, azimuth_deg, zenith_deg):
        return 10.0 ** (self.gain_db(azimuth_deg, zenith_deg) / 20.0)

    def __repr__(self):
        return f"ElementPattern({self.name!r})"


def _omni_gain_db(azimuth_deg, zenith_deg):
    az, zen = np.broadcast_arrays(
        np.asarray(azimuth_deg, dtype=float), np.asarray(zenith_deg, dtype=float)
    )
    return np.zeros_like(az)


def _sector_gain_db(azimuth_deg, zenith_deg):
    az, zen = np.broadcast_arrays(
        np.asarray(azimuth_deg, dtype=float), np.asarray(zenith_deg, dtype=float)
    )
    horiz = np.minimum(12.0 * (az / 65.0) ** 2, 30.0)
    vert = np.minimum(12.0 * ((zen - 90.0) / 65.0) ** 2, 30.0)
    return 8.0 - np.minimum(horiz + vert, 30.0)


OMNI = ElementPattern("omni", 0.0, _omni_gain_db)

# Single-sector cellular element: 8 dBi peak, 65 degree half-power widths
# in both cuts, 30 dB front-to-back floor.
SECTOR = ElementPattern("sector", 8.0, _sector_gain_db)


def element_gain(pattern: ElementPattern, direction: Direction) -> float:
    """Linear power gain of the element towards a direction."""
    return float(
        10.0 ** (pattern.gain_db(direction.azimuth_deg, direction.zenith_deg) / 10.0)
    )


def steering_vectors(positions, freq_hz, directions) -> np.ndarray:
    """Element phase response towards unit direction vectors.

    directions has shape (..., 3); the result has shape (..., n_elements).
    """
    pos = np.asarray(positions, dtype=float)
    dirs = np.asarray(directions, dtype=float)
    k = 2.0 * np.pi * freq_hz / SPEED_OF_LIGHT
    return np.exp(1j * k * (dirs @ pos.T))


def steering_vector(
    geometry: ArrayGeometry, freq_hz: float, direction: Direction
) -> np.ndarray:
    """Unit-modulus phase response of every element towards one direction."""
    if freq_hz <= 0:
        raise ValueError("frequency must be positive")
    u = unit_vectors(direction.azimuth_deg, direction.zenith_deg)
    return steering_vectors(geometry.positions, freq_hz, u)


def conjugate_steering(
    geometry: ArrayGeometry, freq_hz: float, direction: Direction
) -> np.ndarray:
    """Unit-modulus weights that cophase the array towards one direction."""
    return np.conj(steering_vector(geometry, freq_hz, direction))


def beam_pattern(
    geometry: ArrayGeometry, pattern, weights, freq_hz, azimuth_deg, zenith_deg
):
    """Complex radiated field: element amplitude times the weighted sum of
    steering phases. Angles broadcast against each other."""
    dirs = unit_vectors(azimuth_deg, zenith_deg)
    psi = steering_vectors(geometry.positions, freq_hz, dirs)
    amp = pattern.amplitude(azimuth_deg, zenith_deg)
    return amp * (psi @ np.asarray(weights))


def gain_db(geometry: ArrayGeometry, pattern, weights, freq_hz, azimuth_deg, zenith_deg):
    """Radiated power pattern in dB."""
    b = beam_pattern(geometry, pattern, weights, freq_hz, azimuth_deg, zenith_deg)
    return 20.0 * np.log10(np.maximum(np.abs(b), _DB_FLOOR))


def dft_codebook(n_elements: int, oversampling: int = 1) -> np.ndarray:
    """DFT beam codebook: oversampling*N rows, entry k has
    w_n = exp(-2j pi k n / (oversampling N)) / sqrt(N).

    For a half-wavelength ULA the main lobe of entry k sits at
    sin(theta) = 2k / (oversampling*N), aliased into [-1, 1].
    """
    o = int(oversampling)
    if n_elements < 1 or o < 1:
        raise ValueError("element count and oversampling must be at least 1")
    k = np.arange(o * n_elements)[:, None]
    idx = np.arange(n_elements)[None, :]
    return np.exp(-2j * np.pi * k * idx / (o * n_elements)) / np.sqrt(n_elements)


def ura_codebook(n_rows: int, n_cols: int, oversampling: int = 1) -> np.ndarray:
    """URA codebook: Kronecker product of the row and column DFT codebooks,
    row entries varying slowest, matching ura_positions element order."""
    rows = dft_codebook(n_rows, oversampling) * np.sqrt(n_rows)
    cols = dft_codebook(n_cols, oversampling) * np.sqrt(n_cols)
    combo = np.einsum("ar,bc->abrc", rows, cols) / np.sqrt(n_rows * n_cols)
    n_entries = rows.shape[0] * cols.shape[0]
    return combo.reshape(n_entries, n_rows * n_cols)


def ula_beam_sines(n_elements: int, oversampling: int = 1) -> np.ndarray:
    """sin(theta) of each linear-array codebook entry, aliased into [-1, 1]."""
    total = oversampling * n_elements
    s = 2.0 * np.arange(total) / total
    return np.where(s > 1.0, s - 2.0, s)


def _golden_max(fn, lo: float, hi: float, tol: float):
    inv = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > tol:
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fn(d)
        else:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fn(c)
    x = 0.5 * (a + b)
    return x, fn(x)


# Coarse-grid samples this close to the maximum (in dB) count as ties, so
# that mirror-symmetric lobes resolve by azimuth order, not float jitter.
_TIE_DB = 1e-9


def _refine_linear(geometry, pattern, weights, freq_hz, az0, step, tol):
    def fn(az):
        return float(gain_db(geometry, pattern, weights, freq_hz, az, 90.0))

    return _golden_max(fn, az0 - step, az0 + step, tol)


def find_peak(
    geometry: ArrayGeometry,
    pattern,
    weights,
    freq_hz,
    grid_step_deg: float = 0.1,
    tol_deg: float = 1e-4,
) -> Direction:
    """Direction of maximum radiated power.

    Coarse grid scan at grid_step_deg followed by golden-section refinement
    well below 0.01 degrees. Near-exact coarse ties resolve to the smallest
    azimuth, then the smallest zenith.
    """
    az, zen = _find_peak_angles(
        geometry, pattern, weights, freq_hz, grid_step_deg, tol_deg
    )
    return Direction(az, zen)


def _find_peak_angles(geometry, pattern, weights, freq_hz, grid_step_deg, tol_deg):
    if geometry.n_cols == 1:
        n = int(np.ceil(360.0 / grid_step_deg))
        az_grid = np.linspace(-180.0, 180.0, n + 1)[1:]
        p = gain_db(geometry, pattern, weights, freq_hz, az_grid, 90.0)
        i = int(np.argmax(p >= p.max() - _TIE_DB))
        step = az_grid[1] - az_grid[0]
        az, _ = _refine_linear(
            geometry, pattern, weights, freq_hz, az_grid[i], step, tol_deg
        )
        return az, 90.0

    # Rectangular arrays: a global scan no finer than 0.5 degrees, a local
    # grid at the requested step, then coordinate-wise refinement.
    coarse = max(grid_step_deg, 0.5)
    az, zen = _ura_grid_argmax(
        geometry, pattern, weights, freq_hz,
        np.linspace(-180.0, 180.0, int(np.ceil(360.0 / coarse)) + 1)[1:],
        np.linspace(0.0, 180.0, int(np.ceil(180.0 / coarse)) + 1),
    )
    if grid_step_deg < coarse:
        half = 2.0 * coarse
        az, zen = _ura_grid_argmax(
            geometry, pattern, weights, freq_hz,
            np.arange(az - half, az + half + grid_step_deg / 2, grid_step_deg),
            np.clip(
                np.arange(zen - half, zen + half + grid_step_deg / 2, grid_step_deg),
                0.0,
                180.0,
            ),
        )
    for _ in range(3):
        az, _ = _golden_max(
            lambda a: float(gain_db(geometry, pattern, weights, freq_hz, a, zen)),
            az - grid_step_deg,
            az + grid_step_deg,
            tol_deg,
        )
        zen, _ = _golden_max(
            lambda z: float(gain_db(geometry, pattern, weights, freq_hz, az, z)),
            max(zen - grid_step_deg, 0.0),
            min(zen + grid_step_deg, 180.0),
            tol_deg,
        )
    return az, zen


def _ura_grid_argmax(geometry, pattern, weights, freq_hz, az_grid, zen_grid):
    grid = np.empty((az_grid.size, zen_grid.size))
    for j, zen in enumerate(zen_grid):
        grid[:, j] = gain_db(geometry, pattern, weights, freq_hz, az_grid, zen)
    ties = np.argwhere(grid >= grid.max() - _TIE_DB)
    i, j = min(map(tuple, ties))
    return float(az_grid[i]), float(zen_grid[j])


def hpbw(
    geometry: ArrayGeometry,
    pattern,
    weights,
    freq_hz,
    peak: Direction,
    rel_drop_db: float = HALF_POWER_DB,
) -> float:
    """Width of the main lobe around a peak, along azimuth at the peak
    zenith, between the first crossings rel_drop_db below the peak gain.

    The default drop is the half-power point. Raises if no crossing exists
    within 90 degrees on either side.
    """
    az0, zen0 = peak.azimuth_deg, peak.zenith_deg
    p0 = float(gain_db(geometry, pattern, weights, freq_hz, az0, zen0))
    thresh = p0 - rel_drop_db

    def below(offset):
        p = float(gain_db(geometry, pattern, weights, freq_hz, az0 + offset, zen0))
        return p < thresh

    def edge(sign):
        step = 1e-3
        while step <= 90.0:
            if below(sign * step):
                lo, hi = 0.5 * step, step
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if below(sign * mid):
                        hi = mid
                    else:
                        lo = mid
                return sign * 0.5 * (lo + hi)
            step *= 2.0
        raise ValueError("no crossing within 90 degrees of the peak")

    return edge(1.0) - edge(-1.0)
