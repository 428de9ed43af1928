"""Array geometries and direction conventions.

Directions are azimuth/zenith pairs in degrees. Azimuth is measured in the
xy-plane from the x-axis, positive towards y, and lies in (-180, 180].
Zenith is measured down from the z-axis and lies in [0, 180], so
(azimuth=0, zenith=90) points along x. The matching unit vector is

    u = [sin(zen) cos(az), sin(zen) sin(az), cos(zen)]
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


def wavelength(freq_hz: float) -> float:
    return SPEED_OF_LIGHT / freq_hz


def wrap_azimuth_deg(az_deg):
    """Wrap angles in degrees into (-180, 180]."""
    az = np.asarray(az_deg, dtype=float)
    wrapped = 180.0 - np.remainder(180.0 - az, 360.0)
    if wrapped.ndim == 0:
        return float(wrapped)
    return wrapped


def unit_vectors(azimuth_deg, zenith_deg) -> np.ndarray:
    """Unit vectors for broadcast azimuth/zenith arrays, shape (..., 3)."""
    az = np.deg2rad(np.asarray(azimuth_deg, dtype=float))
    zen = np.deg2rad(np.asarray(zenith_deg, dtype=float))
    az, zen = np.broadcast_arrays(az, zen)
    sz = np.sin(zen)
    return np.stack([sz * np.cos(az), sz * np.sin(az), np.cos(zen)], axis=-1)


def direction_from_vector(v) -> "Direction":
    """Direction of a vector, which need not be unit length.

    At the poles the azimuth is undefined and reported as 0.
    """
    v = np.asarray(v, dtype=float)
    r = np.linalg.norm(v)
    if r == 0.0:
        raise ValueError("zero vector has no direction")
    zen = float(np.degrees(np.arccos(np.clip(v[2] / r, -1.0, 1.0))))
    if np.hypot(v[0], v[1]) == 0.0:
        return Direction(0.0, zen)
    az = float(np.degrees(np.arctan2(v[1], v[0])))
    if az <= -180.0:
        az = 180.0
    return Direction(az, zen)


def direction_between(p_from, p_to) -> "Direction":
    """Direction from one point towards another."""
    diff = np.asarray(p_to, dtype=float) - np.asarray(p_from, dtype=float)
    return direction_from_vector(diff)


@dataclass(frozen=True)
class Direction:
    """Azimuth/zenith pair in degrees, validated against the conventions."""

    azimuth_deg: float
    zenith_deg: float

    def __post_init__(self):
        if not -180.0 < self.azimuth_deg <= 180.0:
            raise ValueError(f"azimuth {self.azimuth_deg} outside (-180, 180]")
        if not 0.0 <= self.zenith_deg <= 180.0:
            raise ValueError(f"zenith {self.zenith_deg} outside [0, 180]")


def unit_vector(direction: Direction) -> np.ndarray:
    """Cartesian unit vector of a Direction."""
    return unit_vectors(direction.azimuth_deg, direction.zenith_deg)


def ula_positions(n_elements: int, design_freq_hz: float) -> np.ndarray:
    """Element positions of a half-wavelength ULA along y, centred on the
    origin: y_n = (n - (N+1)/2) * lambda/2 for n = 1..N. Shape (N, 3)."""
    if n_elements < 1:
        raise ValueError("need at least one element")
    if design_freq_hz <= 0:
        raise ValueError("design frequency must be positive")
    spacing = 0.5 * wavelength(design_freq_hz)
    idx = np.arange(1, n_elements + 1, dtype=float)
    positions = np.zeros((n_elements, 3))
    positions[:, 1] = (idx - (n_elements + 1) / 2.0) * spacing
    return positions


def ura_positions(n_rows: int, n_cols: int, design_freq_hz: float) -> np.ndarray:
    """Element positions of a half-wavelength URA on the yz-plane, rows along
    y and columns along z, centred on the origin. Enumeration is row-major,
    matching the position equation's (n_r, n_c) pairing of rows with y.
    Shape (N_r * N_c, 3)."""
    if n_rows < 1 or n_cols < 1:
        raise ValueError("array dimensions must be at least 1x1")
    if design_freq_hz <= 0:
        raise ValueError("design frequency must be positive")
    spacing = 0.5 * wavelength(design_freq_hz)
    y = (np.arange(1, n_rows + 1, dtype=float) - (n_rows + 1) / 2.0) * spacing
    z = (np.arange(1, n_cols + 1, dtype=float) - (n_cols + 1) / 2.0) * spacing
    yy, zz = np.meshgrid(y, z, indexing="ij")
    positions = np.zeros((n_rows * n_cols, 3))
    positions[:, 1] = yy.ravel()
    positions[:, 2] = zz.ravel()
    return positions


@dataclass(eq=False)
class ArrayGeometry:
    """Element positions of an array in its local frame.

    positions has shape (n_elements, 3) in meters, in codebook order: a ULA
    runs along y, a URA sits on the yz-plane flattened with y varying
    slowest. Spacing is half a wavelength at the design frequency.
    """

    kind: str
    positions: np.ndarray
    design_freq_hz: float
    n_rows: int
    n_cols: int

    @property
    def n_elements(self) -> int:
        return self.n_rows * self.n_cols


def ula_geometry(n_elements: int, design_freq_hz: float) -> ArrayGeometry:
    positions = ula_positions(n_elements, design_freq_hz)
    return ArrayGeometry("ula", positions, design_freq_hz, n_elements, 1)


def ura_geometry(n_rows: int, n_cols: int, design_freq_hz: float) -> ArrayGeometry:
    positions = ura_positions(n_rows, n_cols, design_freq_hz)
    return ArrayGeometry("ura", positions, design_freq_hz, n_rows, n_cols)
