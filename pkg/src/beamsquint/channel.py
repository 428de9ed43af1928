"""Large-scale link model.

Geometric LOS links only: log-distance path loss, a subband path-loss
delta, spatially correlated lognormal shadowing, thermal noise, and the
composite beam-to-beam link gain between two mounted nodes.  Small-scale
fading is intentionally out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import ArrayGeometry, Direction, direction_between, wrap_azimuth_deg
from .patterns import ElementPattern, OMNI, beam_pattern, element_gain

__all__ = [
    "PathLossModel",
    "LOS_DEFAULT",
    "RadioNode",
    "path_loss",
    "path_loss_delta",
    "shadowing_field",
    "noise_power",
    "link_gain",
    "dbm_to_watts",
    "watts_to_dbm",
]


@dataclass(frozen=True)
class PathLossModel:
    """L = a + b log10(d_3D) + c log10(f_GHz), all terms in dB."""

    a: float
    b: float
    c: float


LOS_DEFAULT = PathLossModel(a=28.0, b=22.0, c=20.0)


@dataclass(eq=False)
class RadioNode:
    """A mounted radio endpoint.

    ``mounting_azimuth_deg`` rotates the local array frame about the
    global z axis; a node with ``array=None`` radiates through its bare
    element pattern and ignores beam weights.
    """

    name: str
    role: str
    position: np.ndarray
    pattern: ElementPattern = OMNI
    array: Optional[ArrayGeometry] = None
    mounting_azimuth_deg: float = 0.0

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float)
        if self.position.shape != (3,):
            raise ValueError("node position must be a 3-vector")

    def local_direction(self, target_position: np.ndarray) -> Direction:
        """Direction toward a global position, seen in the array frame."""
        d = direction_between(self.position, target_position)
        return Direction(
            wrap_azimuth_deg(d.azimuth_deg - self.mounting_azimuth_deg), d.zenith_deg
        )


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0) * 1e-3


def watts_to_dbm(p_w: float) -> float:
    if p_w <= 0.0:
        raise ValueError("power must be positive")
    return 10.0 * np.log10(p_w / 1e-3)


def path_loss(model: PathLossModel, d3d_m: float, freq_hz: float) -> float:
    """Log-distance loss in dB; frequency enters in GHz."""
    if d3d_m <= 0.0:
        raise ValueError("distance must be positive")
    if freq_hz <= 0.0:
        raise ValueError("frequency must be positive")
    return model.a + model.b * np.log10(d3d_m) + model.c * np.log10(freq_hz / 1e9)


def path_loss_delta(c_coeff: float, f1_hz: float, delta_f_hz: float) -> float:
    """Extra loss of the upper subband relative to the anchor, in dB.

    Distance-independent: the log-distance term cancels, leaving only
    c log10(1 + delta_f/f1).
    """
    if f1_hz <= 0.0:
        raise ValueError("anchor frequency must be positive")
    if delta_f_hz < 0.0:
        raise ValueError("offset must be nonnegative")
    return c_coeff * np.log10(1.0 + delta_f_hz / f1_hz)


def shadowing_field(
    seed: int,
    decorrelation_distance_m: float = 13.0,
    sigma_db: float = 4.0,
    n_features: int = 512,
) -> Callable[[np.ndarray], float]:
    """Sampler for a 2D Gaussian shadowing field in dB.

    Zero mean, std ``sigma_db``, isotropic exponential autocorrelation
    exp(-d/d_corr), realized with random Fourier features so arbitrary
    positions can be queried lazily yet consistently.  The field lives in
    the horizontal plane; node heights do not decorrelate it.
    """
    if sigma_db < 0.0:
        raise ValueError("sigma must be nonnegative")
    if sigma_db == 0.0:
        return lambda position: 0.0
    if decorrelation_distance_m <= 0.0:
        raise ValueError("decorrelation distance must be positive")

    rng = np.random.default_rng(seed)
    # radial wavenumber via inverse-CDF of the exponential-ACF spectrum
    u = rng.random(n_features)
    k_radial = np.sqrt((1.0 - u) ** -2.0 - 1.0) / decorrelation_distance_m
    angle = rng.uniform(0.0, 2.0 * np.pi, n_features)
    k_xy = np.stack([k_radial * np.cos(angle), k_radial * np.sin(angle)], axis=-1)
    phase = rng.uniform(0.0, 2.0 * np.pi, n_features)
    amplitude = sigma_db * np.sqrt(2.0 / n_features)

    def sampler(position: np.ndarray) -> float:
        xy = np.asarray(position, dtype=float)[..., :2]
        return float(amplitude * np.cos(xy @ k_xy.T + phase).sum(axis=-1))

    return sampler


def noise_power(n_subcarriers: int, scs_hz: float, noise_figure_db: float) -> float:
    """Thermal noise over ``n_subcarriers`` x ``scs_hz`` in dBm."""
    if n_subcarriers <= 0 or scs_hz <= 0.0:
        raise ValueError("bandwidth terms must be positive")
    return -174.0 + 10.0 * np.log10(n_subcarriers * scs_hz) + noise_figure_db


def _tx_amplitude(
    node: RadioNode, toward: np.ndarray, freq_hz: float, weights
) -> complex:
    d = node.local_direction(toward)
    if node.array is None:
        return complex(np.sqrt(element_gain(node.pattern, d)))
    return complex(
        beam_pattern(
            node.array, node.pattern, weights, freq_hz, d.azimuth_deg, d.zenith_deg
        )
    )


def link_gain(
    tx: RadioNode,
    rx: RadioNode,
    freq_hz: float,
    tx_weights=None,
    rx_weights=None,
    model: PathLossModel = LOS_DEFAULT,
    shadowing_db: float = 0.0,
) -> float:
    """Composite linear power gain of one LOS link.

    |B_tx|^2 |B_rx|^2 10^(-(L+S)/10), with each beam response evaluated
    in its own mounted array frame along the connecting ray.
    """
    d3d = float(np.linalg.norm(rx.position - tx.position))
    if d3d == 0.0:
        raise ValueError("tx and rx positions coincide")
    b_tx = _tx_amplitude(tx, rx.position, freq_hz, tx_weights)
    b_rx = _tx_amplitude(rx, tx.position, freq_hz, rx_weights)
    loss_db = path_loss(model, d3d, freq_hz) + shadowing_db
    return float(abs(b_tx) ** 2 * abs(b_rx) ** 2 * 10.0 ** (-loss_db / 10.0))
