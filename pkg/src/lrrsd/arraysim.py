"""Synthetic data for a linear array with gain/phase-distorted sensors.

The observation is Y = (I + diag(gamma)) A S + N, where A holds ULA steering
vectors, S is the source signal matrix, gamma is nonzero only at distorted
sensors, and N is circular complex Gaussian noise.  Splitting the distortion
term out gives Y = Z + V + N with Z = A S low rank (rank <= number of
sources) and V = diag(gamma) A S row sparse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Seed = int | tuple[int, ...]


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array: M sensors, spacing in half-wavelength units."""

    num_sensors: int
    element_spacing: float = 1.0

    def __post_init__(self):
        if self.num_sensors < 2:
            raise ValueError(f"num_sensors must be >= 2, got {self.num_sensors}")
        if self.element_spacing <= 0:
            raise ValueError(f"element_spacing must be > 0, got {self.element_spacing}")


@dataclass(frozen=True)
class SceneConfig:
    """Everything needed to synthesize one trial, including the RNG seed.

    snr_db = math.inf disables noise entirely (N = 0).  The seed may be a
    single integer or a tuple of integers; tuples give order-independent
    sub-streams such as (base_seed, trial_index).
    """

    geometry: ArrayGeometry
    doas_deg: tuple[float, ...]
    num_snapshots: int
    snr_db: float
    num_distorted: int
    gain_range: tuple[float, float] = (0.0, 10.0)
    phase_range_deg: tuple[float, float] = (-15.0, 15.0)
    seed: Seed = 0

    def __post_init__(self):
        object.__setattr__(self, "doas_deg", tuple(float(d) for d in self.doas_deg))
        m = self.geometry.num_sensors
        k = len(self.doas_deg)
        if self.num_snapshots < 1:
            raise ValueError("num_snapshots must be positive")
        if k >= min(m, self.num_snapshots):
            raise ValueError(
                f"need K < min(M, T): K={k}, M={m}, T={self.num_snapshots}"
            )
        if len(set(self.doas_deg)) != k:
            raise ValueError("DOAs must be pairwise distinct")
        for d in self.doas_deg:
            if not -90.0 < d < 90.0:
                raise ValueError(f"DOA {d} outside (-90, 90)")
        if not 0 <= self.num_distorted <= m:
            raise ValueError(f"num_distorted must be in [0, {m}]")


@dataclass(frozen=True)
class Scene:
    """One synthesized trial with full ground truth.

    Y = Z_true + V_true + N_true holds exactly by construction.
    distorted_set contains 1-based sensor indices.
    """

    Y: np.ndarray
    Z_true: np.ndarray
    V_true: np.ndarray
    N_true: np.ndarray
    gamma: np.ndarray
    distorted_set: tuple[int, ...]
    config: SceneConfig


def steering_vector(theta_deg: float, geometry: ArrayGeometry) -> np.ndarray:
    """ULA steering vector: element m is exp(j*pi*spacing*(m-1)*sin(theta))."""
    if not -90.0 < theta_deg < 90.0:
        raise ValueError(f"angle {theta_deg} outside (-90, 90)")
    m = np.arange(geometry.num_sensors)
    phase = np.pi * geometry.element_spacing * m * np.sin(np.deg2rad(theta_deg))
    return np.exp(1j * phase)


def steering_matrix(doas_deg, geometry: ArrayGeometry) -> np.ndarray:
    """Stack steering vectors as columns, in input order."""
    doas = list(doas_deg)
    if not doas:
        raise ValueError("at least one DOA required")
    return np.column_stack([steering_vector(d, geometry) for d in doas])


def _complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def synthesize_scene(config: SceneConfig) -> Scene:
    """Generate a Scene from its config; identical config gives identical bits.

    Draw order is fixed (signals, distorted subset, gains, phases, noise), so
    the output is reproducible across processes for a given seed.
    """
    geo = config.geometry
    m, t = geo.num_sensors, config.num_snapshots
    k = len(config.doas_deg)
    rng = np.random.default_rng(config.seed)

    s = _complex_gaussian(rng, (k, t), 1.0)

    distorted = np.sort(rng.choice(m, size=config.num_distorted, replace=False))
    lo_g, hi_g = config.gain_range
    lo_p, hi_p = config.phase_range_deg
    rho = rng.uniform(lo_g, hi_g, size=config.num_distorted)
    phi = np.deg2rad(rng.uniform(lo_p, hi_p, size=config.num_distorted))
    gamma = np.zeros(m, dtype=complex)
    gamma[distorted] = rho * np.exp(1j * phi)

    if math.isinf(config.snr_db):
        n = np.zeros((m, t), dtype=complex)
    else:
        sigma2 = 10.0 ** (-config.snr_db / 10.0)
        n = _complex_gaussian(rng, (m, t), sigma2)

    a = steering_matrix(config.doas_deg, geo)
    z = a @ s
    v = gamma[:, None] * z
    y = z + v + n

    return Scene(
        Y=y,
        Z_true=z,
        V_true=v,
        N_true=n,
        gamma=gamma,
        distorted_set=tuple(int(i) + 1 for i in distorted),
        config=config,
    )
