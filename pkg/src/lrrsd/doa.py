"""Decisions from solver outputs: MUSIC DOA estimates and sensor detection.

The MUSIC spectrum uses the leading K left singular vectors of the recovered
low-rank component; distorted sensors are found by scanning the ascending
sorted row norms of the recovered row-sparse component for a large gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arraysim import ArrayGeometry, steering_matrix


@dataclass(frozen=True)
class SpectrumGrid:
    """MUSIC pseudo-spectrum sampled on a regular angular grid."""

    angles_deg: np.ndarray
    values: np.ndarray
    step_deg: float

    def to_rows(self) -> list[tuple[float, float]]:
        return list(zip(self.angles_deg.tolist(), self.values.tolist()))


@dataclass(frozen=True)
class DetectionResult:
    """Gap-detector output; distorted_indices are 1-based sensor indices."""

    m_fail: int
    distorted_indices: tuple[int, ...]
    row_norms: np.ndarray
    threshold_used: float


def _grid(start_deg: float, stop_deg: float, step_deg: float) -> np.ndarray:
    if step_deg <= 0:
        raise ValueError("step_deg must be positive")
    if stop_deg - start_deg <= step_deg:
        raise ValueError("grid range must exceed one step")
    # endpoints are exclusive; +/-90 deg is outside the steering domain
    n = int(np.floor((stop_deg - start_deg) / step_deg + 1e-9))
    angles = start_deg + step_deg * np.arange(1, n + 1)
    return angles[(angles > -90.0) & (angles < min(stop_deg, 90.0))]


def music_spectrum(
    Z_hat: np.ndarray,
    K: int,
    geometry: ArrayGeometry,
    start_deg: float = -90.0,
    stop_deg: float = 90.0,
    step_deg: float = 0.05,
) -> SpectrumGrid:
    """P(theta) = 1 / (a^H(theta) (I - L L^H) a(theta)) over the grid.

    L holds the K leading left singular vectors of Z_hat.
    """
    m = Z_hat.shape[0]
    if not 1 <= K < m:
        raise ValueError(f"need 1 <= K < M: K={K}, M={m}")
    u, _, _ = np.linalg.svd(Z_hat, full_matrices=False)
    L = u[:, :K]
    angles = _grid(start_deg, stop_deg, step_deg)
    A = steering_matrix(angles, geometry)  # M x G
    B = A - L @ (L.conj().T @ A)  # (I - L L^H) a(theta), columns
    denom = np.sum(np.abs(B) ** 2, axis=0)
    denom = np.maximum(denom, np.finfo(float).tiny)
    return SpectrumGrid(angles_deg=angles, values=1.0 / denom, step_deg=step_deg)


def estimate_doas(spectrum: SpectrumGrid, K: int) -> list[float]:
    """Angles of the K largest strict local maxima, ascending.

    Fewer than K maxima: remaining slots are filled with the largest
    non-peak grid values.  Ties break toward the lower angle.
    """
    v = spectrum.values
    a = spectrum.angles_deg
    if v.size == 0:
        raise ValueError("empty spectrum")
    interior = np.arange(1, v.size - 1)
    is_peak = (v[interior] > v[interior - 1]) & (v[interior] > v[interior + 1])
    peak_idx = interior[is_peak]
    order = peak_idx[np.lexsort((a[peak_idx], -v[peak_idx]))]
    chosen = list(order[:K])
    if len(chosen) < K:
        rest = np.setdiff1d(np.arange(v.size), peak_idx)
        rest = rest[np.lexsort((a[rest], -v[rest]))]
        chosen.extend(rest[: K - len(chosen)])
    return sorted(float(a[i]) for i in chosen[:K])


def detect_distorted(V_hat: np.ndarray, h_factor: float = 10.0) -> DetectionResult:
    """Gap scan over ascending sorted row norms of V_hat.

    d = v~(2) - v~(1) sets the threshold h = h_factor * d; the first index
    i in 3..M with v~(i) - v~(i-1) >= h marks the boundary, and the sensors
    above it (the largest row norms) are declared distorted.  An exact tie
    v~(1) = v~(2) would make every gap qualify, so d falls back to machine
    epsilon times the largest norm.
    """
    m = V_hat.shape[0]
    if m < 3:
        raise ValueError(f"need M >= 3 sensors, got {m}")
    if h_factor <= 0:
        raise ValueError("h_factor must be positive")
    norms = np.linalg.norm(V_hat, axis=1)
    v_sorted = np.sort(norms)
    d = v_sorted[1] - v_sorted[0]
    if d == 0.0:
        d = np.finfo(float).eps * float(v_sorted[-1])
    h = h_factor * d
    i_fail = m + 1
    if h > 0:
        for i in range(3, m + 1):
            if v_sorted[i - 1] - v_sorted[i - 2] >= h:
                i_fail = i
                break
    m_fail = m - i_fail + 1
    if m_fail > 0:
        top = np.argsort(-norms, kind="stable")[:m_fail]
        indices = tuple(sorted(int(i) + 1 for i in top))
    else:
        indices = ()
    return DetectionResult(
        m_fail=m_fail,
        distorted_indices=indices,
        row_norms=norms,
        threshold_used=float(h),
    )
