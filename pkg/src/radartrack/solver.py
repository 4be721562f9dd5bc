"""Ego speed from phase derivatives via the per-chirp kinematic quartic.

For a static reflector at range r0 and azimuth theta, an ego velocity of
magnitude v at heading alpha gives ``r(t)^2 = r0^2 - 2*v*t*K + v^2*t^2`` with
``K = r0*cos(theta - alpha)``. Matching ``dr/dt`` to the measured phase rate
``lambda/(4*pi) * dPhi/dt`` and squaring yields a quartic in v whose common
root across chirps and reflectors is the ego speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from radartrack.dsp import PhaseTrack
from radartrack.histogram import bin_index
from radartrack.radar_model import UNWRAPPED, RadarConfig, max_unambiguous_speed, speed_resolution
from radartrack.scene_sim import PointCloud

DEFAULT_TOL_IMAG = 1e-6


class IndeterminateError(RuntimeError):
    """No usable roots (or points) for this frame."""


@dataclass(frozen=True)
class QuarticCoefficients:
    a: float
    b: float
    c: float
    d: float
    e: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d, self.e])

    def __call__(self, v):
        return (((self.a * v + self.b) * v + self.c) * v + self.d) * v + self.e


def quartic_coefficient_arrays(t, theta, r0, alpha, Theta, cfg: RadarConfig) -> np.ndarray:
    """Vectorised coefficients, shape (..., 5), ordered a..e."""
    t, theta, r0, Theta = np.broadcast_arrays(*map(np.asarray, (t, theta, r0, Theta)))
    if np.any(t <= 0):
        raise ValueError("t must be > 0; the first chirp of a frame carries no kinematic information")
    if np.any(r0 <= 0):
        raise ValueError("r0 must be > 0")
    k = r0 * np.cos(theta - alpha)
    g = (cfg.wavelength / (4 * np.pi) * Theta) ** 2
    return np.stack([t * t, -2 * k * t, k * k - t * t * g, 2 * t * k * g, -r0 * r0 * g], axis=-1)


def quartic_coefficients(t: float, theta_point: float, r0: float, alpha: float, Theta: float,
                         cfg: RadarConfig) -> QuarticCoefficients:
    """Coefficients of a*v^4 + b*v^3 + c*v^2 + d*v + e = 0 for one (point, chirp).

    ``K = X0*sin(alpha) + Y0*cos(alpha)`` with ``X0 = r0*sin(theta)``,
    ``Y0 = r0*cos(theta)``; ``Theta`` is the phase rate in rad/s.
    """
    return QuarticCoefficients(*quartic_coefficient_arrays(t, theta_point, r0, alpha, Theta, cfg).tolist())


def quartic_roots(coeffs: np.ndarray) -> np.ndarray:
    """All complex roots of a stack of quartics (..., 5) via companion-matrix eigenvalues."""
    coeffs = np.asarray(coeffs, dtype=float)
    lead = coeffs[..., :1]
    if np.any(lead == 0):
        raise ValueError("leading coefficient must be nonzero")
    monic = coeffs[..., 1:] / lead
    companion = np.zeros(coeffs.shape[:-1] + (4, 4))
    companion[..., 0, :] = -monic
    companion[..., 1, 0] = companion[..., 2, 1] = companion[..., 3, 2] = 1.0
    return np.linalg.eigvals(companion)


def _real_in_range(roots: np.ndarray, v_max: float, tol_imag: float, zero_tol: float) -> np.ndarray:
    re, im = roots.real, roots.imag
    keep = np.abs(im) <= tol_imag * np.maximum(1.0, np.abs(re))
    keep &= (re >= -zero_tol) & (re <= v_max)
    return np.maximum(re[keep], 0.0)


def solve_quartic(coeffs: QuarticCoefficients | Sequence[float], tol_imag: float = DEFAULT_TOL_IMAG,
                  v_max: float = np.inf) -> np.ndarray:
    """Real roots in [0, v_max], sorted ascending.

    Roots within ``tol_imag`` of zero on the negative side are treated as 0.
    """
    arr = coeffs.as_array() if isinstance(coeffs, QuarticCoefficients) else np.asarray(coeffs, float)
    return np.sort(_real_in_range(quartic_roots(arr), v_max, tol_imag, tol_imag))


@dataclass
class RootHistogram:
    """Counts of accepted roots in bins of ``width`` centred on multiples of ``width``."""

    width: float
    v_max: float
    counts: dict[int, int] = field(default_factory=dict)
    total: int = 0

    def add(self, roots: np.ndarray) -> None:
        roots = np.asarray(roots, dtype=float)
        if roots.size == 0:
            return
        if np.any((roots < 0) | (roots > self.v_max)):
            raise ValueError("roots must lie in [0, v_max]")
        keys, n = np.unique(bin_index(roots, self.width), return_counts=True)
        for key, count in zip(keys.tolist(), n.tolist()):
            self.counts[key] = self.counts.get(key, 0) + count
        self.total += int(roots.size)

    def merge(self, other: "RootHistogram") -> "RootHistogram":
        if other.width != self.width:
            raise ValueError("cannot merge histograms with different bin widths")
        out = RootHistogram(self.width, max(self.v_max, other.v_max), dict(self.counts), self.total)
        for key, count in other.counts.items():
            out.counts[key] = out.counts.get(key, 0) + count
        out.total += other.total
        return out

    def mode(self, prefer: float | None = None) -> tuple[float, int]:
        """Modal bin centre and count; ties resolved toward ``prefer`` (else the lower bin)."""
        if not self.counts:
            raise IndeterminateError("empty root histogram")
        best = max(self.counts.values())
        tied = sorted(k for k, c in self.counts.items() if c == best)
        if prefer is not None and len(tied) > 1:
            tied.sort(key=lambda k: (abs(k * self.width - prefer), k))
        return tied[0] * self.width, best

    def rows(self) -> list[tuple[float, int]]:
        return [(k * self.width, self.counts[k]) for k in sorted(self.counts)]


@dataclass
class SpeedEstimate:
    frame_index: int
    v_b_hat: float
    alpha_hat: float
    n_static_points: int
    n_roots_accumulated: int
    confidence: float
    histogram: RootHistogram | None = None


def _match_points(tracks: Sequence[PhaseTrack], points: PointCloud, cfg: RadarConfig) -> np.ndarray:
    point_bins = np.round(points.r / cfg.range_bin_spacing)
    return np.array([int(np.argmin(np.abs(point_bins - tr.range_bin))) for tr in tracks], dtype=int)


def estimate_speed(
    tracks: Sequence[PhaseTrack],
    static_points: PointCloud,
    alpha: float,
    cfg: RadarConfig,
    frame_index: int = 0,
    bin_width: float | None = None,
    prefer: float | None = None,
    tol_imag: float = DEFAULT_TOL_IMAG,
) -> SpeedEstimate:
    """Modal root over every (tracked static point, chirp) quartic of one frame.

    Each track is paired with the static point closest in range bin, which
    supplies the azimuth and the frame-start range r0. The first chirp
    (t = 0) is skipped.
    """
    if len(tracks) == 0 or len(static_points) == 0:
        raise IndeterminateError("no phase tracks or no static points")
    width = speed_resolution(cfg) / 4 if bin_width is None else bin_width
    v_max = max_unambiguous_speed(cfg, UNWRAPPED)
    matched = _match_points(tracks, static_points, cfg)

    t = np.concatenate([tr.times[1:] for tr in tracks])
    theta_rate = np.concatenate([tr.derivative[1:] for tr in tracks])
    counts = [tr.times.size - 1 for tr in tracks]
    theta = np.repeat(static_points.theta[matched], counts)
    r0 = np.repeat(static_points.r[matched], counts)

    coeffs = quartic_coefficient_arrays(t, theta, r0, alpha, theta_rate, cfg)
    roots = _real_in_range(quartic_roots(coeffs), v_max, tol_imag, tol_imag)
    hist = RootHistogram(width, v_max)
    hist.add(roots)
    if hist.total == 0:
        raise IndeterminateError("no real roots in [0, v_max]")
    v_hat, count = hist.mode(prefer)
    return SpeedEstimate(
        frame_index=frame_index,
        v_b_hat=v_hat,
        alpha_hat=alpha,
        n_static_points=int(np.unique(matched).size),
        n_roots_accumulated=hist.total,
        confidence=count / hist.total,
        histogram=hist,
    )
