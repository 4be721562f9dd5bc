"""Static/dynamic split of a radar point cloud and ego-heading estimation."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from radartrack.histogram import histogram_mode
from radartrack.scene_sim import PointCloud

ALPHA_BIN_WIDTH = np.deg2rad(1.0)
COS_FLOOR = 0.1
DEFAULT_K = 1.0


class NoAlphaError(ValueError):
    """Fewer than two usable points to estimate the heading from."""


@dataclass(frozen=True)
class RadarPoint:
    r: float
    theta: float
    phi: float
    v_r: float  # closing-positive

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise ValueError(f"range must be positive, got {self.r}")


@dataclass
class SegmentationResult:
    static_points: PointCloud
    dynamic_points: PointCloud
    alpha_hat: float
    mode_M0: float
    sigma: float
    v_hat: np.ndarray  # per-point ego-speed estimate, nan where unusable
    static_mask: np.ndarray
    no_points: bool = False


def pairwise_alphas(points: PointCloud, v_floor: float = 0.0) -> np.ndarray:
    """Heading candidates from every usable pair of points.

    For static points the ratio of radial speeds fixes tan(alpha); pairs
    sharing an azimuth carry no information and are skipped.
    """
    usable = np.abs(points.v_r) >= v_floor if v_floor > 0 else np.ones(len(points), bool)
    theta, v = points.theta[usable], points.v_r[usable]
    if theta.size < 2:
        return np.empty(0)
    i, j = np.array(list(combinations(range(theta.size), 2))).T
    num = v[j] * np.cos(theta[i]) - v[i] * np.cos(theta[j])
    den = v[i] * np.sin(theta[j]) - v[j] * np.sin(theta[i])
    ok = (theta[i] != theta[j]) & (den != 0)
    return np.arctan(num[ok] / den[ok])


def estimate_alpha(points: PointCloud, v_floor: float = 0.0, bin_width: float = ALPHA_BIN_WIDTH) -> float:
    """Histogram mode of the pairwise heading estimates (radians)."""
    alphas = pairwise_alphas(points, v_floor)
    if alphas.size == 0:
        raise NoAlphaError("need at least two points with distinct azimuth and |v_r| above the floor")
    return histogram_mode(alphas, bin_width, prefer=0.0)[0]


def ego_speed_per_point(points: PointCloud, alpha: float, cos_floor: float = COS_FLOOR) -> np.ndarray:
    """v_r / cos(theta - alpha); nan where the cosine is below ``cos_floor``."""
    cos = np.cos(points.theta - alpha)
    out = np.full(len(points), np.nan)
    ok = np.abs(cos) >= cos_floor
    out[ok] = points.v_r[ok] / cos[ok]
    return out


def robust_std(values: np.ndarray) -> float:
    """Normal-consistent spread from the median absolute deviation."""
    return float(1.4826 * np.median(np.abs(values - np.median(values))))


def segment(
    points: PointCloud,
    alpha: float,
    v_res: float,
    k: float = DEFAULT_K,
    robust: bool = True,
    prefer: float | None = None,
) -> SegmentationResult:
    """Split ``points`` into static and dynamic sets.

    The per-point ego-speed estimates are histogrammed with bins of
    ``v_res/2``; M0 is the modal bin centre. Static points are those within
    ``k*sigma + v_res`` of M0, the extra ``v_res`` covering doppler
    quantization of the radial speeds and of M0 itself. ``sigma`` is the
    MAD-based spread by default so that a few fast movers do not widen the
    static band; ``robust=False`` uses the plain standard deviation.
    """
    if len(points) == 0:
        empty = points.subset(np.zeros(0, bool))
        return SegmentationResult(empty, empty, alpha, np.nan, np.nan, np.empty(0), np.zeros(0, bool), True)
    v_hat = ego_speed_per_point(points, alpha)
    usable = np.isfinite(v_hat)
    if not np.any(usable):
        mask = np.zeros(len(points), bool)
        return SegmentationResult(points.subset(mask), points, alpha, np.nan, np.nan, v_hat, mask)
    m0 = histogram_mode(v_hat[usable], v_res / 2, prefer=prefer)[0]
    sigma = robust_std(v_hat[usable]) if robust else float(np.std(v_hat[usable]))
    mask = np.zeros(len(points), bool)
    mask[usable] = np.abs(v_hat[usable] - m0) < k * sigma + v_res
    return SegmentationResult(points.subset(mask), points.subset(~mask), alpha, m0, sigma, v_hat, mask)


def refine_alpha(
    points: PointCloud,
    alpha: float,
    v_res: float,
    k: float = DEFAULT_K,
    robust: bool = True,
    iterations: int = 2,
) -> float:
    """Least-squares heading from the static set, re-segmenting after each fit.

    Writing ``v_r = a*cos(theta) + b*sin(theta)`` with ``(a, b) = v_b*(cos alpha, sin alpha)``
    makes the heading a linear fit over all static points at once instead of
    a vote among pairs, which averages the doppler quantization down. The
    starting ``alpha`` (normally from :func:`estimate_alpha`) is returned
    unchanged when fewer than three static points are available.
    """
    for _ in range(iterations):
        static = segment(points, alpha, v_res, k, robust).static_points
        if len(static) < 3:
            break
        design = np.column_stack([np.cos(static.theta), np.sin(static.theta)])
        (a, b), *_ = np.linalg.lstsq(design, static.v_r, rcond=None)
        if a <= 0:  # fit points backwards; keep the pairwise estimate
            break
        alpha = float(np.arctan2(b, a))
    return alpha
