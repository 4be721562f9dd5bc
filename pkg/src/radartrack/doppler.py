"""Conventional doppler-FFT ego-speed estimator used as the comparison baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from radartrack.dsp import RangeProfile, doppler_bin_offsets, doppler_spectrum, range_fft
from radartrack.histogram import bin_index, histogram_mode
from radartrack.radar_model import RadarConfig, speed_resolution
from radartrack.scene_sim import IqCube, PointCloud
from radartrack.segmentation import ego_speed_per_point
from radartrack.solver import IndeterminateError

_TIE_RTOL = 1e-9


@dataclass
class DopplerEstimate:
    frame_index: int
    v_b_hat: float
    radial_speeds: np.ndarray  # per static point, closing-positive


def peak_doppler_offset(spectrum: np.ndarray, interpolate: bool = False) -> float:
    """Doppler index offset of the spectral peak.

    Exact ties go to the offset nearest zero doppler. With ``interpolate``
    a parabola through the peak and its neighbours refines the offset.
    """
    mag = np.abs(spectrum)
    offsets = doppler_bin_offsets(mag.size)
    tied = np.flatnonzero(mag >= mag.max() * (1 - _TIE_RTOL))
    i = int(tied[np.argmin(np.abs(offsets[tied]))])
    if not interpolate or i in (0, mag.size - 1):
        return float(offsets[i])
    lo, mid, hi = mag[i - 1], mag[i], mag[i + 1]
    denom = lo - 2 * mid + hi
    shift = 0.5 * (lo - hi) / denom if denom != 0 else 0.0
    return float(offsets[i] + shift)


def doppler_speed(
    cube: IqCube | RangeProfile,
    static_points: PointCloud,
    alpha: float,
    cfg: RadarConfig,
    frame_index: int = 0,
    interpolate: bool = False,
    prefer: float | None = None,
) -> DopplerEstimate:
    """Histogram mode of ``v_r / cos(theta - alpha)`` over the static points.

    ``v_r`` is read from the doppler peak at each point's range bin, so it
    is quantized to the speed resolution unless ``interpolate`` is set; in
    that case the estimate is the mean of the per-point values in the modal
    bin rather than the bin centre.
    """
    if len(static_points) == 0:
        raise IndeterminateError("no static points")
    profile = cube if isinstance(cube, RangeProfile) else range_fft(cube)
    v_res = speed_resolution(cfg)
    n_bins = profile.spectrum.shape[1]
    bins = np.clip(np.round(static_points.r / cfg.range_bin_spacing).astype(int), 0, n_bins - 1)
    v_r = np.array([peak_doppler_offset(doppler_spectrum(profile, b), interpolate) * v_res for b in bins])
    measured = PointCloud(static_points.r, static_points.theta, v_r)
    v_hat = ego_speed_per_point(measured, alpha)
    v_hat = v_hat[np.isfinite(v_hat)]
    if v_hat.size == 0:
        raise IndeterminateError("no static point with usable azimuth")
    width = v_res / 2
    v_b_hat, _ = histogram_mode(v_hat, width, prefer=prefer)
    if interpolate:
        # keep the sub-bin information instead of snapping back to the bin centre
        v_b_hat = float(np.mean(v_hat[bin_index(v_hat, width) == round(v_b_hat / width)]))
    return DopplerEstimate(frame_index, v_b_hat, v_r)
