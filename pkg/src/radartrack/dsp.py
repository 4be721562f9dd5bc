"""Range/doppler spectra, range-bin selection and phase tracks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from radartrack.radar_model import RadarConfig
from radartrack.scene_sim import IqCube

SNR_PERCENTILE = 95.0
BIN_WINDOW = 3
DEFAULT_RHO = 3.0

_TINY = np.finfo(float).tiny


@dataclass
class RangeProfile:
    spectrum: np.ndarray  # complex (Nc, Ns)
    snr_db: np.ndarray  # (Ns,)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.spectrum).mean(axis=0)


@dataclass
class PhaseTrack:
    range_bin: int
    phase: np.ndarray  # unwrapped, rad per chirp
    times: np.ndarray  # s from frame start
    derivative: np.ndarray | None = None  # rad/s

    def __post_init__(self) -> None:
        if self.phase.shape != self.times.shape:
            raise ValueError("phase and times must have equal length")

    @property
    def is_valid(self) -> bool:
        return bool(np.all(np.abs(np.diff(self.phase)) < 2 * np.pi))


def snr_db(magnitude: np.ndarray) -> np.ndarray:
    """20*log10(|x| / median|x|); an all-zero input yields 0 dB everywhere."""
    floor = np.median(magnitude)
    if floor <= 0:
        if not np.any(magnitude > 0):
            return np.zeros_like(magnitude)
        floor = _TINY
    return 20.0 * np.log10(np.maximum(magnitude, _TINY) / floor)


def range_fft(cube: IqCube | np.ndarray) -> RangeProfile:
    """Hann-windowed FFT along the sample axis of every chirp."""
    samples = cube.samples if isinstance(cube, IqCube) else np.asarray(cube)
    window = np.hanning(samples.shape[1])
    spectrum = np.fft.fft(samples * window, axis=1)
    return RangeProfile(spectrum, snr_db(np.abs(spectrum).mean(axis=0)))


def _local_maxima(values: np.ndarray) -> np.ndarray:
    """Indices at least as large as both neighbours and strictly larger than one."""
    left = np.concatenate([[-np.inf], values[:-1]])
    right = np.concatenate([values[1:], [-np.inf]])
    return np.flatnonzero((values >= left) & (values >= right) & ((values > left) | (values > right)))


def select_range_bins(
    profile: RangeProfile,
    static_ranges: Sequence[float],
    cfg: RadarConfig,
    percentile: float = SNR_PERCENTILE,
    window: int = BIN_WINDOW,
) -> list[int]:
    """Peak bins above the SNR percentile that lie within ``window`` bins of a static range."""
    if len(static_ranges) == 0:
        return []
    snr = profile.snr_db
    threshold = np.percentile(snr, percentile)
    peaks = [b for b in _local_maxima(snr) if snr[b] >= threshold and snr[b] > 0]
    static_bins = np.round(np.asarray(static_ranges, dtype=float) / cfg.range_bin_spacing).astype(int)
    keep = {int(b) for b in peaks if np.any(np.abs(static_bins - b) <= window)}
    return sorted(keep)


def unwrap_phase(raw_phase: Sequence[float]) -> np.ndarray:
    """Remove 2*pi jumps: any step larger than pi in magnitude is folded into (-pi, pi]."""
    raw = np.asarray(raw_phase, dtype=float)
    if raw.size < 2:
        raise ValueError("need at least two phase samples")
    steps = np.diff(raw)
    wrapped = np.abs(steps) > np.pi
    steps[wrapped] = np.pi - np.mod(np.pi - steps[wrapped], 2 * np.pi)
    out = np.empty_like(raw)
    out[0] = raw[0]
    np.cumsum(steps, out=out[1:])
    out[1:] += raw[0]
    return out


def phase_derivative(track: PhaseTrack | np.ndarray, cfg: RadarConfig) -> np.ndarray:
    """Central differences inside the frame, one-sided at the first and last chirp."""
    phase = track.phase if isinstance(track, PhaseTrack) else np.asarray(track, dtype=float)
    tc = cfg.chirp_duration
    out = np.empty_like(phase)
    out[1:-1] = (phase[2:] - phase[:-2]) / (2 * tc)
    out[0] = (phase[1] - phase[0]) / tc
    out[-1] = (phase[-1] - phase[-2]) / tc
    return out


def extract_phase_track(profile: RangeProfile, range_bin: int, cfg: RadarConfig) -> PhaseTrack:
    """Unwrapped per-chirp phase at one range bin, with its time derivative.

    The bin phase of a symmetric-windowed FFT advances with range at the
    mid-ramp frequency; it is rescaled so that it advances at the carrier
    wavelength, i.e. as ``4*pi*r/lambda``.
    """
    raw = np.angle(profile.spectrum[:, range_bin])
    phase = unwrap_phase(raw) * (cfg.carrier_frequency / cfg.phase_reference_frequency)
    times = np.arange(cfg.chirps_per_frame) * cfg.chirp_duration
    track = PhaseTrack(int(range_bin), phase, times)
    track.derivative = phase_derivative(track, cfg)
    return track


def doppler_spectrum(cube: IqCube | RangeProfile, range_bin: int) -> np.ndarray:
    """FFT across chirps at one range bin, shifted so index 0 is the most negative doppler.

    The sign is chosen so that positive doppler indices correspond to closing
    (range-decreasing) reflectors. No window is applied.
    """
    spectrum = cube.spectrum if isinstance(cube, RangeProfile) else range_fft(cube).spectrum
    if not 0 <= range_bin < spectrum.shape[1]:
        raise IndexError(f"range bin {range_bin} out of range")
    # closing targets rotate the phase clockwise, so conjugating maps them to positive bins
    return np.fft.fftshift(np.fft.fft(np.conj(spectrum[:, range_bin])))


def doppler_bin_offsets(n_chirps: int) -> np.ndarray:
    """Doppler index offset from zero for each entry of a shifted spectrum."""
    return np.arange(n_chirps) - n_chirps // 2


def spectral_peaks(spectrum: np.ndarray) -> np.ndarray:
    """Complex values at the circular local maxima of a doppler spectrum above its median magnitude."""
    spectrum = np.asarray(spectrum)
    mag = np.abs(spectrum)
    if mag.size < 3:
        return spectrum[mag > 0]
    left, right = np.roll(mag, 1), np.roll(mag, -1)
    is_peak = (mag >= left) & (mag >= right) & ((mag > left) | (mag > right)) & (mag > np.median(mag))
    return spectrum[is_peak]


def dominant_phasor_gate(amplitudes: Sequence[complex] | np.ndarray, rho: float = DEFAULT_RHO) -> bool:
    """True when the largest phasor magnitude is at least ``rho`` times the runner-up.

    ``amplitudes`` are the individual phasors sharing a range bin, e.g. the
    output of :func:`spectral_peaks`. A lone phasor always passes.
    """
    if not rho > 1:
        raise ValueError(f"rho must be > 1, got {rho}")
    mag = np.sort(np.abs(np.asarray(amplitudes)))[::-1]
    if mag.size == 0 or mag[0] <= 0:
        return False
    if mag.size == 1:
        return True
    return bool(mag[0] >= rho * mag[1])


def bin_passes_gate(source: IqCube | RangeProfile, range_bin: int, rho: float = DEFAULT_RHO) -> bool:
    """Dominant-phasor gate applied to the doppler spectrum of one range bin."""
    return dominant_phasor_gate(spectral_peaks(doppler_spectrum(source, range_bin)), rho)
