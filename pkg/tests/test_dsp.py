import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radartrack.doppler import peak_doppler_offset
from radartrack.dsp import (
    PhaseTrack,
    bin_passes_gate,
    doppler_bin_offsets,
    doppler_spectrum,
    dominant_phasor_gate,
    extract_phase_track,
    phase_derivative,
    range_fft,
    select_range_bins,
    spectral_peaks,
    unwrap_phase,
)
from radartrack.radar_model import range_resolution, speed_resolution
from radartrack.scene_sim import EgoTrajectory, IqCube, Reflector, synthesize_frame

from conftest import deg


def profile_of(cfg, scene, v_b=0.0, alpha=0.0):
    cube, _ = synthesize_frame(scene, EgoTrajectory.constant(v_b, alpha), cfg, 0)
    return cube, range_fft(cube)


def wrap(x):
    return np.angle(np.exp(1j * np.asarray(x)))


# --- range FFT and bin selection ---------------------------------------------

def test_zero_cube_gives_flat_profile(cfg):
    cube = IqCube(0, np.zeros((cfg.chirps_per_frame, cfg.samples_per_chirp), complex))
    profile = range_fft(cube)
    assert np.all(profile.snr_db == profile.snr_db[0])
    assert select_range_bins(profile, [2.0, 4.0], cfg) == []


def test_two_reflectors_give_two_peaks(cfg):
    _, profile = profile_of(cfg, [Reflector.polar(2.0, 0.0), Reflector.polar(3.0, deg(20))])
    mag = np.abs(profile.spectrum[0])
    top = sorted(np.argsort(mag)[::-1][:2])
    assert top == [round(2.0 / 0.0429), round(3.0 / 0.0429)]


def test_range_fft_is_linear(cfg):
    a, pa = profile_of(cfg, [Reflector.polar(2.0, 0.0)], 0.2)
    b, pb = profile_of(cfg, [Reflector.polar(5.0, deg(30), amplitude=0.4)], 0.2)
    both = range_fft(IqCube(0, a.samples + b.samples))
    np.testing.assert_allclose(both.spectrum, pa.spectrum + pb.spectrum, rtol=1e-6, atol=1e-9)


def test_select_bin_near_static_range(cfg):
    _, profile = profile_of(cfg, [Reflector.polar(2.0, 0.0)])
    assert select_range_bins(profile, [2.0], cfg) == [47]
    assert select_range_bins(profile, [4.0], cfg) == []
    assert select_range_bins(profile, [], cfg) == []


def test_neighbouring_statics_both_candidates(cfg):
    d = range_resolution(cfg)
    _, profile = profile_of(cfg, [Reflector.polar(60 * d, 0.0), Reflector.polar(61 * d, deg(25))])
    bins = select_range_bins(profile, [60 * d, 61 * d], cfg)
    assert bins and set(bins) <= set(range(57, 65))


# --- unwrapping and derivatives ----------------------------------------------

def test_unwrap_examples():
    np.testing.assert_allclose(unwrap_phase([0, 0.1, 0.2]), [0, 0.1, 0.2])
    np.testing.assert_allclose(unwrap_phase([3.0, -3.0]), [3.0, 3.0 - 6.0 + 2 * np.pi])
    assert unwrap_phase([3.0, -3.0])[1] == pytest.approx(3.2832, abs=1e-4)
    with pytest.raises(ValueError):
        unwrap_phase([1.0])


def test_unwrap_recovers_ramp(cfg):
    t = np.arange(4000) * cfg.chirp_duration
    ramp = 50.0 * t + 0.3
    assert np.max(np.abs(unwrap_phase(wrap(ramp)) - ramp)) < 1e-9


steps = st.lists(st.floats(-3.1, 3.1), min_size=1, max_size=200)


@given(st.floats(-10, 10), steps)
def test_unwrap_inverts_wrapping(start, increments):
    x = start + np.concatenate([[0.0], np.cumsum(increments)])
    offset = unwrap_phase(wrap(x)) - x
    k = offset / (2 * np.pi)
    np.testing.assert_allclose(k, np.round(k[0]), atol=1e-9)
    np.testing.assert_allclose(unwrap_phase(wrap(x)), np.unwrap(wrap(x)), atol=1e-9)


def test_derivative_exact_for_lines_and_parabolas(cfg):
    t = np.arange(cfg.chirps_per_frame) * cfg.chirp_duration
    np.testing.assert_allclose(phase_derivative(7.0 * t, cfg), 7.0, rtol=1e-9)
    a = 1234.0
    theta = phase_derivative(a * t**2, cfg)
    np.testing.assert_allclose(theta[1:-1], 2 * a * t[1:-1], rtol=1e-9)
    assert not np.any(phase_derivative(np.full(10, 2.5), cfg))


def test_track_slope_from_simulated_scene(cfg):
    v_b = 0.12
    _, profile = profile_of(cfg, [Reflector.polar(2.0, 0.0)], v_b)
    track = extract_phase_track(profile, 47, cfg)
    np.testing.assert_allclose(track.derivative, -4 * np.pi * v_b / cfg.wavelength, rtol=0.01)
    assert isinstance(track, PhaseTrack) and track.derivative.shape == track.phase.shape
    assert np.all(np.abs(np.diff(track.phase)) < 2 * np.pi)


# --- doppler spectrum ----------------------------------------------------------

def peak_offset(cfg, v_b, r=3.0):
    cube, _ = synthesize_frame([Reflector.polar(r, 0.0)], EgoTrajectory.constant(v_b), cfg, 0)
    return peak_doppler_offset(doppler_spectrum(cube, round(r / range_resolution(cfg))))


def test_zero_speed_energy_at_zero_doppler(cfg):
    cube, _ = synthesize_frame([Reflector.polar(3.0, 0.0)], EgoTrajectory.constant(0.0), cfg, 0)
    spec = doppler_spectrum(cube, 70)
    assert doppler_bin_offsets(spec.size)[np.argmax(np.abs(spec))] == 0
    assert np.abs(spec[spec.size // 2]) ** 2 > 0.999 * np.sum(np.abs(spec) ** 2)


@pytest.mark.parametrize("q", [1, 2, 5, 17])
def test_on_grid_speed_peaks_at_its_bin(cfg, q):
    # the bin phase advances at the mid-ramp frequency, so "on-grid" is on that grid
    v = q * speed_resolution(cfg) * cfg.carrier_frequency / cfg.phase_reference_frequency
    assert peak_offset(cfg, v) == q


def test_half_bin_speed_falls_to_lower_bin(cfg):
    v = 1.5 * speed_resolution(cfg) * cfg.carrier_frequency / cfg.phase_reference_frequency
    assert peak_offset(cfg, v) == 1


def test_nominal_one_and_half_resolution(cfg):
    # 1.5 v_res at the carrier is 1.534 bins at the mid-ramp reference: nearest bin wins
    assert peak_offset(cfg, 1.5 * speed_resolution(cfg)) == 2



@pytest.mark.xfail(strict=True, reason="bins sit on the mid-ramp grid, so 1.5 v_res is 1.534 bins and rounds up")
def test_nominal_one_and_half_resolution_floors_to_bin_one(cfg):
    assert peak_offset(cfg, 1.5 * speed_resolution(cfg)) == 1


def test_receding_target_on_negative_side(cfg):
    cube, _ = synthesize_frame([Reflector.mover(3.0, 0.0, 0.3, 0.0)], EgoTrajectory.constant(0.0), cfg, 0)
    assert peak_doppler_offset(doppler_spectrum(cube, 70)) < 0


def test_doppler_spectrum_bad_bin(cfg):
    cube, _ = synthesize_frame([Reflector.polar(3.0, 0.0)], EgoTrajectory.constant(0.0), cfg, 0)
    with pytest.raises(IndexError):
        doppler_spectrum(cube, cfg.samples_per_chirp)


# --- dominant-phasor gate ------------------------------------------------------

def test_gate_examples():
    assert dominant_phasor_gate([10, 1, 0.5], 3)
    assert not dominant_phasor_gate([10, 9], 3)
    assert dominant_phasor_gate([2 + 2j])
    assert not dominant_phasor_gate([])
    with pytest.raises(ValueError):
        dominant_phasor_gate([1.0], 1.0)


def test_spectral_peaks_finds_local_maxima():
    spectrum = np.array([0, 1, 5, 1, 0, 0, 2, 0.5, 0, 0, 0, 0])
    assert sorted(np.abs(spectral_peaks(spectrum))) == [2, 5]


def test_five_to_one_pair_tracks_dominant(cfg):
    d = range_resolution(cfg)
    v_b = 0.3
    strong = Reflector.polar(70 * d, 0.0, amplitude=5.0)
    weak = Reflector.polar(70 * d + 0.004, deg(50), amplitude=1.0)  # same bin, different radial speed
    cube, truth = synthesize_frame([strong, weak], EgoTrajectory.constant(v_b), cfg, 0)
    assert bin_passes_gate(cube, 70)
    track = extract_phase_track(range_fft(cube), 70, cfg)
    slope = np.polyfit(track.times, track.phase, 1)[0]
    dominant = -4 * np.pi * truth.radial_speeds[0] / cfg.wavelength
    assert slope == pytest.approx(dominant, rel=0.10)


def test_equal_pair_fails_gate(cfg):
    d = range_resolution(cfg)
    scene = [Reflector.polar(70 * d, 0.0), Reflector.polar(70 * d + 0.004, deg(60))]
    cube, _ = synthesize_frame(scene, EgoTrajectory.constant(0.6), cfg, 0)
    assert not bin_passes_gate(cube, 70)
