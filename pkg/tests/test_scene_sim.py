import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radartrack.dsp import extract_phase_track, range_fft
from radartrack.radar_model import range_resolution, speed_resolution
from radartrack.scene_sim import (
    EgoTrajectory,
    IqCube,
    NoiseSpec,
    QuantSpec,
    Reflector,
    ground_truth,
    read_iq,
    read_iq_header,
    synthesize_frame,
    synthesize_pointcloud,
    write_iq,
)

from conftest import deg

EXACT = QuantSpec(angle_noise_std=0.0, quantize=False)


def test_static_radar_has_constant_phase(cfg):
    cube, _ = synthesize_frame([Reflector.polar(3.0, 0.0)], EgoTrajectory.constant(0.0), cfg, 0)
    bin_ = round(3.0 / range_resolution(cfg))
    track = extract_phase_track(range_fft(cube), bin_, cfg)
    assert np.max(np.abs(track.phase - track.phase[0])) < 1e-9


def test_boresight_phase_slope(cfg):
    v_b = 0.12
    cube, _ = synthesize_frame([Reflector.polar(3.0, 0.0)], EgoTrajectory.constant(v_b), cfg, 0)
    track = extract_phase_track(range_fft(cube), round(3.0 / range_resolution(cfg)), cfg)
    expected = -4 * np.pi * v_b / cfg.wavelength
    slope = np.polyfit(track.times, track.phase, 1)[0]
    assert slope == pytest.approx(expected, rel=1e-6)
    np.testing.assert_allclose(track.derivative, expected, rtol=1e-2)


def test_range_peak_lands_in_expected_bin(cfg):
    cube, _ = synthesize_frame([Reflector.polar(2.0, 0.0)], EgoTrajectory.constant(0.0), cfg, 0)
    profile = range_fft(cube)
    assert int(np.argmax(np.abs(profile.spectrum[0]))) == 47 == round(2.0 / 0.0429)


@pytest.mark.parametrize("theta, expected", [(0.0, 0.5), (60.0, 0.25)])
def test_static_radial_speed(cfg, theta, expected):
    pc = synthesize_pointcloud([Reflector.polar(4.0, deg(theta))], EgoTrajectory.constant(0.5), cfg, 0, EXACT)
    assert pc.v_r[0] == pytest.approx(expected, abs=1e-12)


def test_dynamic_radial_speed(cfg):
    # target drifts along boresight at 0.3 m/s while the radar closes at 0.5 m/s
    scene = [Reflector.mover(4.0, deg(20), speed=0.3, gamma=0.0)]
    traj = EgoTrajectory.constant(0.5)
    pc = synthesize_pointcloud(scene, traj, cfg, 0, EXACT)
    assert pc.v_r[0] == pytest.approx(0.2 * np.cos(deg(20)), abs=1e-12)
    assert pc.v_r[0] == pytest.approx(0.18794, abs=5e-6)
    truth = ground_truth(scene, traj, cfg, 0)
    r = truth.chirp_ranges[0]
    fd = -(-r[2] + 4 * r[1] - 3 * r[0]) / (2 * cfg.chirp_duration)
    assert fd == pytest.approx(pc.v_r[0], abs=1e-6)


def test_quantized_pointcloud_sits_on_the_grid(cfg):
    scene = [Reflector.polar(3.3, deg(25)), Reflector.polar(5.1, deg(-40))]
    pc = synthesize_pointcloud(scene, EgoTrajectory.constant(0.37, deg(5)), cfg, 2, QuantSpec(), seed=4)
    d, v = range_resolution(cfg), speed_resolution(cfg)
    np.testing.assert_allclose(pc.r / d, np.round(pc.r / d), atol=1e-9)
    np.testing.assert_allclose(pc.v_r / v, np.round(pc.v_r / v), atol=1e-9)
    assert np.all(np.abs(pc.theta) <= deg(60) + 1e-12)


def test_clutter_duplicates_existing_reflectors(cfg):
    scene = [Reflector.polar(3.0, 0.0), Reflector.polar(4.0, deg(30))]
    pc = synthesize_pointcloud(scene, EgoTrajectory.constant(0.3), cfg, 0, QuantSpec(clutter_points=5), seed=1)
    assert len(pc) == 7
    assert set(pc.source[2:]) <= {0, 1}


scenes = st.lists(
    st.tuples(st.floats(1.0, 9.0), st.floats(-55, 55), st.floats(0.0, 0.6), st.floats(-180, 180)),
    min_size=1, max_size=5,
)


@settings(max_examples=40, deadline=None)
@given(scenes, st.floats(0.0, 1.2), st.floats(-40, 40), st.integers(0, 5))
def test_truth_ranges_match_radial_speed(cfg, spec, v_b, alpha, frame):
    scene = [Reflector.mover(r, deg(th), sp, deg(g)) for r, th, sp, g in spec]
    truth = ground_truth(scene, EgoTrajectory.constant(v_b, deg(alpha)), cfg, frame)
    r = truth.chirp_ranges
    fd = -(-r[:, 2] + 4 * r[:, 1] - 3 * r[:, 0]) / (2 * cfg.chirp_duration)
    np.testing.assert_allclose(fd, truth.radial_speeds, atol=1e-6)


@pytest.mark.parametrize("theta, alpha, v_b", [(0, 0, 0.3), (25, -10, 0.8), (-40, 15, 0.05)])
def test_phase_tracks_range(cfg, theta, alpha, v_b):
    traj = EgoTrajectory.constant(v_b, deg(alpha))
    cube, truth = synthesize_frame([Reflector.polar(4.2, deg(theta))], traj, cfg, 0)
    track = extract_phase_track(range_fft(cube), round(truth.ranges[0] / range_resolution(cfg)), cfg)
    r = truth.chirp_ranges[0]
    np.testing.assert_allclose(track.phase - track.phase[0], 4 * np.pi * (r - r[0]) / cfg.wavelength, atol=1e-3)


def test_fixed_seed_is_bit_identical(cfg):
    scene = [Reflector.polar(3.0, 0.2), Reflector.mover(5.0, -0.3, 0.4, 2.9)]
    noise = NoiseSpec(iq_std=0.1, phase_jitter_std=0.01)
    a, _ = synthesize_frame(scene, EgoTrajectory.constant(0.3), cfg, 3, noise, seed=9)
    b, _ = synthesize_frame(scene, EgoTrajectory.constant(0.3), cfg, 3, noise, seed=9)
    c, _ = synthesize_frame(scene, EgoTrajectory.constant(0.3), cfg, 3, noise, seed=10)
    assert a.samples.tobytes() == b.samples.tobytes()
    assert a.samples.tobytes() != c.samples.tobytes()
    assert a.shape == (cfg.chirps_per_frame, cfg.samples_per_chirp)


def test_jitter_saturates_at_cap():
    n = NoiseSpec(phase_jitter_std=0.005, phase_jitter_per_speed=0.1, jitter_speed_cap=0.4)
    assert n.jitter_std(0.2) == pytest.approx(0.025)
    assert n.jitter_std(0.9) == pytest.approx(0.045)


def test_reflector_at_origin_rejected(cfg):
    with pytest.raises(ValueError):
        synthesize_frame([Reflector.polar(0.03, 0.0)], EgoTrajectory.constant(0.0), cfg, 0)


def test_speed_above_unwrap_limit_rejected(cfg):
    with pytest.raises(ValueError):
        synthesize_frame([Reflector.polar(3.0, 0.0)], EgoTrajectory.constant(50.0), cfg, 0)


def test_bad_inputs():
    with pytest.raises(ValueError):
        Reflector((1.0, 1.0), amplitude=0.0)
    with pytest.raises(ValueError):
        EgoTrajectory.constant(0.2, heading=deg(95))


def test_scripted_visibility(cfg):
    scene = [Reflector.polar(3.0, 0.0), Reflector.polar(6.0, 0.0, visible_from=0.25)]
    traj = EgoTrajectory.constant(0.2)
    assert list(ground_truth(scene, traj, cfg, 0).visible) == [True, False]
    assert list(ground_truth(scene, traj, cfg, 3).visible) == [True, True]
    assert len(synthesize_pointcloud(scene, traj, cfg, 0)) == 1


def test_trajectory_segments_switch_at_frame_boundaries(cfg):
    traj = EgoTrajectory.constant(0.2, duration=0.3)
    traj = EgoTrajectory(traj.segments + EgoTrajectory.constant(0.6).segments)
    speeds = [traj.frame_motion(cfg, f)[0] for f in range(5)]
    assert speeds == [0.2, 0.2, 0.2, 0.6, 0.6]
    _, _, disp = traj.frame_motion(cfg, 4)
    assert disp[1] == pytest.approx(0.2 * 0.3 + 0.6 * 0.1)


def test_iq_round_trip(tmp_path, cfg):
    rng = np.random.default_rng(0)
    shape = (cfg.chirps_per_frame, cfg.samples_per_chirp)
    cubes = [IqCube(i, rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) for i in range(3)]
    path = tmp_path / "iq.bin"
    write_iq(path, cubes, cfg)
    assert path.stat().st_size == 32 + 3 * shape[0] * shape[1] * 8
    with open(path, "rb") as fh:
        assert read_iq_header(fh) == (*shape, 3)
    back = read_iq(path)
    assert [c.frame_index for c in back] == [0, 1, 2]
    for a, b in zip(cubes, back):
        np.testing.assert_array_equal(b.samples, a.samples.astype(np.complex64))


def test_iq_bad_magic_rejected():
    with pytest.raises(ValueError):
        read_iq_header(io.BytesIO(b"NOPE" + bytes(28)))
