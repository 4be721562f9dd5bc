"""Synthetic FMCW scene: raw I/Q frames, point clouds and exact ground truth.

Geometry convention used throughout the package: boresight is +Y, azimuth is
measured from boresight toward +X, the ego velocity points at heading alpha
from boresight. A reflector's radar-relative position therefore evolves as

    X(t) = X0 + vx*t - v_b*sin(alpha)*t
    Y(t) = Y0 + vy*t - v_b*cos(alpha)*t

Point-cloud radial speeds follow the closing-positive convention
``v_r = -dr/dt`` so that a static reflector seen by a forward moving radar has
``v_r = v_b*cos(theta - alpha)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from radartrack.radar_model import (
    C_LIGHT,
    UNWRAPPED,
    RadarConfig,
    max_unambiguous_speed,
    range_resolution,
    speed_resolution,
)


@dataclass(frozen=True)
class Reflector:
    initial_position: tuple[float, float]  # (x, y) m at t=0
    velocity: tuple[float, float] = (0.0, 0.0)  # (vx, vy) m/s
    amplitude: float = 1.0
    visible_from: float = 0.0  # s; scripted appearance time
    name: str = ""

    def __post_init__(self) -> None:
        if not self.amplitude > 0:
            raise ValueError(f"reflector amplitude must be > 0, got {self.amplitude}")
        object.__setattr__(self, "initial_position", tuple(map(float, self.initial_position)))
        object.__setattr__(self, "velocity", tuple(map(float, self.velocity)))

    @property
    def is_static(self) -> bool:
        return self.velocity == (0.0, 0.0)

    @classmethod
    def polar(cls, r0: float, theta: float, **kwargs) -> "Reflector":
        """Static (or moving, via ``velocity=``) reflector at range ``r0`` and azimuth ``theta``."""
        return cls((r0 * np.sin(theta), r0 * np.cos(theta)), **kwargs)

    @classmethod
    def mover(cls, r0: float, theta: float, speed: float, gamma: float, **kwargs) -> "Reflector":
        """Reflector moving at ``speed`` with heading ``gamma`` from boresight."""
        return cls.polar(r0, theta, velocity=(speed * np.sin(gamma), speed * np.cos(gamma)), **kwargs)


@dataclass(frozen=True)
class Segment:
    speed: float  # m/s
    heading: float  # rad from boresight
    duration: float  # s


@dataclass(frozen=True)
class EgoTrajectory:
    """Piecewise-constant ego motion.

    Segment changes take effect at frame boundaries: each frame uses the
    segment active at its start time for the whole frame.
    """

    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("trajectory needs at least one segment")
        object.__setattr__(self, "segments", tuple(self.segments))
        for seg in self.segments:
            if seg.speed < 0:
                raise ValueError(f"segment speed must be >= 0, got {seg.speed}")
            if not abs(seg.heading) < np.pi / 2:
                raise ValueError(f"segment heading must satisfy |alpha| < pi/2, got {seg.heading}")
            if not seg.duration > 0:
                raise ValueError(f"segment duration must be > 0, got {seg.duration}")

    @classmethod
    def constant(cls, speed: float, heading: float = 0.0, duration: float = 1e9) -> "EgoTrajectory":
        return cls((Segment(speed, heading, duration),))

    def segment_at(self, t: float) -> Segment:
        elapsed = 0.0
        for seg in self.segments:
            elapsed += seg.duration
            if t < elapsed:
                return seg
        return self.segments[-1]

    def frame_motion(self, cfg: RadarConfig, frame_index: int) -> tuple[float, float, np.ndarray]:
        """(v_b, alpha, ego displacement at frame start) for one frame."""
        tp = cfg.frame_period
        disp = np.zeros(2)
        for f in range(frame_index):
            seg = self.segment_at(f * tp)
            disp += seg.speed * tp * np.array([np.sin(seg.heading), np.cos(seg.heading)])
        seg = self.segment_at(frame_index * tp)
        return seg.speed, seg.heading, disp


@dataclass(frozen=True)
class NoiseSpec:
    """I/Q and phase noise.

    ``iq_std`` is the total complex noise std relative to unit reflector
    amplitude. Phase jitter is drawn per (reflector, chirp) with std
    ``phase_jitter_std + phase_jitter_per_speed * min(v_b, jitter_speed_cap)``.
    The cap lets the speed-driven part saturate; it defaults to no cap.
    """

    iq_std: float = 0.0
    phase_jitter_std: float = 0.0
    phase_jitter_per_speed: float = 0.0
    jitter_speed_cap: float = np.inf

    def jitter_std(self, speed: float) -> float:
        return self.phase_jitter_std + self.phase_jitter_per_speed * min(speed, self.jitter_speed_cap)


NOISELESS = NoiseSpec()


@dataclass(frozen=True)
class QuantSpec:
    angle_noise_std: float = np.deg2rad(2.0)  # rad
    fov: float = np.deg2rad(120.0)  # full azimuth field of view, rad
    clutter_points: int = 0
    clutter_range_jitter: float = 1.0  # in range bins
    quantize: bool = True


@dataclass
class IqCube:
    frame_index: int
    samples: np.ndarray  # complex (Nc, Ns)

    @property
    def shape(self) -> tuple[int, int]:
        return self.samples.shape


@dataclass
class GroundTruth:
    frame_index: int
    ego_speed: float
    heading: float
    ranges: np.ndarray  # per reflector, m at frame start
    azimuths: np.ndarray  # rad
    radial_speeds: np.ndarray  # closing-positive m/s at frame start
    static: np.ndarray  # bool
    visible: np.ndarray  # bool
    chirp_ranges: np.ndarray = field(repr=False)  # (n_reflectors, Nc) exact ranges per chirp


@dataclass
class PointCloud:
    """One frame of radar detections, stored column-wise."""

    r: np.ndarray
    theta: np.ndarray
    v_r: np.ndarray
    phi: np.ndarray | None = None
    source: np.ndarray | None = None  # reflector index, simulator only
    frame_index: int = 0

    def __post_init__(self) -> None:
        self.r = np.asarray(self.r, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        self.v_r = np.asarray(self.v_r, dtype=float)
        if self.phi is None:
            self.phi = np.zeros_like(self.r)
        if self.source is None:
            self.source = np.full(self.r.shape, -1, dtype=int)
        if not (self.r.shape == self.theta.shape == self.v_r.shape):
            raise ValueError("point cloud columns must have equal length")

    def __len__(self) -> int:
        return self.r.size

    def subset(self, mask: np.ndarray) -> "PointCloud":
        return PointCloud(
            self.r[mask], self.theta[mask], self.v_r[mask], self.phi[mask], self.source[mask], self.frame_index
        )


def _seed_sequence(seed: int, frame_index: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, frame_index, stream]))


def _positions(
    scene: Sequence[Reflector], times: np.ndarray, frame_start: float, v_b: float, alpha: float, disp0: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Radar-relative (x, y) of every reflector at ``times``; arrays shaped (K, len(times))."""
    p0 = np.array([s.initial_position for s in scene])
    vel = np.array([s.velocity for s in scene])
    ego_x = disp0[0] + v_b * np.sin(alpha) * (times - frame_start)
    ego_y = disp0[1] + v_b * np.cos(alpha) * (times - frame_start)
    x = p0[:, :1] + vel[:, :1] * times - ego_x
    y = p0[:, 1:] + vel[:, 1:] * times - ego_y
    return x, y


def _check_preconditions(scene: Sequence[Reflector], cfg: RadarConfig, v_b: float) -> None:
    if len(scene) == 0:
        raise ValueError("scene needs at least one reflector")
    vmax = max_unambiguous_speed(cfg, UNWRAPPED)
    if v_b >= vmax:
        raise ValueError(f"ego speed {v_b} m/s is not below the unwrapped limit {vmax:.3f} m/s")


def ground_truth(scene: Sequence[Reflector], traj: EgoTrajectory, cfg: RadarConfig, frame_index: int,
                 quant: QuantSpec | None = None) -> GroundTruth:
    """Exact kinematics of every reflector during one frame."""
    quant = quant or QuantSpec()
    v_b, alpha, disp0 = traj.frame_motion(cfg, frame_index)
    _check_preconditions(scene, cfg, v_b)
    frame_start = frame_index * cfg.frame_period
    times = frame_start + np.arange(cfg.chirps_per_frame) * cfg.chirp_duration
    x, y = _positions(scene, times, frame_start, v_b, alpha, disp0)
    ranges = np.hypot(x, y)
    if np.any(ranges <= range_resolution(cfg)):
        raise ValueError("reflector inside one range-resolution cell of the radar origin")
    r0 = ranges[:, 0]
    az = np.arctan2(x[:, 0], y[:, 0])
    vel = np.array([s.velocity for s in scene])
    rel_vx = vel[:, 0] - v_b * np.sin(alpha)
    rel_vy = vel[:, 1] - v_b * np.cos(alpha)
    range_rate = (x[:, 0] * rel_vx + y[:, 0] * rel_vy) / r0
    visible = (
        np.array([s.visible_from <= frame_start for s in scene])
        & (np.abs(az) <= quant.fov / 2)
        & (r0 < cfg.max_range)
    )
    return GroundTruth(
        frame_index=frame_index,
        ego_speed=v_b,
        heading=alpha,
        ranges=r0,
        azimuths=az,
        radial_speeds=-range_rate,
        static=np.array([s.is_static for s in scene]),
        visible=visible,
        chirp_ranges=ranges,
    )


def synthesize_frame(
    scene: Sequence[Reflector],
    traj: EgoTrajectory,
    cfg: RadarConfig,
    frame_index: int,
    noise: NoiseSpec = NOISELESS,
    seed: int = 0,
    quant: QuantSpec | None = None,
) -> tuple[IqCube, GroundTruth]:
    """Dechirped beat signal for one frame plus its ground truth.

    Each visible reflector k contributes
    ``A_k * exp(j*(2*pi*f_b*n/f_adc + 4*pi*r_k(t_i)/lambda))`` with
    ``f_b = S*2*r_k(t_i)/c`` and ``t_i`` the start of chirp i.
    """
    truth = ground_truth(scene, traj, cfg, frame_index, quant)
    nc, ns = cfg.chirps_per_frame, cfg.samples_per_chirp
    n = np.arange(ns)
    rng = _seed_sequence(seed, frame_index, 0)
    jitter = noise.jitter_std(truth.ego_speed)

    samples = np.zeros((nc, ns), dtype=np.complex128)
    lam = cfg.wavelength
    for k, refl in enumerate(scene):
        # always draw, so visibility changes never shift the noise stream of other reflectors
        eps = rng.standard_normal(nc) * jitter if jitter > 0 else np.zeros(nc)
        if not truth.visible[k]:
            continue
        r = truth.chirp_ranges[k]
        f_b = cfg.slope * 2.0 * r / C_LIGHT
        phase = 2 * np.pi * np.outer(f_b / cfg.adc_sample_rate, n) + (4 * np.pi * r / lam + eps)[:, None]
        samples += refl.amplitude * np.exp(1j * phase)
    if noise.iq_std > 0:
        scale = noise.iq_std / np.sqrt(2.0)
        samples += scale * (rng.standard_normal((nc, ns)) + 1j * rng.standard_normal((nc, ns)))
    return IqCube(frame_index, samples), truth


def synthesize_pointcloud(
    scene: Sequence[Reflector],
    traj: EgoTrajectory,
    cfg: RadarConfig,
    frame_index: int,
    quantization: QuantSpec | None = None,
    seed: int = 0,
    truth: GroundTruth | None = None,
) -> PointCloud:
    """Detections for one frame: one point per visible reflector plus clutter duplicates.

    Range and radial speed are rounded to the range and speed resolution;
    azimuth gets zero-mean Gaussian noise and is clamped to the field of view.
    """
    quant = quantization or QuantSpec()
    if truth is None:
        truth = ground_truth(scene, traj, cfg, frame_index, quant)
    rng = _seed_sequence(seed, frame_index, 1)
    d_res, v_res = range_resolution(cfg), speed_resolution(cfg)
    half_fov = quant.fov / 2

    idx = np.flatnonzero(truth.visible)
    theta_noise = rng.standard_normal(len(scene)) * quant.angle_noise_std
    r = truth.ranges[idx]
    theta = truth.azimuths[idx] + theta_noise[idx]
    v_r = truth.radial_speeds[idx]
    source = idx

    if quant.clutter_points > 0 and idx.size:
        picks = rng.choice(idx, size=quant.clutter_points)
        jitter_r = rng.uniform(-1, 1, quant.clutter_points) * quant.clutter_range_jitter * d_res
        jitter_t = rng.standard_normal(quant.clutter_points) * quant.angle_noise_std
        r = np.concatenate([r, truth.ranges[picks] + jitter_r])
        theta = np.concatenate([theta, truth.azimuths[picks] + theta_noise[picks] + jitter_t])
        v_r = np.concatenate([v_r, truth.radial_speeds[picks]])
        source = np.concatenate([source, picks])

    if quant.quantize:
        r = np.maximum(np.round(r / d_res), 1) * d_res
        v_r = np.round(v_r / v_res) * v_res
    theta = np.clip(theta, -half_fov, half_fov)
    return PointCloud(r, theta, v_r, np.zeros_like(r), source.astype(int), frame_index)


# --- I/Q binary format -------------------------------------------------------

IQ_MAGIC = b"RTIQ"
IQ_VERSION = 1
_HEADER = struct.Struct("<4sIIII12x")  # 32 bytes


def write_iq(path: str | Path, cubes: Iterable[IqCube], cfg: RadarConfig) -> int:
    """Write cubes as little-endian float32 (I, Q) pairs behind a 32-byte header."""
    cubes = list(cubes)
    nc, ns = cfg.chirps_per_frame, cfg.samples_per_chirp
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(IQ_MAGIC, IQ_VERSION, nc, ns, len(cubes)))
        for cube in cubes:
            if cube.shape != (nc, ns):
                raise ValueError(f"cube shape {cube.shape} does not match config ({nc}, {ns})")
            fh.write(np.ascontiguousarray(cube.samples, dtype="<c8").tobytes())
    return len(cubes)


def read_iq_header(fh: BinaryIO) -> tuple[int, int, int]:
    raw = fh.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise ValueError("truncated I/Q header")
    magic, version, nc, ns, count = _HEADER.unpack(raw)
    if magic != IQ_MAGIC:
        raise ValueError(f"bad I/Q magic {magic!r}")
    if version != IQ_VERSION:
        raise ValueError(f"unsupported I/Q version {version}")
    return nc, ns, count


def read_iq(path: str | Path) -> list[IqCube]:
    with open(path, "rb") as fh:
        nc, ns, count = read_iq_header(fh)
        data = np.frombuffer(fh.read(), dtype="<c8")
    if data.size != count * nc * ns:
        raise ValueError(f"expected {count * nc * ns} samples, found {data.size}")
    data = data.reshape(count, nc, ns).astype(np.complex128)
    return [IqCube(f, data[f]) for f in range(count)]
