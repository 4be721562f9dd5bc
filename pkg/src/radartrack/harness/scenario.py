"""Scenario definitions and their TOML representation."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from radartrack.radar_model import UNWRAPPED, RadarConfig, max_unambiguous_speed
from radartrack.scene_sim import EgoTrajectory, NoiseSpec, QuantSpec, Reflector, Segment

# Frozen once against the 3-static-object scene (see README, "Noise calibration").
# Jitter grows with ego speed and saturates at 0.35 m/s.
CALIBRATED_NOISE = NoiseSpec(iq_std=0.1, phase_jitter_std=0.005, phase_jitter_per_speed=0.11,
                             jitter_speed_cap=0.35)
MILD_NOISE = NoiseSpec(iq_std=0.05, phase_jitter_std=0.005, phase_jitter_per_speed=0.0)

NOISE_PRESETS = {
    "none": NoiseSpec(),
    "mild": MILD_NOISE,
    "calibrated": CALIBRATED_NOISE,
}


class ScenarioError(ValueError):
    """Scenario validation failure; ``errors`` holds one message per offending field."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid scenario:\n  " + "\n  ".join(errors))


@dataclass(frozen=True)
class PipelineParams:
    k: float = 1.0
    rho: float = 3.0
    root_bin_width: float | None = None  # default v_res/4
    tol_imag: float = 1e-6
    snr_percentile: float = 95.0
    bin_window: int = 3
    doppler_interpolate: bool = False
    robust_sigma: bool = True
    refine_alpha: bool = False  # least-squares heading refinement after the pairwise mode


@dataclass(frozen=True)
class Scenario:
    name: str
    radar: RadarConfig
    reflectors: tuple[Reflector, ...]
    trajectory: EgoTrajectory
    frames: int
    seed: int = 0
    noise: NoiseSpec = NoiseSpec()
    quantization: QuantSpec = QuantSpec()
    pipeline: PipelineParams = PipelineParams()
    noise_preset: str = "custom"
    description: str = ""

    def validate(self) -> None:
        errors = []
        if self.frames < 1:
            errors.append(f"frames: must be >= 1, got {self.frames}")
        if not self.reflectors:
            errors.append("reflectors: at least one reflector is required")
        vmax = max_unambiguous_speed(self.radar, UNWRAPPED)
        for i, seg in enumerate(self.trajectory.segments):
            if seg.speed >= vmax:
                errors.append(f"trajectory.segments[{i}].speed: {seg.speed} m/s exceeds the {vmax:.3f} m/s limit")
        n = self.noise
        if min(n.iq_std, n.phase_jitter_std, n.phase_jitter_per_speed, n.jitter_speed_cap) < 0:
            errors.append("noise: standard deviations and the jitter speed cap must be >= 0")
        if not self.pipeline.rho > 1:
            errors.append(f"pipeline.rho: must be > 1, got {self.pipeline.rho}")
        if not self.pipeline.k > 0:
            errors.append(f"pipeline.k: must be > 0, got {self.pipeline.k}")
        if errors:
            raise ScenarioError(errors)

    def with_speed(self, speed: float, heading: float = 0.0) -> "Scenario":
        duration = self.frames * self.radar.frame_period
        return replace(
            self,
            name=f"{self.name}@{speed:.3f}",
            trajectory=EgoTrajectory((Segment(speed, heading, duration),)),
        )


def _get(section: Mapping[str, Any], key: str, where: str, errors: list[str], kind=float, default=None):
    if key not in section:
        if default is None:
            errors.append(f"{where}.{key}: missing")
        return default
    value = section[key]
    try:
        return kind(value)
    except (TypeError, ValueError):
        errors.append(f"{where}.{key}: expected {kind.__name__}, got {value!r}")
        return default


def _reflector(entry: Mapping[str, Any], i: int, errors: list[str]) -> Reflector | None:
    where = f"reflectors[{i}]"
    known = {"name", "range", "azimuth_deg", "position", "velocity", "speed", "heading_deg", "amplitude",
             "visible_from"}
    for key in set(entry) - known:
        errors.append(f"{where}.{key}: unknown key")
    amplitude = _get(entry, "amplitude", where, errors, default=1.0)
    visible_from = _get(entry, "visible_from", where, errors, default=0.0)
    name = str(entry.get("name", f"r{i}"))
    if "position" in entry:
        pos = entry["position"]
        if not (isinstance(pos, list) and len(pos) == 2):
            errors.append(f"{where}.position: expected [x, y]")
            return None
        x, y = map(float, pos)
    elif "range" in entry:
        r0 = _get(entry, "range", where, errors)
        az = math.radians(_get(entry, "azimuth_deg", where, errors, default=0.0))
        if r0 is None:
            return None
        x, y = r0 * math.sin(az), r0 * math.cos(az)
    else:
        errors.append(f"{where}: needs either position or range/azimuth_deg")
        return None
    if "velocity" in entry:
        vel = entry["velocity"]
        if not (isinstance(vel, list) and len(vel) == 2):
            errors.append(f"{where}.velocity: expected [vx, vy]")
            return None
        velocity = tuple(map(float, vel))
    elif "speed" in entry:
        speed = _get(entry, "speed", where, errors)
        gamma = math.radians(_get(entry, "heading_deg", where, errors, default=0.0))
        velocity = (speed * math.sin(gamma), speed * math.cos(gamma))
    else:
        velocity = (0.0, 0.0)
    try:
        return Reflector((x, y), velocity, amplitude, visible_from, name)
    except ValueError as exc:
        errors.append(f"{where}: {exc}")
        return None


def scenario_from_mapping(data: Mapping[str, Any]) -> list[Scenario]:
    """Parse a scenario document; a ``[sweep]`` table expands into one scenario per speed."""
    errors: list[str] = []
    known = {"name", "description", "seed", "frames", "noise_preset", "radar", "trajectory", "reflectors",
             "noise", "quantization", "pipeline", "sweep"}
    for key in set(data) - known:
        errors.append(f"{key}: unknown key")

    name = str(data.get("name", "scenario"))
    seed = _get(data, "seed", "scenario", errors, int, default=0)
    frames = _get(data, "frames", "scenario", errors, int)

    try:
        radar = RadarConfig.from_mapping(data.get("radar", {}))
    except (TypeError, ValueError) as exc:
        errors.append(f"radar: {exc}")
        radar = RadarConfig.default()

    segments = []
    for i, seg in enumerate(data.get("trajectory", {}).get("segments", [])):
        where = f"trajectory.segments[{i}]"
        speed = _get(seg, "speed", where, errors)
        heading = math.radians(_get(seg, "heading_deg", where, errors, default=0.0))
        duration = _get(seg, "duration", where, errors, default=1e9)
        if speed is not None:
            segments.append(Segment(speed, heading, duration))
    trajectory = None
    if not segments and "sweep" not in data:
        errors.append("trajectory.segments: at least one segment is required")
    else:
        try:
            trajectory = EgoTrajectory(tuple(segments) or (Segment(0.0, 0.0, 1e9),))
        except ValueError as exc:
            errors.append(f"trajectory: {exc}")

    reflectors = [_reflector(e, i, errors) for i, e in enumerate(data.get("reflectors", []))]

    preset = str(data.get("noise_preset", "custom" if "noise" in data else "none"))
    if preset != "custom" and preset not in NOISE_PRESETS:
        errors.append(f"noise_preset: unknown preset {preset!r} (choose from {sorted(NOISE_PRESETS)})")
    noise = NOISE_PRESETS.get(preset, NoiseSpec())
    if "noise" in data:
        n = data["noise"]
        noise = NoiseSpec(
            iq_std=_get(n, "iq_std", "noise", errors, default=noise.iq_std),
            phase_jitter_std=_get(n, "phase_jitter_std", "noise", errors, default=noise.phase_jitter_std),
            phase_jitter_per_speed=_get(n, "phase_jitter_per_speed", "noise", errors,
                                        default=noise.phase_jitter_per_speed),
            jitter_speed_cap=_get(n, "jitter_speed_cap", "noise", errors, default=noise.jitter_speed_cap),
        )

    q = data.get("quantization", {})
    base_q = QuantSpec()
    quant = QuantSpec(
        angle_noise_std=math.radians(_get(q, "angle_noise_deg", "quantization", errors,
                                          default=math.degrees(base_q.angle_noise_std))),
        fov=math.radians(_get(q, "fov_deg", "quantization", errors, default=math.degrees(base_q.fov))),
        clutter_points=_get(q, "clutter_points", "quantization", errors, int, default=0),
        quantize=bool(q.get("quantize", True)),
    )

    p = data.get("pipeline", {})
    pipeline_keys = set(PipelineParams.__dataclass_fields__)
    for key in set(p) - pipeline_keys:
        errors.append(f"pipeline.{key}: unknown key")
    pipeline = PipelineParams(**{k: v for k, v in p.items() if k in pipeline_keys})

    if errors:
        raise ScenarioError(errors)
    base = Scenario(
        name=name,
        radar=radar,
        reflectors=tuple(reflectors),
        trajectory=trajectory,
        frames=frames,
        seed=seed,
        noise=noise,
        quantization=quant,
        pipeline=pipeline,
        noise_preset=preset,
        description=str(data.get("description", "")),
    )
    if "sweep" in data:
        speeds = data["sweep"].get("speeds", [])
        heading = math.radians(float(data["sweep"].get("heading_deg", 0.0)))
        if not speeds:
            raise ScenarioError(["sweep.speeds: at least one speed is required"])
        scenarios = [base.with_speed(float(s), heading) for s in speeds]
    else:
        scenarios = [base]
    for sc in scenarios:
        sc.validate()
    return scenarios


def load_scenario(path: str | Path) -> list[Scenario]:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ScenarioError([f"{path}: {exc}"]) from exc
    return scenario_from_mapping(data)


def builtin_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package (``name`` without ``.toml``)."""
    path = resources.files("radartrack.scenarios") / f"{name}.toml"
    if not path.is_file():
        raise FileNotFoundError(f"no built-in scenario {name!r}")
    return Path(str(path))


def builtin_scenarios() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("radartrack.scenarios").iterdir() if p.name.endswith(".toml"))
