"""Radar parameterization and closed-form resolution formulas."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Literal, Mapping


# Rounded propagation speed, the value radar datasheets and resolution tables
# are quoted against (4 GHz of sweep gives exactly 3.75 cm).
C_LIGHT = 3.0e8  # m/s

PER_CHIRP_PAIR = "per-chirp-pair"
UNWRAPPED = "unwrapped"

SpeedMode = Literal["per-chirp-pair", "unwrapped"]


@dataclass(frozen=True)
class RadarConfig:
    """FMCW chirp and frame timing.

    All quantities in SI units. The wavelength is derived from the carrier
    (start) frequency of the chirp and is never stored.
    """

    carrier_frequency: float  # Hz, chirp start frequency
    bandwidth: float  # Hz
    chirp_duration: float  # s, Tc
    chirps_per_frame: int  # Nc
    samples_per_chirp: int  # Ns
    frame_rate: float  # frames/s
    frame_duration: float  # s, Tf
    adc_sample_rate: float  # Hz

    def __post_init__(self) -> None:
        if int(self.chirps_per_frame) != self.chirps_per_frame or self.chirps_per_frame < 2:
            raise ValueError(f"chirps_per_frame must be an integer >= 2, got {self.chirps_per_frame}")
        if int(self.samples_per_chirp) != self.samples_per_chirp or self.samples_per_chirp < 2:
            raise ValueError(f"samples_per_chirp must be an integer >= 2, got {self.samples_per_chirp}")
        for name in (
            "carrier_frequency",
            "bandwidth",
            "chirp_duration",
            "frame_rate",
            "frame_duration",
            "adc_sample_rate",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value}")
        object.__setattr__(self, "chirps_per_frame", int(self.chirps_per_frame))
        object.__setattr__(self, "samples_per_chirp", int(self.samples_per_chirp))
        # small slack so configs solved from printed resolutions are not rejected by rounding
        if self.chirps_per_frame * self.chirp_duration > self.frame_duration * (1 + 1e-12):
            raise ValueError(
                f"chirps do not fit in one frame: Nc*Tc = "
                f"{self.chirps_per_frame * self.chirp_duration:.6g} s > Tf = {self.frame_duration:.6g} s"
            )

    @property
    def wavelength(self) -> float:
        return C_LIGHT / self.carrier_frequency

    @property
    def slope(self) -> float:
        """Chirp slope S in Hz/s."""
        return self.bandwidth / self.chirp_duration

    @property
    def frame_period(self) -> float:
        return 1.0 / self.frame_rate

    @property
    def range_bin_spacing(self) -> float:
        """Range spanned by one range-FFT bin.

        Equals ``range_resolution`` when the ADC samples the whole ramp
        (``adc_sample_rate == samples_per_chirp / chirp_duration``).
        """
        return C_LIGHT * self.adc_sample_rate / (2.0 * self.slope * self.samples_per_chirp)

    @property
    def max_range(self) -> float:
        return self.range_bin_spacing * self.samples_per_chirp

    @property
    def phase_reference_frequency(self) -> float:
        """Frequency whose wavelength governs the phase read from a windowed range-FFT bin.

        A symmetric window references the bin phase to the middle of the
        sampled ramp, so the phase advances with range at the mid-ramp
        frequency rather than at the start frequency.
        """
        ns = self.samples_per_chirp
        ramp_seconds = (ns - 1) / self.adc_sample_rate
        return self.carrier_frequency + 0.5 * self.slope * ramp_seconds

    @classmethod
    def from_resolutions(
        cls,
        *,
        carrier_frequency: float,
        range_res: float,
        speed_res: float,
        chirps_per_frame: int,
        samples_per_chirp: int,
        frame_rate: float,
        frame_duration: float,
    ) -> "RadarConfig":
        """Solve bandwidth and chirp duration from target resolutions.

        The ADC rate is chosen so the samples span the whole ramp.
        """
        bandwidth = C_LIGHT / (2.0 * range_res)
        wavelength = C_LIGHT / carrier_frequency
        chirp_duration = wavelength / (2.0 * chirps_per_frame * speed_res)
        return cls(
            carrier_frequency=carrier_frequency,
            bandwidth=bandwidth,
            chirp_duration=chirp_duration,
            chirps_per_frame=chirps_per_frame,
            samples_per_chirp=samples_per_chirp,
            frame_rate=frame_rate,
            frame_duration=frame_duration,
            adc_sample_rate=samples_per_chirp / chirp_duration,
        )

    @classmethod
    def default(cls) -> "RadarConfig":
        """IWR1843 setup: 77 GHz, 0.0429 m / 0.0496 m/s, 182 x 256, 10 fps, 150 ms frames."""
        return cls.from_resolutions(
            carrier_frequency=77e9,
            range_res=0.0429,
            speed_res=0.0496,
            chirps_per_frame=182,
            samples_per_chirp=256,
            frame_rate=10.0,
            frame_duration=0.150,
        )

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "RadarConfig":
        """Build a config from a flat key/value mapping.

        Either the full field set is given, or ``range_resolution`` and
        ``speed_resolution`` replace ``bandwidth``/``chirp_duration``/``adc_sample_rate``.
        Missing keys fall back to the defaults.
        """
        known = {f.name for f in fields(cls)} | {"range_resolution", "speed_resolution"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown radar keys: {sorted(unknown)}")
        base = asdict(cls.default())
        if "range_resolution" in data or "speed_resolution" in data:
            for key in ("bandwidth", "chirp_duration", "adc_sample_rate"):
                if key in data:
                    raise ValueError(f"radar.{key} conflicts with resolution-based configuration")
            solved = cls.from_resolutions(
                carrier_frequency=float(data.get("carrier_frequency", base["carrier_frequency"])),
                range_res=float(data.get("range_resolution", 0.0429)),
                speed_res=float(data.get("speed_resolution", 0.0496)),
                chirps_per_frame=int(data.get("chirps_per_frame", base["chirps_per_frame"])),
                samples_per_chirp=int(data.get("samples_per_chirp", base["samples_per_chirp"])),
                frame_rate=float(data.get("frame_rate", base["frame_rate"])),
                frame_duration=float(data.get("frame_duration", base["frame_duration"])),
            )
            return solved
        merged = {**base, **{k: data[k] for k in data}}
        return cls(**merged)

    def to_mapping(self) -> dict[str, Any]:
        return asdict(self)


def range_resolution(cfg: RadarConfig) -> float:
    """c / (2B), in meters."""
    return C_LIGHT / (2.0 * cfg.bandwidth)


def speed_resolution(cfg: RadarConfig) -> float:
    """Doppler bin width lambda / (2 Nc Tc), in m/s."""
    return cfg.wavelength / (2.0 * cfg.chirps_per_frame * cfg.chirp_duration)


def max_unambiguous_speed(cfg: RadarConfig, mode: SpeedMode = PER_CHIRP_PAIR) -> float:
    """Largest radial speed measurable without phase ambiguity.

    ``per-chirp-pair`` requires the chirp-to-chirp phase step to stay below
    pi (lambda / 4Tc). ``unwrapped`` allows a step below 2*pi once the phase
    track is unwrapped (lambda / 2Tc).
    """
    if mode == PER_CHIRP_PAIR:
        return cfg.wavelength / (4.0 * cfg.chirp_duration)
    if mode == UNWRAPPED:
        return cfg.wavelength / (2.0 * cfg.chirp_duration)
    raise ValueError(f"unknown mode {mode!r}")
