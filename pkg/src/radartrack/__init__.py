"""Phase-based ego-speed estimation for single-chip FMCW mmWave radar."""

from radartrack.radar_model import (
    RadarConfig,
    max_unambiguous_speed,
    range_resolution,
    speed_resolution,
)

__all__ = [
    "RadarConfig",
    "max_unambiguous_speed",
    "range_resolution",
    "speed_resolution",
]

__version__ = "0.1.0"
