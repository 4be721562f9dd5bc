"""Mean-absolute-error reports by method and speed regime."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from radartrack.scene_sim import GroundTruth

# [lo, hi) in m/s
REGIMES = {
    "low": (0.0, 0.25),
    "mid": (0.25, 0.61),
    "high": (0.61, 1.05),
}
METHODS = ("phase", "doppler")


def regime_of(speed: float) -> str | None:
    for name, (lo, hi) in REGIMES.items():
        if lo <= speed < hi:
            return name
    return None


@dataclass
class FrameRecord:
    frame: int
    method: str
    truth: float
    estimate: float
    status: str
    latency_ms: float

    @property
    def abs_error(self) -> float:
        return abs(self.estimate - self.truth)


@dataclass
class EvalReport:
    name: str
    records: list[FrameRecord]
    noise_preset: str = "custom"
    outputs: list = field(default_factory=list, repr=False)

    @classmethod
    def from_estimates(cls, name: str, estimates: Iterable, truths: Sequence[GroundTruth],
                       noise_preset: str = "custom") -> "EvalReport":
        speed = {t.frame_index: t.ego_speed for t in truths}
        records = [
            FrameRecord(e.frame, e.method, speed[e.frame], e.v_b_hat, e.status, e.latency_ms)
            for e in estimates
            if e.frame in speed
        ]
        return cls(name, records, noise_preset)

    def methods(self) -> list[str]:
        return [m for m in METHODS if any(r.method == m for r in self.records)] + sorted(
            {r.method for r in self.records} - set(METHODS)
        )

    def errors(self, method: str, regime: str | None = None) -> np.ndarray:
        return np.array([
            r.abs_error for r in self.records
            if r.method == method and (regime is None or regime_of(r.truth) == regime)
        ])

    def mae(self, method: str, regime: str | None = None) -> float:
        err = self.errors(method, regime)
        return float(err.mean()) if err.size else float("nan")

    def regimes_present(self) -> list[str]:
        present = {regime_of(r.truth) for r in self.records}
        return [name for name in REGIMES if name in present]

    def latencies(self, method: str = "phase") -> np.ndarray:
        return np.array([r.latency_ms for r in self.records if r.method == method])

    def error_series(self, method: str) -> np.ndarray:
        rows = sorted((r.frame, r.abs_error) for r in self.records if r.method == method)
        return np.array([e for _, e in rows])

    def to_dict(self) -> dict:
        out = {"name": self.name, "noise_preset": self.noise_preset, "mae": {}}
        for m in self.methods():
            out["mae"][m] = {"overall": self.mae(m), **{g: self.mae(m, g) for g in self.regimes_present()}}
        lat = self.latencies()
        lat = lat[np.isfinite(lat)]
        out["median_latency_ms"] = float(np.median(lat)) if lat.size else None
        out["frames"] = len({r.frame for r in self.records})
        return out


@dataclass
class SummaryRow:
    method: str
    regime: str
    n_frames: int
    mae: float
    median_ae: float


@dataclass
class Summary:
    rows: list[SummaryRow]
    noise_presets: list[str]

    def get(self, method: str, regime: str = "overall") -> SummaryRow:
        for row in self.rows:
            if row.method == method and row.regime == regime:
                return row
        raise KeyError((method, regime))

    def regimes(self) -> list[str]:
        seen = []
        for row in self.rows:
            if row.regime not in seen:
                seen.append(row.regime)
        return seen

    def to_dict(self) -> dict:
        return {
            "noise_presets": self.noise_presets,
            "rows": [row.__dict__ for row in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True)

    def render(self) -> str:
        lines = [f"{'method':<8} {'regime':<8} {'frames':>6} {'MAE m/s':>9} {'median':>9}"]
        for row in self.rows:
            lines.append(
                f"{row.method:<8} {row.regime:<8} {row.n_frames:>6d} {row.mae:>9.4f} {row.median_ae:>9.4f}"
            )
        return "\n".join(lines)


def summarize(reports: Sequence[EvalReport]) -> Summary:
    """Pool the frames of all reports into one per-method, per-regime table."""
    if not reports:
        raise ValueError("summarize needs at least one report")
    records = [r for rep in reports for r in rep.records]
    pooled = EvalReport("summary", records)
    rows = []
    for method in pooled.methods():
        for regime in ["overall"] + pooled.regimes_present():
            err = pooled.errors(method, None if regime == "overall" else regime)
            rows.append(SummaryRow(method, regime, int(err.size), float(err.mean()), float(np.median(err))))
    presets = sorted({rep.noise_preset for rep in reports})
    return Summary(rows, presets)
