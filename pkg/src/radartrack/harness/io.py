"""CSV readers and writers for truth, point clouds, estimates and diagnostic dumps.

Every float is written with a fixed format so that identical runs give
byte-identical files.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from radartrack.harness.pipeline import FrameEstimate, FrameOutput
from radartrack.scene_sim import GroundTruth, PointCloud

TRUTH_COLUMNS = ["frame", "reflector", "v_b", "alpha", "range", "azimuth", "radial_speed", "label", "visible"]
POINTCLOUD_COLUMNS = ["frame", "r", "theta", "phi", "v_r", "source"]
ESTIMATE_COLUMNS = ["frame", "method", "v_b_hat", "alpha_hat", "confidence", "latency_ms", "status"]
SEGMENTATION_COLUMNS = ["frame", "r", "theta", "v_r", "v_hat", "label"]
PHASE_COLUMNS = ["frame", "range_bin", "chirp", "time_s", "phase_rad", "dphi_dt"]
ROOT_COLUMNS = ["frame", "bin_center", "count"]
SNR_COLUMNS = ["frame", "bin", "snr_db"]


def fmt(x: float) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    return f"{float(x):.9g}"


def _write(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)


def _read(path: Path, columns: Sequence[str]) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(columns) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        return list(reader)


def write_truth(path: Path, truths: Iterable[GroundTruth]) -> None:
    rows = []
    for t in truths:
        for i in range(t.ranges.size):
            rows.append([
                t.frame_index, i, fmt(t.ego_speed), fmt(t.heading), fmt(t.ranges[i]), fmt(t.azimuths[i]),
                fmt(t.radial_speeds[i]), "static" if t.static[i] else "dynamic", int(t.visible[i]),
            ])
    _write(path, TRUTH_COLUMNS, rows)


def read_truth_speeds(path: Path) -> dict[int, tuple[float, float]]:
    """Per-frame (ego speed, heading) from a truth CSV."""
    out = {}
    for row in _read(path, TRUTH_COLUMNS):
        out[int(row["frame"])] = (float(row["v_b"]), float(row["alpha"]))
    return out


def write_pointclouds(path: Path, clouds: Iterable[PointCloud]) -> None:
    rows = []
    for pc in clouds:
        for i in range(len(pc)):
            rows.append([pc.frame_index, fmt(pc.r[i]), fmt(pc.theta[i]), fmt(pc.phi[i]), fmt(pc.v_r[i]),
                         int(pc.source[i])])
    _write(path, POINTCLOUD_COLUMNS, rows)


def read_pointclouds(path: Path) -> dict[int, PointCloud]:
    cols = defaultdict(lambda: defaultdict(list))
    for row in _read(path, POINTCLOUD_COLUMNS):
        f = int(row["frame"])
        for key in ("r", "theta", "phi", "v_r"):
            cols[f][key].append(float(row[key]))
        cols[f]["source"].append(int(row["source"]))
    return {
        f: PointCloud(c["r"], c["theta"], c["v_r"], np.array(c["phi"]), np.array(c["source"], dtype=int), f)
        for f, c in cols.items()
    }


def write_estimates(path: Path, estimates: Iterable[FrameEstimate], record_latency: bool = False) -> None:
    rows = [
        [e.frame, e.method, fmt(e.v_b_hat), fmt(e.alpha_hat), fmt(e.confidence),
         fmt(e.latency_ms) if record_latency else "", e.status]
        for e in estimates
    ]
    _write(path, ESTIMATE_COLUMNS, rows)


def read_estimates(path: Path) -> list[FrameEstimate]:
    out = []
    for row in _read(path, ESTIMATE_COLUMNS):
        latency = float(row["latency_ms"]) if row["latency_ms"] else float("nan")
        out.append(FrameEstimate(int(row["frame"]), row["method"], float(row["v_b_hat"]),
                                 float(row["alpha_hat"]), float(row["confidence"]), row["status"], latency))
    return out


def write_segmentation(path: Path, outputs: Iterable[FrameOutput]) -> None:
    rows = []
    for out in outputs:
        seg = out.segmentation
        if seg is None:
            continue
        # put the static and dynamic subsets back in input order
        mask = seg.static_mask
        cols = np.empty((3, mask.size))
        for sub, sel in ((seg.static_points, mask), (seg.dynamic_points, ~mask)):
            cols[:, sel] = sub.r, sub.theta, sub.v_r
        for i in range(mask.size):
            rows.append([out.phase.frame, fmt(cols[0, i]), fmt(cols[1, i]), fmt(cols[2, i]), fmt(seg.v_hat[i]),
                         "static" if mask[i] else "dynamic"])
    _write(path, SEGMENTATION_COLUMNS, rows)


def write_phase_tracks(path: Path, outputs: Iterable[FrameOutput]) -> None:
    rows = []
    for out in outputs:
        for tr in out.tracks:
            for i in range(tr.phase.size):
                rows.append([out.phase.frame, tr.range_bin, i, fmt(tr.times[i]), fmt(tr.phase[i]),
                             fmt(tr.derivative[i])])
    _write(path, PHASE_COLUMNS, rows)


def write_root_histograms(path: Path, outputs: Iterable[FrameOutput]) -> None:
    rows = []
    for out in outputs:
        if out.histogram is None:
            continue
        for centre, count in out.histogram.rows():
            rows.append([out.phase.frame, fmt(centre), count])
    _write(path, ROOT_COLUMNS, rows)


def write_snr(path: Path, outputs: Iterable[FrameOutput]) -> None:
    rows = []
    for out in outputs:
        if out.snr_db is None:
            continue
        for b, value in enumerate(out.snr_db):
            rows.append([out.phase.frame, b, fmt(value)])
    _write(path, SNR_COLUMNS, rows)
