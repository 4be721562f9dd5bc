"""Command-line front end: simulate, estimate, eval and run.

Exit codes: 0 on success, 1 when the input fails validation (bad scenario,
bad flags, malformed files), 2 when processing fails at runtime.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from radartrack.harness import io
from radartrack.harness.pipeline import Estimator, simulate_scenario
from radartrack.harness.report import EvalReport, summarize
from radartrack.harness.scenario import (
    PipelineParams,
    Scenario,
    ScenarioError,
    builtin_scenario_path,
    builtin_scenarios,
    load_scenario,
)
from radartrack.radar_model import RadarConfig
from radartrack.scene_sim import GroundTruth, PointCloud, read_iq, write_iq

log = logging.getLogger("radartrack")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class InputError(Exception):
    """Raised for anything the user can fix by changing the inputs."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors count as validation failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_.@" else "_" for c in name)


def _resolve_scenarios(spec: str, seed: int | None) -> list[Scenario]:
    path = Path(spec)
    if not path.exists():
        if spec in builtin_scenarios():
            path = builtin_scenario_path(spec)
        else:
            raise InputError(f"scenario {spec!r} is neither a file nor a built-in ({', '.join(builtin_scenarios())})")
    scenarios = load_scenario(path)
    if seed is not None:
        scenarios = [replace(s, seed=seed) for s in scenarios]
    return scenarios


def _config_doc(s: Scenario) -> dict:
    return {
        "name": s.name,
        "seed": s.seed,
        "frames": s.frames,
        "noise_preset": s.noise_preset,
        "noise": {k: (None if v == np.inf else v) for k, v in asdict(s.noise).items()},
        "radar": s.radar.to_mapping(),
        "pipeline": asdict(s.pipeline),
    }


def simulate_to_dir(scenario: Scenario, run_dir: Path, jobs: int = 1) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    cubes, truths, clouds = [], [], []
    for cube, truth, points in simulate_scenario(scenario, jobs):
        cubes.append(cube)
        truths.append(truth)
        clouds.append(points)
    write_iq(run_dir / "iq.bin", cubes, scenario.radar)
    io.write_truth(run_dir / "truth.csv", truths)
    io.write_pointclouds(run_dir / "pointcloud.csv", clouds)
    with open(run_dir / "config.json", "w") as fh:
        json.dump(_config_doc(scenario), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_config(run_dir: Path) -> tuple[RadarConfig, PipelineParams, dict]:
    try:
        with open(run_dir / "config.json") as fh:
            doc = json.load(fh)
        cfg = RadarConfig.from_mapping(doc["radar"])
        params = PipelineParams(**doc.get("pipeline", {}))
    except FileNotFoundError as exc:
        raise InputError(f"{run_dir}: no config.json (run 'simulate' first)") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{run_dir / 'config.json'}: {exc}") from exc
    return cfg, params, doc


def estimate_dir(run_dir: Path, method: str = "both", dump_phase=False, dump_roots=False,
                 dump_segmentation=False, dump_snr=False, record_latency=False) -> None:
    cfg, params, _ = _load_config(run_dir)
    try:
        cubes = read_iq(run_dir / "iq.bin")
        clouds = io.read_pointclouds(run_dir / "pointcloud.csv")
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from exc
    except ValueError as exc:
        raise InputError(f"{run_dir}: {exc}") from exc
    if cubes and cubes[0].samples.shape != (cfg.chirps_per_frame, cfg.samples_per_chirp):
        raise InputError(f"{run_dir}: I/Q cube shape {cubes[0].samples.shape} does not match the radar config")

    estimator = Estimator(cfg, params)
    outputs, estimates = [], []
    empty = PointCloud(np.empty(0), np.empty(0), np.empty(0))
    for cube in cubes:
        points = clouds.get(cube.frame_index, replace(empty, frame_index=cube.frame_index))
        out = estimator.process(cube, points)
        outputs.append(out)
        estimates.extend(e for e in (out.phase, out.doppler) if method in ("both", e.method))
    io.write_estimates(run_dir / "estimates.csv", estimates, record_latency)
    if dump_phase:
        io.write_phase_tracks(run_dir / "phase_tracks.csv", outputs)
    if dump_roots:
        io.write_root_histograms(run_dir / "roots.csv", outputs)
    if dump_segmentation:
        io.write_segmentation(run_dir / "segmentation.csv", outputs)
    if dump_snr:
        io.write_snr(run_dir / "snr.csv", outputs)


def eval_dir(run_dir: Path) -> EvalReport:
    _, _, doc = _load_config(run_dir)
    try:
        speeds = io.read_truth_speeds(run_dir / "truth.csv")
        estimates = io.read_estimates(run_dir / "estimates.csv")
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from exc
    except (KeyError, ValueError) as exc:
        raise InputError(f"{run_dir}: {exc}") from exc
    truths = [
        GroundTruth(f, v, a, *(np.empty(0) for _ in range(3)), np.empty(0, bool), np.empty(0, bool), np.empty((0, 0)))
        for f, (v, a) in sorted(speeds.items())
    ]
    report = EvalReport.from_estimates(doc.get("name", run_dir.name), estimates, truths,
                                       doc.get("noise_preset", "custom"))
    body = report.to_dict()
    body["noise"] = doc.get("noise")
    with open(run_dir / "report.json", "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def _write_summary(out_dir: Path, reports: list[EvalReport]) -> str:
    summary = summarize(reports)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(summary.to_json() + "\n")
    text = summary.render()
    (out_dir / "summary.txt").write_text(text + "\n")
    return text


def _add_estimate_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=["phase", "doppler", "both"], default="both")
    p.add_argument("--dump-phase", action="store_true", help="write phase_tracks.csv")
    p.add_argument("--dump-roots", action="store_true", help="write roots.csv (root histogram per frame)")
    p.add_argument("--dump-segmentation", action="store_true", help="write segmentation.csv")
    p.add_argument("--dump-snr", action="store_true", help="write snr.csv (per-bin SNR per frame)")
    p.add_argument("--record-latency", action="store_true",
                   help="fill the latency_ms column (makes the CSV run-dependent)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="radartrack", description="Phase-based ego-speed estimation on simulated FMCW radar data.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="scenario -> I/Q binary, truth and point-cloud CSVs")
    p.add_argument("scenario", help="scenario TOML file or built-in name")
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for synthesis")

    p = sub.add_parser("estimate", help="I/Q + point cloud -> estimates.csv")
    p.add_argument("run_dirs", type=Path, nargs="+")
    _add_estimate_flags(p)

    p = sub.add_parser("eval", help="estimates + truth -> report.json and a summary table")
    p.add_argument("run_dirs", type=Path, nargs="+")
    p.add_argument("--out-dir", type=Path, help="where to write summary.json/summary.txt")

    p = sub.add_parser("run", help="simulate, estimate and eval in one go")
    p.add_argument("scenario")
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    _add_estimate_flags(p)

    sub.add_parser("list", help="list built-in scenarios")
    return parser


def _simulate_all(args) -> list[Path]:
    scenarios = _resolve_scenarios(args.scenario, args.seed)
    if args.jobs < 1:
        raise InputError("--jobs must be >= 1")
    dirs = []
    for s in scenarios:
        run_dir = args.out_dir / _slug(s.name)
        log.info("simulating %s (%d frames) -> %s", s.name, s.frames, run_dir)
        simulate_to_dir(s, run_dir, args.jobs)
        dirs.append(run_dir)
    return dirs


def _estimate_all(args, dirs) -> None:
    for d in dirs:
        log.info("estimating %s", d)
        estimate_dir(d, args.method, args.dump_phase, args.dump_roots, args.dump_segmentation, args.dump_snr,
                     args.record_latency)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "list":
            print("\n".join(builtin_scenarios()))
        elif args.command == "simulate":
            _simulate_all(args)
        elif args.command == "estimate":
            _estimate_all(args, args.run_dirs)
        elif args.command == "eval":
            reports = [eval_dir(d) for d in args.run_dirs]
            out = args.out_dir or (args.run_dirs[0] if len(args.run_dirs) == 1 else Path("."))
            print(_write_summary(out, reports))
        elif args.command == "run":
            dirs = _simulate_all(args)
            _estimate_all(args, dirs)
            print(_write_summary(args.out_dir, [eval_dir(d) for d in dirs]))
    except (ScenarioError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # anything else is a runtime failure
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
