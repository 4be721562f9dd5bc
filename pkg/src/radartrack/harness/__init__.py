"""Scenario runner, evaluation and command-line front end."""

from radartrack.harness.pipeline import PipelineParams, run_scenario
from radartrack.harness.report import EvalReport, summarize
from radartrack.harness.scenario import Scenario, ScenarioError, load_scenario

__all__ = [
    "EvalReport",
    "PipelineParams",
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "run_scenario",
    "summarize",
]
