"""Scenario configuration, runs, reporting and the command-line interface."""
from .config import ScenarioConfig, config_from_dict, load_config
from .report import emit_report
from .scenarios import ScenarioReport, compare_techniques, run_scenario

__all__ = ["ScenarioConfig", "ScenarioReport", "compare_techniques", "config_from_dict",
           "emit_report", "load_config", "run_scenario"]
