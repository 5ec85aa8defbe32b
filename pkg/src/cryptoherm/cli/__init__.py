"""Config-driven experiment runner."""

from .config import ExperimentConfig, load_config, parse_config
from .emit import ResultRecord, emit_results
from .main import main
from .runner import run_experiment

__all__ = ["ExperimentConfig", "ResultRecord", "emit_results", "load_config", "main", "parse_config", "run_experiment"]
