from .config import ExperimentConfig, apply_overrides
from .pipeline import CSV_FIELDS, run_single, run_sweep, simulate_cell

__all__ = ["CSV_FIELDS", "ExperimentConfig", "apply_overrides", "run_single", "run_sweep", "simulate_cell"]
