"""Config-driven Monte Carlo studies, reports and the command-line interface."""
from .cli import cli_main
from .config import STUDY_KINDS, Cell, StudyConfig, default_config_path, load_config, loads_config
from .report import ExperimentReport, LogLogFit, fit_linear, fit_loglog, read_trials_csv, sign_test_pvalue, summarize
from .studies import (RUNNERS, calibration_constant, recompute_aggregates, run_noise_event_study, run_psd_study,
                      run_rate_study, run_re_transfer_study, run_sparse_eig_study, run_study,
                      run_theorem_main_check, run_trace_study)

__all__ = [
    "Cell", "ExperimentReport", "LogLogFit", "RUNNERS", "STUDY_KINDS", "StudyConfig", "calibration_constant",
    "cli_main", "default_config_path", "fit_linear", "fit_loglog", "load_config", "loads_config", "read_trials_csv",
    "recompute_aggregates", "run_noise_event_study", "run_psd_study", "run_rate_study",
    "run_re_transfer_study", "run_sparse_eig_study", "run_study", "run_theorem_main_check",
    "run_trace_study", "sign_test_pvalue", "summarize",
]
