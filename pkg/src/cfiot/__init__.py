"""Cell-free massive MIMO IoT simulator: LMMSE estimation with nonorthogonal pilots,
closed-form SINRs, power control and a Monte Carlo oracle."""

from ._validation import CfiotError, DimensionError
from .chest import LmmseBank, LmmseEstimator, build_lmmse_bank, build_matched_bank
from .experiment import CdfTable, ConfigError, ExperimentConfig, emit_csv, run_experiment
from .instance import CellFreeInstance, make_instance
from .netgen import PropagationParams, build_large_scale, place_network, power_budget
from .pilots import PilotBook, orthonormal_pilot_book, random_pilot_book
from .power import (DownlinkMaxMin, SmallCellMaxMin, TargetSinrControl, UplinkMaxMin,
                    downlink_maxmin, uplink_maxmin)

__version__ = "0.1.0"

__all__ = [
    "CdfTable", "CellFreeInstance", "CfiotError", "ConfigError", "DimensionError",
    "DownlinkMaxMin", "ExperimentConfig", "LmmseBank", "LmmseEstimator", "PilotBook",
    "PropagationParams", "SmallCellMaxMin", "TargetSinrControl", "UplinkMaxMin",
    "build_large_scale", "build_lmmse_bank", "build_matched_bank", "downlink_maxmin",
    "emit_csv", "make_instance", "orthonormal_pilot_book", "place_network", "power_budget",
    "random_pilot_book", "run_experiment", "uplink_maxmin",
]
