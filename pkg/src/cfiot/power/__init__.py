"""Power-control solvers."""

from .bisection import (BisectionResult, BisectionSpec, BracketError, Feasibility,
                        IterationLimitError, NumericalSolverError, SolverError, bisect)
from .downlink import (ConeProblem, DownlinkMaxMin, DownlinkResult, build_cone_problem,
                       downlink_feasible, downlink_maxmin)
from .smallcell import SmallCellMaxMin, smallcell_maxmin, smallcell_model
from .uplink import (DropResult, MaxMinResult, TargetResult, TargetSinrControl, TargetSpec,
                     UplinkMaxMin, drop_and_retarget, linear_drop_and_retarget, linear_feasible,
                     linear_maxmin, linear_target_iterate, submodel, target_sinr_iterate,
                     uplink_feasible, uplink_maxmin, uplink_model)

__all__ = [
    "BisectionResult", "BisectionSpec", "BracketError", "ConeProblem", "DownlinkMaxMin",
    "DownlinkResult", "DropResult", "Feasibility", "IterationLimitError", "MaxMinResult",
    "NumericalSolverError", "SmallCellMaxMin", "SolverError", "TargetResult",
    "TargetSinrControl", "TargetSpec", "UplinkMaxMin", "bisect", "build_cone_problem",
    "downlink_feasible", "downlink_maxmin", "drop_and_retarget", "linear_drop_and_retarget",
    "linear_feasible", "linear_maxmin", "linear_target_iterate", "smallcell_maxmin",
    "smallcell_model", "submodel", "target_sinr_iterate", "uplink_feasible", "uplink_maxmin",
    "uplink_model",
]
