"""Random-walk discrepancy minimization driven by universal vector colorings."""

from .engine import (CorruptionLedger, InstanceMatrix, MonitoredPair, RunResult, WalkParams,
                     finalize, run, run_trials, update_ledger)
from .errors import (DiscwalkError, GuardRefusal, InvalidInput, NonTerminated, NumericalError,
                     RefuseTooLarge, SolverStall, StrategyViolation, WitnessRejected)
from .geometry import Box, PointSet, build_canonical_boxes, decompose_box
from .harness import GeneratorSpec, experiment, generate
from .strategies import (beck_fiala_strategy, komlos_strategy, steinitz_strategy,
                         tusnady_strategy)
from .uvc import UvcProblem, solve_uvc, verify_uvc

__version__ = "0.1.0"

__all__ = [
    "Box", "CorruptionLedger", "DiscwalkError", "GeneratorSpec", "GuardRefusal", "InstanceMatrix",
    "InvalidInput", "MonitoredPair", "NonTerminated", "NumericalError", "PointSet",
    "RefuseTooLarge", "RunResult", "SolverStall", "StrategyViolation", "UvcProblem", "WalkParams",
    "WitnessRejected", "beck_fiala_strategy", "build_canonical_boxes", "decompose_box",
    "experiment", "finalize", "generate", "komlos_strategy", "run", "run_trials", "solve_uvc",
    "steinitz_strategy", "tusnady_strategy", "update_ledger", "verify_uvc",
]
