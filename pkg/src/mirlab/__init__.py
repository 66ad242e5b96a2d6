"""Mixed-integer rounding cut separation with a learned row selector."""

from .bnb import MipStatus, SolverConfig, solve_mip
from .errors import (
    ConfigError,
    ContractViolation,
    EnumerationTooLarge,
    Infeasible,
    InfeasibleSolution,
    MirlabError,
    ParseError,
    SchemaMismatch,
    SingleClassDataset,
    UnsupportedFeature,
    UnsupportedVariableDomain,
)
from .features import FEATURE_NAMES, SCHEMA_VERSION, FeatureVector, compute_all_features, compute_features
from .gbt import GbtModel, GbtParams, fit_gbt
from .instances import PerturbationConfig, generate_family, knapsack2, synthetic_base
from .learning import ConstantSelector, EvalReport, FixedSelector, GbtSelector, evaluate, label_round
from .loop import LoopConfig, RoundTrace, Termination, gap_closed, run_cutting_loop
from .model import GeneralMip, MipInstance, Point, to_standard_form
from .mps import parse_mps, write_mps
from .oracle import brute_force_optimum
from .separation import MirCut, SeparationConfig, build_separation_model, recover_cut, run_separation, separate
from .simplex import LinearProblem, LpStatus, solve_lp

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConstantSelector",
    "ContractViolation",
    "EnumerationTooLarge",
    "EvalReport",
    "FEATURE_NAMES",
    "FeatureVector",
    "FixedSelector",
    "GbtModel",
    "GbtParams",
    "GbtSelector",
    "GeneralMip",
    "Infeasible",
    "InfeasibleSolution",
    "LinearProblem",
    "LoopConfig",
    "LpStatus",
    "MipInstance",
    "MipStatus",
    "MirCut",
    "MirlabError",
    "ParseError",
    "PerturbationConfig",
    "Point",
    "RoundTrace",
    "SCHEMA_VERSION",
    "SchemaMismatch",
    "SeparationConfig",
    "SingleClassDataset",
    "SolverConfig",
    "Termination",
    "UnsupportedFeature",
    "UnsupportedVariableDomain",
    "brute_force_optimum",
    "build_separation_model",
    "compute_all_features",
    "compute_features",
    "evaluate",
    "fit_gbt",
    "gap_closed",
    "generate_family",
    "knapsack2",
    "label_round",
    "parse_mps",
    "recover_cut",
    "run_cutting_loop",
    "run_separation",
    "separate",
    "solve_lp",
    "solve_mip",
    "synthetic_base",
    "to_standard_form",
    "write_mps",
]
