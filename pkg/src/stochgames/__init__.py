"""Finite zero-sum stochastic games: values, strategy expansions, limit laws."""

from .errors import (
    DegenerateWindow,
    DimensionMismatch,
    ExhaustedEvaluation,
    GameFormatError,
    IndexOutOfRange,
    LadderTooShort,
    MassOverflow,
    MaxIterationsExceeded,
    NegativeProbability,
    NotAbsorbing,
    NotCoveredByTheory,
    NumericalFailure,
    QuadratureNotConverged,
    RowSumNotOne,
    StochGamesError,
    TOutOfRange,
    UnstableExponent,
    WindowOutOfRange,
)
from .evaluations import Discounted, Evaluation, Explicit, Power, Uniform, family_for_norm, from_descriptor
from .game import (
    GameSpec,
    MarkovStrategyPair,
    StationaryProfile,
    induced_stage_data,
    load_game,
    save_game,
    validate_game,
)
from .matrixgame import MatrixGameSolution, matrix_game_value
from .discounted import (
    DiscountedSolution,
    LimitValueEstimate,
    estimate_limit_value,
    lp_strategy_pair,
    profile_ladder,
    shapley_operator,
    solve_discounted,
    solve_ladder,
)
from .puiseux import (
    AbsorbingExitRates,
    ActionClassification,
    PuiseuxExpansion,
    classify_actions,
    exit_rates,
    fit_expansion,
    limit_flow_payoffs,
)
from .structure import (
    GeneratorMatrix,
    HypothesisReport,
    RegularizedFamily,
    check_h1,
    check_h2,
    critical_regularization,
    criticality_check,
    is_absorbing,
)
from .trajectory import (
    SimulationBatch,
    TrajectoryCurve,
    empirical_generator,
    propagate_exact,
    read_curve_csv,
    simulate,
    stage_kernel,
    write_curve_csv,
)
from .limits import (
    DIVERGES,
    AbsorbingLimitLaw,
    CriticalLimitLaw,
    LinearityReport,
    absorbing_limit_curve,
    absorbing_limit_law,
    critical_limit_curve,
    critical_occupation,
    linearity_check,
    survival_probability,
    tecnico1_limit,
    tecnico1_partial_sum,
)
from .experiments import ExperimentConfig, GameAnalysis, analyze_game, run_verify
from . import library

__version__ = "0.1.0"
