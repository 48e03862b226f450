"""Structural analysis and constant-payoff verification experiments.

``analyze_game`` bundles the full diagnostic pass: no-return hypotheses,
absorbing detection, a discount-ladder solve, the fitted strategy
expansion, the criticality verdict and the limit-value estimate.
``run_verify`` sweeps evaluation families down a sup-weight ladder,
propagates each exactly, and scores the curves against the straight line
t -> t v and against the applicable limit curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discounted import LimitValueEstimate, estimate_limit_value, lp_strategy_pair, profile_ladder
from .errors import NotCoveredByTheory
from .evaluations import family_for_norm
from .game import GameSpec, MarkovStrategyPair
from .limits import (
    absorbing_limit_curve,
    absorbing_limit_law,
    critical_limit_curve,
    linearity_check,
)
from .puiseux import PuiseuxExpansion, fit_expansion, limit_flow_payoffs
from .structure import GeneratorMatrix, HypothesisReport, check_h1, check_h2, criticality_check, is_absorbing
from .trajectory import TrajectoryCurve, propagate_exact

DEFAULT_FIT_LADDER = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
DEFAULT_NORM_LADDER = (1e-2, 1e-3, 1e-4)
DEFAULT_FAMILIES = ("discounted", "uniform", "power")


@dataclass(frozen=True)
class GameAnalysis:
    game: GameSpec
    h1: HypothesisReport
    h2: HypothesisReport
    live: int | None
    expansion: PuiseuxExpansion
    generator: GeneratorMatrix | None
    limit_value: LimitValueEstimate

    @property
    def covered(self) -> bool:
        return self.live is not None or self.generator is not None


def analyze_game(game: GameSpec, fit_ladder=DEFAULT_FIT_LADDER, tol=None) -> GameAnalysis:
    ladder = profile_ladder(game, fit_ladder, tol=tol)
    exp = fit_expansion(ladder)
    value_rungs = [l for l in fit_ladder if l >= 1e-6]
    return GameAnalysis(
        game=game,
        h1=check_h1(game),
        h2=check_h2(game),
        live=is_absorbing(game),
        expansion=exp,
        generator=criticality_check(game, exp),
        limit_value=estimate_limit_value(game, value_rungs, tol=tol),
    )


def limit_curve_for(analysis: GameAnalysis, grid) -> tuple[str, TrajectoryCurve]:
    """The applicable limit curve: absorbing law first, else critical kernel."""
    game, exp = analysis.game, analysis.expansion
    if analysis.live is not None:
        law = absorbing_limit_law(game, exp)
        curve = absorbing_limit_curve(law, analysis.limit_value.values, grid)
        return "absorbing", curve
    if analysis.generator is not None:
        g0 = limit_flow_payoffs(game, exp)
        curve = critical_limit_curve(analysis.generator, g0, grid, game.initial_state)
        return "critical", curve
    raise NotCoveredByTheory(
        f"{game.name}: neither absorbing nor critical under the fitted expansion"
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """A constant-payoff verification sweep.

    ``norm_ladder`` lists sup-weight targets, strictly decreasing; each
    family in ``families`` is instantiated at each target.
    """

    families: tuple = DEFAULT_FAMILIES
    norm_ladder: tuple = DEFAULT_NORM_LADDER
    grid_points: int = 101
    mode: str = "leading"
    seed: int = 0
    alpha: float = 0.5
    fit_ladder: tuple = DEFAULT_FIT_LADDER

    def __post_init__(self):
        if len(self.norm_ladder) < 1 or any(
            b >= a for a, b in zip(self.norm_ladder, self.norm_ladder[1:])
        ):
            raise ValueError("norm ladder must be nonempty and strictly decreasing")
        if self.grid_points < 2:
            raise ValueError("grid needs at least 2 points")
        if self.mode not in ("leading", "lp"):
            raise ValueError(f"mode must be 'leading' or 'lp', got {self.mode!r}")


@dataclass(frozen=True)
class VerifyRow:
    family: str
    norm_target: float
    norm_actual: float
    sup_error: float
    limit_distance: float | None
    covered: bool


@dataclass(frozen=True)
class VerifyResult:
    game: str
    value: float
    limit_kind: str | None
    rows: tuple
    curves: dict = field(default_factory=dict)
    limit_curve: TrajectoryCurve | None = None
    analysis: GameAnalysis | None = None


def strategies_for(analysis: GameAnalysis, mode: str) -> MarkovStrategyPair:
    if mode == "leading":
        return analysis.expansion.strategies()
    return lp_strategy_pair(analysis.game)


def run_verify(game: GameSpec, config: ExperimentConfig = ExperimentConfig(),
               analysis: GameAnalysis | None = None) -> VerifyResult:
    if analysis is None:
        analysis = analyze_game(game, config.fit_ladder)
    grid = np.linspace(0.0, 1.0, config.grid_points)
    v_k = float(analysis.limit_value.values[game.initial_state])

    limit_kind = None
    limit_curve = None
    try:
        limit_kind, limit_curve = limit_curve_for(analysis, grid)
    except NotCoveredByTheory:
        pass

    strategies = strategies_for(analysis, config.mode)
    rows = []
    curves = {}
    for family in config.families:
        for norm in config.norm_ladder:
            theta = family_for_norm(family, norm, alpha=config.alpha)
            curve = propagate_exact(game, strategies, theta, grid)
            report = linearity_check(curve, v_k)
            dist = curve.sup_distance(limit_curve) if limit_curve is not None else None
            rows.append(
                VerifyRow(
                    family=family,
                    norm_target=norm,
                    norm_actual=theta.norm_inf(),
                    sup_error=report.sup_error,
                    limit_distance=dist,
                    covered=limit_curve is not None,
                )
            )
            curves[(family, norm)] = curve
    return VerifyResult(
        game=game.name,
        value=v_k,
        limit_kind=limit_kind,
        rows=tuple(rows),
        curves=curves,
        limit_curve=limit_curve,
        analysis=analysis,
    )
