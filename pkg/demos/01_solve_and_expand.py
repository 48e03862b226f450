"""Solve a discounted stochastic game and expand its optimal strategies.

Walks the classic absorbing game ("big match") down a discount ladder,
compares the solver output with the known closed form, then fits the
leading fractional-power term of each action probability and assembles
the exit-rate decomposition at the live state.
"""

import numpy as np

import stochgames as sg
from stochgames import library


def main():
    game = library.big_match()
    print("=" * 64)
    print("game:", game.name)
    print("states:", game.state_names, " actions:", game.action_names_p1, "x", game.action_names_p2)

    print("\n-- discounted values (closed form: v = (1/2, 1, 0) for every discount)")
    for lam in (0.5, 1e-1, 1e-2, 1e-3, 1e-4):
        sol = sg.solve_discounted(game, lam)
        top = sol.profile.x[0, 0]
        print(f"  lam={lam:<8g} v={np.round(sol.values, 10)}  "
              f"x(top)={top:.3e}  lam/(1+lam)={lam / (1 + lam):.3e}  residual={sol.residual:.1e}")

    print("\n-- vanishing-discount value estimate")
    est = sg.estimate_limit_value(game, (1e-2, 1e-3, 1e-4, 1e-5))
    print(f"  v = {np.round(est.values, 10)}  (extrapolation error {est.extrapolation_error:.2e})")

    print("\n-- leading expansion terms fitted from a 6-rung ladder")
    ladder = sg.profile_ladder(game, (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6))
    exp = sg.fit_expansion(ladder)
    for k, sname in enumerate(game.state_names):
        terms = ", ".join(
            f"{a}: {exp.coeff_p1[k, i]:.4g} * lam^{exp.expo_p1[k][i]}"
            for i, a in enumerate(game.action_names_p1)
        )
        print(f"  P1 @ {sname}: {terms}")
    print(f"  P2 @ live: {exp.coeff_p2[0]} at exponents {exp.expo_p2[0]}")
    print(f"  fit residual (held-out rung): {exp.fit_residual:.2e}")

    print("\n-- action classes and exit decomposition at the live state")
    cls = sg.classify_actions(exp)
    print("  P1 classes:", cls.p1[0])
    rates = sg.exit_rates(game, exp)
    print(f"  exit rates -> {dict(zip(game.state_names, np.round(rates.exit, 4)))}")
    print(f"  split: a10={rates.a10.sum():.4f}  a*={rates.astar.sum():.4f}  a01={rates.a01.sum():.4f}")
    print(f"  flow payoff g0 = {rates.g0:.4f}, total rate |A_kk| = {rates.total:.4f}")
    resid = rates.value_identity_residual(est.values)
    print(f"  value identity |v - (g0 + A.v)/(1+|A_kk|)| = {resid:.2e}")
    lower, upper = rates.deviation_limits(est.values)
    print(f"  one-sided deviation limits bracket the value: {lower:.4f} <= 0.5 <= {upper:.4f}")


if __name__ == "__main__":
    main()
