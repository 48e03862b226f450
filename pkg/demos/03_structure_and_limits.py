"""Structural checks and the continuous-time limit of the state process.

Shows the no-return hypothesis reports on games that satisfy and violate
them, the criticality verdict with its rate matrix, the T-indexed
regularization, and the agreement between exact chain statistics and the
closed-form limit objects: occupation measure, window generator, and
two-jump probabilities.
"""

import numpy as np

import stochgames as sg
from stochgames import library
from stochgames.library import critical2_canonical


def main():
    print("=" * 64)
    print("-- no-return hypotheses")
    for name in ("big_match", "two_state", "cycle3"):
        game = library.get(name)
        h1, h2 = sg.check_h1(game), sg.check_h2(game)
        w = "" if h1.holds else f"  witness: states {h1.witness[:3]} actions {h1.witness[3]}"
        print(f"  {name:<10} H1={'holds' if h1.holds else 'violated'}{w}; "
              f"H2={'holds' if h2.holds else 'violated'}")

    print("\n-- criticality of the fitted optimal kernel (big match)")
    game = library.big_match()
    exp = sg.fit_expansion(sg.profile_ladder(game, (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)))
    gen = sg.criticality_check(game, exp)
    print("  rate matrix:")
    for row in gen.A:
        print("   ", np.round(row, 4))

    print("\n-- T-indexed regularization keeps exits at order lam")
    fam = sg.critical_regularization(exp, T=100)
    prof = fam.profile_at(1e-4)
    print(f"  x(top) at lam=1e-4: {prof.x[0, 0]:.3e} (cap lam <= {fam.lambda_cap:g})")
    print(f"  induced kernel critical: {sg.criticality_check(game, fam.expansion()) is not None}")

    print("\n-- occupation measure vs the rate-matrix integral (recurrent 2-state kernel)")
    game2 = library.critical2()
    exp2, gen2 = critical2_canonical()
    theta = sg.Uniform(100_000)
    curve = sg.propagate_exact(game2, exp2.strategies(), theta, grid=np.linspace(0, 1, 5))
    for gi, t in enumerate(curve.grid):
        Pi = sg.critical_occupation(gen2, min(t, 1 - 1e-9))
        print(f"  t={t:.2f}  propagated {np.round(curve.occupation[gi], 5)}  "
              f"integral {np.round(Pi[0], 5)}")

    print("\n-- window generator estimate vs A/(1-t)")
    for t in (0.25, 0.5, 0.75):
        est = sg.empirical_generator(game2, exp2.strategies(), theta, t, 0.01)
        print(f"  t={t}: est[0] = {np.round(est[0], 3)}   A[0]/(1-t) = {np.round(gen2.A[0] / (1 - t), 3)}")

    print("\n-- jumps are rare in small windows (two or more is o(h))")
    grid = np.array([0.0, 0.5, 0.525, 0.55, 0.6, 1.0])
    batch = sg.simulate(game2, exp2.strategies(), theta, n_runs=20_000, seed=7, grid=grid)
    for lo, hi, h in ((1, 4, 0.1), (1, 3, 0.05), (1, 2, 0.025)):
        p2 = (batch.jump_counts[:, lo:hi].sum(axis=1) >= 2).mean()
        print(f"  h={h:<6} P(J>=2)={p2:.5f}   P(J>=2)/h={p2 / h:.4f}")


if __name__ == "__main__":
    main()
