"""Command-line surface: solve, puiseux, check, trajectory, limit, verify.

Exit codes: 0 success, 1 input error (bad file, bad flag value), 2
numerical failure.  Output files are written atomically (temp + rename);
CSV is the source of truth, SVG line plots are rendered from the same
data for quick looks.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import library
from .discounted import profile_ladder, solve_discounted
from .errors import GameFormatError, NotCoveredByTheory, StochGamesError
from .evaluations import from_descriptor
from .experiments import (
    DEFAULT_FIT_LADDER,
    ExperimentConfig,
    analyze_game,
    limit_curve_for,
    run_verify,
    strategies_for,
)
from .game import GameSpec, load_game
from .puiseux import fit_expansion
from .trajectory import propagate_exact, write_curve_csv


def _resolve_game(spec: str) -> GameSpec:
    if spec in library.BUILTINS:
        return library.get(spec)
    path = Path(spec)
    if not path.exists():
        raise GameFormatError(
            f"{spec!r} is neither a builtin game ({', '.join(sorted(library.BUILTINS))}) nor a file"
        )
    return load_game(path)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def svg_line_plot(series, title: str, xlabel: str = "t", ylabel: str = "") -> str:
    """Minimal deterministic SVG line plot; series = [(label, x, y), ...]."""
    W, H, ML, MB, MT, MR = 640, 420, 60, 45, 30, 20
    xs = np.concatenate([np.asarray(x, dtype=float) for _, x, _ in series])
    ys = np.concatenate([np.asarray(y, dtype=float) for _, _, y in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return ML + (x - x0) / (x1 - x0) * (W - ML - MR)

    def py(y):
        return H - MB - (y - y0) / (y1 - y0) * (H - MB - MT)

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    out = io.StringIO()
    out.write(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">\n'
    )
    out.write(f'<rect width="{W}" height="{H}" fill="white"/>\n')
    out.write(
        f'<text x="{W / 2:.1f}" y="18" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif">{title}</text>\n'
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        out.write(
            f'<line x1="{px(xv):.1f}" y1="{H - MB}" x2="{px(xv):.1f}" y2="{MT}" '
            f'stroke="#dddddd"/>\n'
        )
        out.write(
            f'<line x1="{ML}" y1="{py(yv):.1f}" x2="{W - MR}" y2="{py(yv):.1f}" '
            f'stroke="#dddddd"/>\n'
        )
        out.write(
            f'<text x="{px(xv):.1f}" y="{H - MB + 16}" text-anchor="middle" font-size="11" '
            f'font-family="sans-serif">{xv:.2f}</text>\n'
        )
        out.write(
            f'<text x="{ML - 6}" y="{py(yv) + 4:.1f}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif">{yv:.3g}</text>\n'
        )
    out.write(
        f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" height="{H - MB - MT}" '
        f'fill="none" stroke="black"/>\n'
    )
    out.write(
        f'<text x="{(ML + W - MR) / 2:.1f}" y="{H - 8}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif">{xlabel}</text>\n'
    )
    if ylabel:
        out.write(
            f'<text x="14" y="{(MT + H - MB) / 2:.1f}" text-anchor="middle" font-size="12" '
            f'font-family="sans-serif" transform="rotate(-90 14 {(MT + H - MB) / 2:.1f})">'
            f"{ylabel}</text>\n"
        )
    for idx, (label, x, y) in enumerate(series):
        color = colors[idx % len(colors)]
        pts = " ".join(f"{px(xv):.2f},{py(yv):.2f}" for xv, yv in zip(x, y))
        out.write(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>\n')
        out.write(
            f'<text x="{W - MR - 6}" y="{MT + 16 + 14 * idx}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif" fill="{color}">{label}</text>\n'
        )
    out.write("</svg>\n")
    return out.getvalue()


def _curve_to_text(curve) -> str:
    buf = io.StringIO()
    write_curve_csv(curve, buf)
    return buf.getvalue()


def _parse_floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def _add_common(sub):
    sub.add_argument("--game", required=True, help="builtin name or game file path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochgames")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("solve", help="solve the discounted game")
    _add_common(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", type=Path, default=None)

    p = subs.add_parser("puiseux", help="fit strategy expansions from a discount ladder")
    _add_common(p)
    p.add_argument("--ladder", type=_parse_floats, default=DEFAULT_FIT_LADDER)
    p.add_argument("--out", type=Path, default=None)

    p = subs.add_parser("check", help="structural hypotheses, absorbing and critical checks")
    _add_common(p)
    p.add_argument("--ladder", type=_parse_floats, default=DEFAULT_FIT_LADDER)

    p = subs.add_parser("trajectory", help="exact cumulated-payoff curve for one evaluation")
    _add_common(p)
    p.add_argument("--eval", dest="evaluation", required=True,
                   help="discounted:<lam> | uniform:<T> | power:<alpha>,<T> | file:<path>")
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--mode", choices=("leading", "lp"), default="leading")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("."))

    p = subs.add_parser("limit", help="closed-form limit curve (absorbing or critical)")
    _add_common(p)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--out", type=Path, default=Path("."))

    p = subs.add_parser("verify", help="constant-payoff sweep over evaluation families")
    _add_common(p)
    p.add_argument("--families", default="discounted,uniform,power")
    p.add_argument("--ladder", type=_parse_floats, default=(1e-2, 1e-3, 1e-4),
                   help="sup-weight targets, strictly decreasing")
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--mode", choices=("leading", "lp"), default="leading")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("."))
    return parser


def _cmd_solve(args) -> int:
    game = _resolve_game(args.game)
    sol = solve_discounted(game, args.lam, tol=args.tol)
    print(f"game: {game.name}   lambda: {args.lam:g}   residual: {sol.residual:.3e}")
    for k, name in enumerate(game.state_names):
        print(f"  v[{name}] = {sol.values[k]:.12g}")
    for k, name in enumerate(game.state_names):
        xrow = ", ".join(f"{a}: {p:.6g}" for a, p in zip(game.action_names_p1, sol.profile.x[k]))
        yrow = ", ".join(f"{a}: {p:.6g}" for a, p in zip(game.action_names_p2, sol.profile.y[k]))
        print(f"  state {name}: x = [{xrow}]   y = [{yrow}]")
    if args.out is not None:
        report = {
            "game": game.name,
            "lambda": args.lam,
            "values": {name: sol.values[k] for k, name in enumerate(game.state_names)},
            "x": {name: list(sol.profile.x[k]) for k, name in enumerate(game.state_names)},
            "y": {name: list(sol.profile.y[k]) for k, name in enumerate(game.state_names)},
            "residual": sol.residual,
        }
        path = args.out / f"solve_{game.name}.json"
        _atomic_write(path, json.dumps(report, indent=2) + "\n")
        print(f"wrote {path}")
    return 0


def _print_expansion(game, exp):
    print(f"fit residual: {exp.fit_residual:.3e}")
    for who, names, coeff, expo in (
        ("P1", game.action_names_p1, exp.coeff_p1, exp.expo_p1),
        ("P2", game.action_names_p2, exp.coeff_p2, exp.expo_p2),
    ):
        for k, sname in enumerate(game.state_names):
            terms = ", ".join(
                f"{a}: {coeff[k, i]:.6g} * lam^{expo[k][i]}" for i, a in enumerate(names)
            )
            print(f"  {who} @ {sname}: {terms}")


def _cmd_puiseux(args) -> int:
    game = _resolve_game(args.game)
    ladder = profile_ladder(game, args.ladder)
    exp = fit_expansion(ladder)
    print(f"game: {game.name}   ladder: {', '.join(f'{l:g}' for l in args.ladder)}")
    _print_expansion(game, exp)
    if args.out is not None:
        report = {
            "game": game.name,
            "fit_residual": exp.fit_residual,
            "p1": [
                {
                    "state": game.state_names[k],
                    "terms": {
                        a: {"c": exp.coeff_p1[k, i], "e": str(exp.expo_p1[k][i])}
                        for i, a in enumerate(game.action_names_p1)
                    },
                }
                for k in range(game.n_states)
            ],
            "p2": [
                {
                    "state": game.state_names[k],
                    "terms": {
                        a: {"c": exp.coeff_p2[k, i], "e": str(exp.expo_p2[k][i])}
                        for i, a in enumerate(game.action_names_p2)
                    },
                }
                for k in range(game.n_states)
            ],
        }
        path = args.out / f"puiseux_{game.name}.json"
        _atomic_write(path, json.dumps(report, indent=2) + "\n")
        print(f"wrote {path}")
    return 0


def _cmd_check(args) -> int:
    game = _resolve_game(args.game)
    analysis = analyze_game(game, args.ladder)
    for label, rep in (("H1", analysis.h1), ("H2", analysis.h2)):
        if rep.holds:
            print(f"{label}: holds")
        else:
            l, lp, lb, actions = rep.witness
            names = game.state_names
            print(f"{label}: violated  witness states ({names[l]}, {names[lp]}, {names[lb]}) "
                  f"actions {actions}")
    if analysis.live is not None:
        print(f"absorbing: yes (live state {game.state_names[analysis.live]})")
    else:
        print("absorbing: no")
    if analysis.generator is not None:
        print("critical: yes, rate matrix")
        for row in analysis.generator.A:
            print("   [" + ", ".join(f"{v: .6g}" for v in row) + "]")
    else:
        print("critical: no (some exit survives below order lambda)")
    v = analysis.limit_value
    vals = ", ".join(f"{name}: {v.values[k]:.6g}" for k, name in enumerate(game.state_names))
    print(f"limit value estimate: [{vals}]  (extrapolation error {v.extrapolation_error:.2e})")
    return 0


def _cmd_trajectory(args) -> int:
    game = _resolve_game(args.game)
    theta = from_descriptor(args.evaluation)
    analysis = analyze_game(game)
    strategies = strategies_for(analysis, args.mode)
    grid = np.linspace(0.0, 1.0, args.grid)
    curve = propagate_exact(game, strategies, theta, grid)
    curve.meta["seed"] = str(args.seed)
    stem = f"trajectory_{game.name}_{theta.describe().replace(':', '_').replace(',', '_')}"
    csv_path = args.out / f"{stem}.csv"
    _atomic_write(csv_path, _curve_to_text(curve))
    svg = svg_line_plot(
        [("gamma(t)", curve.grid, curve.gamma),
         ("t * v", curve.grid, curve.grid * analysis.limit_value.values[game.initial_state])],
        title=f"{game.name} @ {theta.describe()}",
        ylabel="cumulated payoff",
    )
    _atomic_write(args.out / f"{stem}.svg", svg)
    print(f"wrote {csv_path}")
    print(f"gamma(1) = {curve.gamma[-1]:.6g}")
    return 0


def _cmd_limit(args) -> int:
    game = _resolve_game(args.game)
    analysis = analyze_game(game)
    grid = np.linspace(0.0, 1.0, args.grid)
    try:
        kind, curve = limit_curve_for(analysis, grid)
    except NotCoveredByTheory as exc:
        print(f"not covered by the theory: {exc}")
        return 0
    curve.meta["game"] = game.name
    curve.meta["states"] = list(game.state_names)
    path = args.out / f"limit_{game.name}.csv"
    _atomic_write(path, _curve_to_text(curve))
    svg = svg_line_plot(
        [("limit gamma(t)", curve.grid, curve.gamma)],
        title=f"{game.name} limit curve ({kind})",
        ylabel="cumulated payoff",
    )
    _atomic_write(args.out / f"limit_{game.name}.svg", svg)
    print(f"limit kind: {kind}")
    print(f"wrote {path}")
    return 0


def _cmd_verify(args) -> int:
    game = _resolve_game(args.game)
    config = ExperimentConfig(
        families=tuple(args.families.split(",")),
        norm_ladder=args.ladder,
        grid_points=args.grid,
        mode=args.mode,
        seed=args.seed,
    )
    result = run_verify(game, config)
    print(f"game: {game.name}   v[{game.state_names[game.initial_state]}] = {result.value:.6g}   "
          f"limit: {result.limit_kind or 'NOT COVERED BY THEORY'}")
    summary = io.StringIO()
    summary.write("family,norm_target,norm_actual,sup_error,limit_distance,covered\n")
    print(f"{'family':<12}{'norm':<10}{'sup|g-tv|':<12}{'dist to limit':<14}")
    for row in result.rows:
        dist = "" if row.limit_distance is None else repr(row.limit_distance)
        summary.write(
            f"{row.family},{row.norm_target!r},{row.norm_actual!r},"
            f"{row.sup_error!r},{dist},{row.covered}\n"
        )
        dist_s = "-" if row.limit_distance is None else f"{row.limit_distance:.4f}"
        print(f"{row.family:<12}{row.norm_target:<10g}{row.sup_error:<12.4f}{dist_s:<14}")
        curve = result.curves[(row.family, row.norm_target)]
        curve.meta["seed"] = str(args.seed)
        stem = f"verify_{game.name}_{row.family}_{row.norm_target:g}"
        _atomic_write(args.out / f"{stem}.csv", _curve_to_text(curve))
    if result.limit_curve is not None:
        result.limit_curve.meta["game"] = game.name
        result.limit_curve.meta["states"] = list(game.state_names)
        _atomic_write(args.out / f"verify_{game.name}_limit.csv", _curve_to_text(result.limit_curve))
    _atomic_write(args.out / f"verify_{game.name}_summary.csv", summary.getvalue())
    series = [
        (f"{row.family} @ {row.norm_target:g}",
         result.curves[(row.family, row.norm_target)].grid,
         result.curves[(row.family, row.norm_target)].gamma)
        for row in result.rows
    ]
    series.append(("t * v", np.linspace(0, 1, config.grid_points),
                   np.linspace(0, 1, config.grid_points) * result.value))
    _atomic_write(args.out / f"verify_{game.name}.svg",
                  svg_line_plot(series, title=f"{game.name} constant-payoff sweep",
                                ylabel="cumulated payoff"))
    print(f"wrote {args.out / f'verify_{game.name}_summary.csv'}")
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "puiseux": _cmd_puiseux,
    "check": _cmd_check,
    "trajectory": _cmd_trajectory,
    "limit": _cmd_limit,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except (GameFormatError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except StochGamesError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
