"""Command line front end.

Angles given with ``--settings`` are multiples of pi (``-0.0012`` means
``-0.0012*pi``); theta values in state selectors and grids are radians.

Exit codes: 0 success, 2 usage error, 3 no violation, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from typing import Sequence

import numpy as np

from .detection import (
    DetectionScenario,
    InvalidStrategyError,
    NoDetectionStrategy,
    NoViolationError,
    effective_value,
    score_breakdown,
)
from .inequalities import PolynomialError, lhv_bound_bruteforce, resolve_polynomial
from .optimize import (
    StateFamily,
    maximize_violation,
    minimize_threshold_asym,
    minimize_threshold_symmetric,
    noise_tradeoff,
    sweep_theta,
)
from .quantum import DomainError, MeasurementSettings
from .simulate import simulate, trial_records, write_trial_records

EXIT_OK, EXIT_USAGE, EXIT_NO_VIOLATION, EXIT_NUMERICAL = 0, 2, 3, 4
# 0.7854 is pi/4 rounded to four decimals
PI4_ROUNDING = 5e-5
CSV_HEADER = ["theta", "noise_param", "threshold", "q", "m_a", "m_b", "x"]


class UsageError(Exception):
    pass


def parse_state(spec: str):
    """``pure:<theta>``, ``background:<theta>,<p>`` or ``dark:<theta>,<eps_a>,<eps_b>``."""
    try:
        kind, _, args = spec.partition(":")
        vals = [float(v) for v in args.split(",")] if args else []
    except ValueError as exc:
        raise UsageError(f"bad state selector {spec!r}") from exc
    arity = {"pure": 1, "background": 2, "dark": 3}
    if kind not in arity or len(vals) != arity[kind]:
        raise UsageError(f"bad state selector {spec!r}; expected pure:<theta>, "
                         "background:<theta>,<p> or dark:<theta>,<eps_a>,<eps_b>")
    theta = vals[0]
    if np.pi / 4 < theta <= np.pi / 4 + PI4_ROUNDING:
        print(f"note: theta={theta} read as pi/4", file=sys.stderr)
        theta = np.pi / 4
    if kind == "background":
        family = StateFamily(kind, p=vals[1])
    elif kind == "dark":
        family = StateFamily(kind, eps_a=vals[1], eps_b=vals[2])
    else:
        family = StateFamily(kind)
    return family, theta


def parse_settings(spec: str, shape) -> MeasurementSettings:
    try:
        alice, bob = spec.split(";")
        alpha = [float(v) for v in alice.split(",")]
        beta = [float(v) for v in bob.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad settings {spec!r}; expected 'a1,a2,...;b1,b2,...' "
                         "in multiples of pi") from exc
    if (len(alpha), len(beta)) != tuple(shape):
        raise UsageError(f"settings have shape {(len(alpha), len(beta))}, "
                         f"inequality needs {tuple(shape)}")
    return MeasurementSettings.planar(alpha, beta, in_pi=True)


def parse_strategy(spec: str, shape) -> NoDetectionStrategy:
    if spec == "zeros":
        return NoDetectionStrategy.zeros(*shape)
    if spec == "ones":
        return NoDetectionStrategy((1,) * shape[0], (1,) * shape[1])
    try:
        alice, bob = spec.split(";")
        strat = NoDetectionStrategy(tuple(int(v) for v in alice.split(",")),
                                    tuple(int(v) for v in bob.split(",")))
    except ValueError as exc:
        raise UsageError(f"bad strategy {spec!r}; expected zeros, ones or 't1,..;s1,..'") from exc
    if strat.shape != tuple(shape):
        raise UsageError(f"strategy has shape {strat.shape}, inequality needs {tuple(shape)}")
    return strat


def parse_grid(spec: str) -> list[float]:
    """Comma list, or ``lin:start:stop:n`` / ``geom:start:stop:n``."""
    try:
        if spec.startswith(("lin:", "geom:")):
            kind, a, b, n = spec.split(":")
            fn = np.linspace if kind == "lin" else np.geomspace
            grid = [float(v) for v in fn(float(a), float(b), int(n))]
        else:
            grid = [float(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad grid {spec!r}") from exc
    if not grid:
        raise UsageError("grid is empty")
    return grid


def _probability(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} must be >= 1")
    return v


def _fmt(v: float) -> str:
    return "" if v is None or not np.isfinite(v) else f"{v:.12g}"


def _echo(args, out):
    for key, value in sorted(vars(args).items()):
        if key != "func":
            print(f"# {key} = {value}", file=out)


def _angles_line(settings: MeasurementSettings) -> str:
    alpha, beta = settings.in_units_of_pi()
    fmt = lambda xs: ",".join(f"{x:.6f}" for x in xs)
    return f"{fmt(alpha)};{fmt(beta)}"


def _strategy_line(strat: NoDetectionStrategy) -> str:
    return (",".join(map(str, strat.alice_outputs)) + ";"
            + ",".join(map(str, strat.bob_outputs)))


def _resolve_settings(args, poly, rho):
    if args.settings is None:
        raise UsageError("--settings is required (angles in multiples of pi, or 'optimal')")
    if args.settings == "optimal":
        return maximize_violation(rho, poly, args.restarts, args.seed).settings
    return parse_settings(args.settings, poly.shape)


def cmd_bound(args, out) -> int:
    poly = resolve_polynomial(args.ineq)
    print(f"local_bound = {lhv_bound_bruteforce(poly):.12g}", file=out)
    return EXIT_OK


def cmd_value(args, out) -> int:
    poly = resolve_polynomial(args.ineq)
    family, theta = parse_state(args.state)
    rho = family.state(theta)
    settings = _resolve_settings(args, poly, rho)
    strat = parse_strategy(args.strategy, poly.shape)
    b = score_breakdown(rho, settings, poly, strat)
    value = effective_value(b, DetectionScenario(args.eta_a, args.eta_b))
    print(f"settings_pi = {_angles_line(settings)}", file=out)
    print(f"strategy = {_strategy_line(strat)}", file=out)
    for name, v in (("Q", b.q), ("M_A", b.m_a), ("M_B", b.m_b), ("X", b.x), ("I", value)):
        print(f"{name} = {v:.12g}", file=out)
    return EXIT_OK


def cmd_threshold(args, out) -> int:
    poly = resolve_polynomial(args.ineq)
    family, theta = parse_state(args.state)
    rho = family.state(theta)
    if args.symmetric:
        res = minimize_threshold_symmetric(rho, poly, args.restarts, args.seed,
                                           full_bloch=args.full_bloch)
    else:
        res = minimize_threshold_asym(rho, poly, args.restarts, args.seed, eta_a=args.eta_a,
                                      full_bloch=args.full_bloch)
    b = res.breakdown
    print(f"threshold = {res.objective:.12g}", file=out)
    print(f"settings_pi = {_angles_line(res.settings)}", file=out)
    if args.full_bloch:
        az = [s.azimuth / np.pi for s in res.settings.alice + res.settings.bob]
        print("azimuth_pi = " + ",".join(f"{v:.6f}" for v in az), file=out)
    print(f"strategy = {_strategy_line(res.strategy)}", file=out)
    for name, v in (("Q", b.q), ("M_A", b.m_a), ("M_B", b.m_b), ("X", b.x)):
        print(f"{name} = {v:.12g}", file=out)
    print(f"converged = {res.converged}", file=out)
    print(f"restarts_used = {res.restarts_used}", file=out)
    return EXIT_OK


def _sweep_rows(args, poly):
    mode = "sym" if args.symmetric else "asym"
    if args.noise_grid is not None:
        grid = parse_grid(args.noise_grid)
        thetas = None if args.thetas is None else parse_grid(args.thetas)
        pts = noise_tradeoff(poly, args.noise_model, grid, mode, args.restarts, args.seed,
                             eta_a=args.eta_a, eps_b=args.eps_b, theta_grid=thetas,
                             workers=args.workers)
        noise = grid
    else:
        family = StateFamily(args.family, p=args.p, eps_a=args.eps_a, eps_b=args.eps_b)
        grid = parse_grid("geom:0.7853981633974483:0.005:16" if args.thetas is None else args.thetas)
        pts = sweep_theta(poly, family, grid, mode, args.restarts, args.seed, eta_a=args.eta_a)
        noise = [family.noise_value] * len(pts)
    rows = []
    for p, nv in zip(pts, noise):
        if not np.isfinite(p.q):
            print(f"warning: no violation found at theta={p.theta:.6g}, noise={nv:.6g}",
                  file=sys.stderr)
            thr = None
        else:
            thr = p.threshold
        rows.append([_fmt(p.theta), _fmt(nv), _fmt(thr), _fmt(p.q), _fmt(p.m_a), _fmt(p.m_b),
                     _fmt(p.x)])
    return rows


def cmd_sweep(args, out) -> int:
    poly = resolve_polynomial(args.ineq)
    rows = _sweep_rows(args, poly)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(rows)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(buf.getvalue())
        print(f"wrote {len(rows)} rows to {args.output}", file=out)
    else:
        out.write(buf.getvalue())
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    poly = resolve_polynomial(args.ineq)
    family, theta = parse_state(args.state)
    rho = family.state(theta)
    settings = _resolve_settings(args, poly, rho)
    strat = parse_strategy(args.strategy, poly.shape)
    sc = DetectionScenario(args.eta_a, args.eta_b)
    rep = simulate(rho, settings, poly, strat, sc, args.trials, args.seed,
                   bootstrap=args.bootstrap)
    analytic = effective_value(score_breakdown(rho, settings, poly, strat), sc)
    if args.dump:
        write_trial_records(args.dump, trial_records(rho, settings, strat, sc, args.trials,
                                                     args.seed))
    dev = abs(rep.bell_value - analytic)
    ok = dev <= 4 * rep.std_error
    print(f"estimate = {rep.bell_value:.10g} +/- {rep.std_error:.3g} ({rep.method})", file=out)
    print(f"analytic = {analytic:.10g}", file=out)
    print(f"deviation = {dev / rep.std_error if rep.std_error > 0 else float('inf'):.3f} sigma",
          file=out)
    print(f"consistent = {'PASS' if ok else 'FAIL'}", file=out)
    if not np.isfinite(rep.bell_value):
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    default_workers = int(os.environ.get("ASYMBELL_WORKERS", "1"))
    p = argparse.ArgumentParser(prog="asymbell",
                                description="Detection-efficiency thresholds for Bell tests.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, state=True):
        sp.add_argument("--ineq", default="chsh", help="chsh, i3322 or a polynomial file")
        if state:
            sp.add_argument("--state", default="pure:0.7853981633974483",
                            help="pure:<theta> | background:<theta>,<p> | "
                                 "dark:<theta>,<eps_a>,<eps_b>")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--restarts", type=_positive_int, default=None)

    sp = sub.add_parser("bound", help="local bound by enumeration of deterministic strategies")
    sp.add_argument("--ineq", default="chsh")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("value", help="Q, M_A, M_B, X and the observed value")
    common(sp)
    sp.add_argument("--settings", help="'a1,..;b1,..' in multiples of pi, or 'optimal'")
    sp.add_argument("--strategy", default="zeros")
    sp.add_argument("--eta-a", type=_probability, default=1.0)
    sp.add_argument("--eta-b", type=_probability, default=1.0)
    sp.set_defaults(func=cmd_value)

    sp = sub.add_parser("threshold", help="optimized threshold efficiency")
    common(sp)
    sp.add_argument("--eta-a", type=_probability, default=1.0)
    sp.add_argument("--symmetric", action="store_true")
    sp.add_argument("--full-bloch", action="store_true")
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("sweep", help="threshold curves as CSV")
    common(sp, state=False)
    sp.add_argument("--family", choices=("pure", "background", "dark"), default="pure")
    sp.add_argument("--p", type=_probability, default=0.0)
    sp.add_argument("--eps-a", type=_probability, default=0.0)
    sp.add_argument("--eps-b", type=_probability, default=0.0)
    sp.add_argument("--thetas", help="theta grid (radians)")
    sp.add_argument("--noise-grid", help="noise grid; minimizes over theta at each value")
    sp.add_argument("--noise-model", choices=("background", "dark"), default="background")
    sp.add_argument("--eta-a", type=_probability, default=1.0)
    sp.add_argument("--symmetric", action="store_true")
    sp.add_argument("--workers", type=_positive_int, default=default_workers)
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("simulate", help="Monte Carlo check of the observed value")
    common(sp)
    sp.add_argument("--settings", help="'a1,..;b1,..' in multiples of pi, or 'optimal'")
    sp.add_argument("--strategy", default="zeros")
    sp.add_argument("--eta-a", type=_probability, default=1.0)
    sp.add_argument("--eta-b", type=_probability, default=1.0)
    sp.add_argument("--trials", type=_positive_int, default=100_000)
    sp.add_argument("--bootstrap", action="store_true")
    sp.add_argument("--dump", help="write per-trial records i,j,fired_a,fired_b,a,b")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    csv_to_stdout = args.command == "sweep" and not args.output
    _echo(args, sys.stderr if csv_to_stdout else out)
    try:
        return args.func(args, out)
    except (UsageError, DomainError, PolynomialError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoViolationError, InvalidStrategyError) as exc:
        print(f"no violation: {exc}", file=sys.stderr)
        return EXIT_NO_VIOLATION
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
