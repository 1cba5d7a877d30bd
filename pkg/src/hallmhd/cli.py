"""Command-line entry points.

Subcommands: simulate, check-diophantine, verify-identities,
analyze-decay.  Success exits 0; any failure exits nonzero with a
one-line JSON object {"verdict": ..., "detail": ...} as the last line
on stderr.  The report path of `simulate` and `analyze-decay` renders
figures next to the CSV output.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import diagnostics, report
from .config import ConfigError, RunConfig, format_config, parse_config, parse_value, validate
from .diophantine import check_condition, suggest_background
from .integrator import make_initial_data, simulate
from .spectral import make_lattice

log = logging.getLogger("hallmhd")

EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_FAIL = 4


def _emit_failure(verdict: str, detail: str, code: int) -> "SystemExit":
    print(json.dumps({"verdict": verdict, "detail": detail}), file=sys.stderr)
    return SystemExit(code)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep the JSON contract even for usage errors
        self.print_usage(sys.stderr)
        raise _emit_failure("USAGE", message, EXIT_CONFIG)


def _load_config(args) -> RunConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    else:
        cfg = validate(RunConfig())
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, val = item.partition("=")
        overrides[key.strip()] = parse_value(key.strip(), val.strip())
    if overrides:
        import dataclasses

        cfg = validate(dataclasses.replace(cfg, **overrides))
    env_out = os.environ.get("HALLMHD_OUTPUT_DIR")
    if env_out:
        import dataclasses

        cfg = dataclasses.replace(cfg, output_dir=env_out)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    os.makedirs(cfg.output_dir, exist_ok=True)
    with open(os.path.join(cfg.output_dir, "run.cfg"), "w") as fh:
        fh.write(format_config(cfg))
    result = simulate(cfg, restart_path=args.restart)
    csv_path = os.path.join(cfg.output_dir, "series.csv")
    diagnostics.write_csv(result.samples, cfg.hs, csv_path)
    print(f"samples: {len(result.samples)} -> {csv_path}")
    if result.checkpoints:
        print(f"checkpoints: {len(result.checkpoints)} (last {result.checkpoints[-1]})")
    series = diagnostics.read_csv(csv_path)
    # the reference-slope overlay needs the H^beta columns, which a run
    # with decay_check off may not carry
    pred = beta = None
    if cfg.beta in cfg.hs:
        pred = diagnostics.predicted_alpha(cfg.N, cfg.beta, cfg.r)
        beta = cfg.beta
    figures = report.render_run_figures(
        series, cfg.hs, cfg.output_dir, predicted=pred, beta=beta
    )
    print("figures: " + ", ".join(figures))
    if result.status != "completed":
        raise _emit_failure("BLOWUP", result.detail, EXIT_BLOWUP)
    print(f"completed t={result.state.t:g} (c_est={result.dv.c_est:.6g}, A={result.A:g})")
    return 0


def cmd_check_diophantine(args) -> int:
    from .diophantine import certify

    K = args.K
    if args.n is not None:
        dv = certify(list(args.n), args.r, K)
    else:
        dv = suggest_background(args.r, K, args.amplitude)
        print(f"suggested n = ({dv.n[0]:.12g}, {dv.n[1]:.12g}, {dv.n[2]:.12g})")
    print(f"c_est = {dv.c_est:.15g}")
    print(f"argmin k = {dv.argmin} (|k| = {np.linalg.norm(dv.argmin):.4g})")
    threshold = args.c if args.c is not None else dv.c_est
    if dv.c_est > 0.0:
        rep = check_condition(dv, threshold)
        print(f"shells up to K={K}: tightest at radius {rep.tightest_shell}")
        for shell in rep.shells:
            flag = "ok " if shell.satisfied else "LOW"
            print(
                f"  shell {shell.radius:3d}: min {shell.min_value:.6e} at {shell.argmin} [{flag}]"
            )
    if dv.c_est <= 0.0:
        raise _emit_failure(
            "DEGENERATE",
            f"c_est = 0 at k = {dv.argmin}; background admits an orthogonal integer mode",
            EXIT_FAIL,
        )
    return 0


def cmd_verify_identities(args) -> int:
    lattice = make_lattice(args.n_grid, args.pad_factor)
    from .diophantine import certify, lattice_search_radius

    K = args.K or lattice_search_radius(args.n_grid)
    if args.n is not None:
        dv = certify(list(args.n), args.r, K)
    else:
        dv = suggest_background(args.r, K, args.amplitude)
    worst: dict[str, float] = {name: 0.0 for name in diagnostics.IDENTITY_NAMES}
    for trial in range(args.trials):
        u, b = make_initial_data(
            args.seed + trial, args.spectrum_slope, args.epsilon, lattice, args.N
        )
        res = diagnostics.identity_suite(u, b, dv, args.gamma)
        for name, value in res.items():
            worst[name] = max(worst[name], value)
    width = max(len(name) for name in worst)
    for name, value in worst.items():
        print(f"{name:<{width}}  {value:.6e}")
    over = {name: v for name, v in worst.items() if v > args.tolerance}
    if over:
        raise _emit_failure(
            "IDENTITY_FAIL",
            f"residuals above {args.tolerance:g}: "
            + ", ".join(f"{k}={v:.3e}" for k, v in over.items()),
            EXIT_FAIL,
        )
    print(f"all identities within {args.tolerance:g} over {args.trials} states")
    return 0


def cmd_analyze_decay(args) -> int:
    series = diagnostics.read_csv(args.csv)
    beta = args.beta if args.beta is not None else args.r + 4.0
    cols = (f"hs_u_{beta:g}", f"hs_b_{beta:g}")
    for col in cols:
        if col not in series:
            raise ConfigError(f"{args.csv}: missing column {col}; rerun with H^{beta:g} in hs")
    ts = series["t"]
    norms = series[cols[0]] + series[cols[1]]
    t_end = float(ts[-1])
    lo = (1.0 + t_end) ** (1.0 - args.window_frac) - 1.0
    fit = diagnostics.decay_fit(
        ts, norms, beta, args.N, args.r, window=(lo, t_end), margin=args.margin
    )
    fig = report.render_decay_figure(
        ts, norms, fit, os.path.splitext(args.csv)[0] + "_decay.png"
    )
    print(
        f"fitted alpha = {fit.fitted_alpha:.4f}, predicted = {fit.predicted_alpha:.4f} "
        f"(margin {args.margin:g}, window [{fit.window[0]:.3g}, {fit.window[1]:.3g}], "
        f"{fit.n_points} points, r^2 = {fit.r_squared:.4f})"
    )
    print(f"figure: {fig}")
    if fit.at_floor:
        print(f"norms below {diagnostics.NORM_FLOOR:g}; super-algebraic decay")
    if not fit.passed:
        raise _emit_failure(
            "DECAY_FAIL",
            f"fitted alpha {fit.fitted_alpha:.4f} < predicted {fit.predicted_alpha:.4f}"
            f" - margin {args.margin:g}",
            EXIT_FAIL,
        )
    print("PASS")
    return 0


def _triple(text: str) -> tuple[float, float, float]:
    from .config import _parse_triple

    return _parse_triple(text)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="hallmhd", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="advance the perturbed system and emit reports")
    p.add_argument("--config", help="key=value config file")
    p.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )
    p.add_argument("--restart", help="resume from a checkpoint file")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("check-diophantine", help="finite-radius background certificate")
    p.add_argument("--n", type=_triple, help="background vector, e.g. 1.0,0.7,0.3")
    p.add_argument("--amplitude", type=float, default=1.0, help="|n| for the suggested family")
    p.add_argument("--r", type=float, default=2.5)
    p.add_argument("--K", type=int, default=26)
    p.add_argument("--c", type=float, help="threshold for shell verdicts (default: c_est)")
    p.set_defaults(fn=cmd_check_diophantine)

    p = sub.add_parser("verify-identities", help="cancellation residuals on random states")
    p.add_argument("--n-grid", type=int, default=16, dest="n_grid")
    p.add_argument("--pad-factor", type=float, default=2.0, dest="pad_factor")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--epsilon", type=float, default=1e-2)
    p.add_argument("--spectrum-slope", type=float, default=-2.0, dest="spectrum_slope")
    p.add_argument("--n", type=_triple, help="explicit background vector")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--r", type=float, default=2.5)
    p.add_argument("--N", type=float, default=17.0)
    p.add_argument("--K", type=int, default=0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--tolerance", type=float, default=1e-11)
    p.set_defaults(fn=cmd_verify_identities)

    p = sub.add_parser("analyze-decay", help="fit the tail decay exponent of a run CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--beta", type=float, help="Sobolev index (default r+4)")
    p.add_argument("--N", type=float, default=17.0)
    p.add_argument("--r", type=float, default=2.5)
    p.add_argument("--window-frac", type=float, default=0.5, dest="window_frac")
    p.add_argument("--margin", type=float, default=0.15)
    p.set_defaults(fn=cmd_analyze_decay)
    return top


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except SystemExit:
        raise
    except ConfigError as exc:
        raise _emit_failure("CONFIG", str(exc), EXIT_CONFIG)
    except FileNotFoundError as exc:
        raise _emit_failure("IO", str(exc), EXIT_CONFIG)
    except ValueError as exc:
        raise _emit_failure("INVALID", str(exc), EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
