"""Command-line front end.

    qpjacobi [--config PATH] [--out PATH] [--threads K] [--seed U64] COMMAND ...

Commands: lyapunov, holder, ldt, diophantine, ap-verify, birkhoff.
Exit codes: 0 success, 2 config/validation error, 3 numerical degeneracy,
4 positivity violation, 5 determinant hypothesis violated in ap-verify.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from pathlib import Path

from .avalanche import ap_verify
from .config import RunConfig, load_config, parse_omega
from .diophantine import diophantine_margin
from .errors import (
    ConfigError,
    DeterminantTooLarge,
    InsufficientData,
    NumericalDegeneracy,
    PositivityViolated,
)
from .ldt import birkhoff_field, deviation_histogram, fit_deviation_rate, fit_rate_cells, synthetic_cells
from .lyapunov import holder_fit, scale_ladder

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_POSITIVITY = 4
EXIT_DETERMINANT = 5

LYAPUNOV_COLUMNS = ("energy", "n", "l_n", "std_err", "l_accel", "doubling_gap", "dropped_measure")


class UsageError(Exception):
    pass


def fmt(x):
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".17g")


def csv_text(columns, rows):
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def json_text(obj):
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def emit(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    # write-then-rename so a failed run never leaves a partial file
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def lyapunov_rows(cfg: RunConfig, threads=None):
    scales = sorted(set(cfg.scales))
    spec = cfg.cocycle()
    energies = cfg.energies()
    ladders = scale_ladder(spec, scales + [2 * n for n in scales], cfg.sampler(), energies, threads)
    rows = []
    for e, ladder in zip(energies, ladders):
        by_n = {est.n: est for est in ladder}
        for n in scales:
            lo, hi = by_n[n], by_n[2 * n]
            rows.append((float(e), n, lo.l_n, lo.std_err, 2.0 * hi.l_n - lo.l_n,
                         abs(lo.l_n - hi.l_n), max(lo.dropped_measure, hi.dropped_measure)))
    return rows


def cmd_lyapunov(cfg, args):
    text = csv_text(LYAPUNOV_COLUMNS, lyapunov_rows(cfg, args.threads))
    emit(text, args.out or cfg.output_csv)
    return EXIT_OK


def holder_report(cfg, threads=None):
    energies = cfg.energies()
    if len(energies) < 8:
        raise UsageError("holder needs an energy grid of at least 8 points")
    spec = cfg.cocycle()
    try:
        fit = holder_fit(spec, energies, cfg.scales[0], cfg.sampler(), cfg.holder_cap_fraction,
                         cfg.holder_positivity_tol, cfg.holder_noise_sigmas, cfg.levels, threads)
    except PositivityViolated as exc:
        return {
            "beta": None,
            "intercept": None,
            "r_squared": None,
            "window": [float(energies.min()), float(energies.max())],
            "pair_count": 0,
            "positivity_ok": False,
            "violations": [{"energy": e, "l_inf": v} for e, v in zip(exc.energies, exc.values)],
        }
    return {
        "beta": fit.beta,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "window": list(fit.window),
        "pair_count": fit.pair_count,
        "positivity_ok": True,
        "slope": fit.slope,
        "stable_fraction": fit.stable_fraction,
    }


def cmd_holder(cfg, args):
    try:
        report = holder_report(cfg, args.threads)
    except InsufficientData as exc:
        raise UsageError(str(exc)) from None
    emit(json_text(report), args.out or cfg.output_json)
    if not report["positivity_ok"]:
        bad = ", ".join(f"{v['energy']:.6g}" for v in report["violations"])
        print(f"positivity violated at E = {bad}", file=sys.stderr)
        return EXIT_POSITIVITY
    return EXIT_OK


def rate_json(fit):
    return {
        "fitted_c": fit.fitted_c,
        "fit_quality": fit.fit_quality,
        "residual": fit.residual,
        "censored": fit.censored,
        "lower_bound": fit.lower_bound,
        "deltas": fit.deltas,
        "n_values": fit.n_values,
    }


def ldt_outputs(cfg, synthetic_rate=None, threads=None):
    scales = sorted(set(cfg.scales))
    if len(scales) < 2:
        raise UsageError("ldt needs at least two scales")
    if synthetic_rate is not None:
        cells = synthetic_cells(synthetic_rate, cfg.deltas, scales)
        fit = fit_rate_cells(cells)
    else:
        spec = cfg.cocycle()
        hists = [deviation_histogram(spec, n, cfg.sampler(), cfg.deltas, threads=threads) for n in scales]
        cells = [(d, h.n, m, h.samples) for h in hists for d, m in h.deviation_measures]
        fit = fit_deviation_rate(hists)
    rows = [(n, d, m) for d, n, m, _ in cells]
    return csv_text(("n", "delta", "measure"), rows), json_text(rate_json(fit))


def cmd_ldt(cfg, args):
    try:
        csv_out, json_out = ldt_outputs(cfg, args.synthetic_rate, args.threads)
    except InsufficientData as exc:
        raise UsageError(str(exc)) from None
    csv_path = args.out or cfg.output_csv
    json_path = cfg.output_json or (f"{csv_path}.rate.json" if csv_path else None)
    emit(csv_out, csv_path)
    emit(json_out, json_path)
    return EXIT_OK


def cmd_diophantine(cfg, args):
    omega = parse_omega(args.omega) if args.omega is not None else cfg.omega
    alpha = args.alpha if args.alpha is not None else cfg.alpha
    n_max = args.n_max if args.n_max is not None else cfg.n_max
    if alpha <= 1.0:
        raise UsageError(f"alpha must exceed 1, got {alpha}")
    if n_max < 2:
        raise UsageError("n_max must be at least 2")
    rep = diophantine_margin(omega, alpha, n_max)
    out = {
        "omega": rep.omega,
        "alpha": rep.alpha,
        "n_max": rep.n_max,
        "worst_n": rep.worst_n,
        "margin": rep.margin,
        "is_rational": rep.is_rational,
        "worst_is_convergent": rep.worst_is_convergent,
    }
    emit(json_text(out), args.out or cfg.output_json)
    return EXIT_OK


def read_matrix_file(path):
    """One 2x2 matrix per line: four whitespace-separated decimals, row-major."""
    matrices = []
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 4:
                    raise UsageError(f"{path}:{lineno}: expected 4 numbers, got {len(parts)}")
                try:
                    a, b, c, d = map(float, parts)
                except ValueError:
                    raise UsageError(f"{path}:{lineno}: not a number") from None
                matrices.append([[a, b], [c, d]])
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    if len(matrices) < 3:
        raise UsageError("ap-verify needs at least 3 matrices")
    return matrices


def cmd_ap_verify(cfg, args):
    verdict = ap_verify(read_matrix_file(args.matrix_file))
    out = {
        "lhs": verdict.lhs,
        "bound_ratio": verdict.bound_ratio,
        "hypotheses_met": verdict.hypotheses_met,
        "mu": verdict.mu,
        "n": verdict.n,
        "direct_log_norm": verdict.direct_log_norm,
        "max_pair_defect": verdict.max_pair_defect,
        "borderline": verdict.borderline,
    }
    emit(json_text(out), args.out or cfg.output_json)
    return EXIT_OK


def cmd_birkhoff(cfg, args):
    spec = cfg.cocycle()
    out = []
    for n in sorted(set(cfg.scales)):
        f = birkhoff_field(spec, n, cfg.sampler(), cfg.deltas, args.threads)
        out.append({
            "n": f.n,
            "mean": f.mean,
            "std_err": f.std_err,
            "max": f.max,
            "min": f.min,
            "log_b_mean": f.log_b_mean,
            "deviation_measures": [[d, m] for d, m in f.deviation_measures],
        })
    emit(json_text(out), args.out or cfg.output_json)
    return EXIT_OK


COMMANDS = {
    "lyapunov": cmd_lyapunov,
    "holder": cmd_holder,
    "ldt": cmd_ldt,
    "diophantine": cmd_diophantine,
    "ap-verify": cmd_ap_verify,
    "birkhoff": cmd_birkhoff,
}


def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default)
    parser.add_argument("--out", metavar="PATH", default=default)
    parser.add_argument("--threads", metavar="K", type=int, default=default,
                        help="worker threads (default: all cores); results do not depend on it")
    parser.add_argument("--seed", metavar="U64", type=int, default=default)


def build_parser():
    parser = argparse.ArgumentParser(prog="qpjacobi", description=__doc__.split("\n\n")[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _global_flags(p, suppress=True)
        if name == "ldt":
            p.add_argument("--synthetic-rate", type=float, default=None, metavar="C",
                           help="skip the cocycle and fit measures exactly exp(-C delta^2 N)")
        elif name == "diophantine":
            p.add_argument("--omega", default=None, help="decimal, golden or sqrt2m1")
            p.add_argument("--alpha", type=float, default=None)
            p.add_argument("--n-max", type=int, default=None)
        elif name == "ap-verify":
            p.add_argument("matrix_file")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.validate()
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DeterminantTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DETERMINANT
    except NumericalDegeneracy as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
