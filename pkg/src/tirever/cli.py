"""Command-line interface: ``tirever {detect,simulate,hpfilter,montecarlo,verify}``.

Exit codes: 0 success, 1 verification mismatch, 2 invalid input or
configuration, 3 numerical failure (optimiser did not converge).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from tirever import __version__
from tirever.distributions import SkewedTParams, stream
from tirever.errors import DataError, FitError, TireverError
from tirever.hp import hp_decompose, hp_lambda
from tirever.mar import MarFit, MarSpec, mar_simulate
from tirever.montecarlo import TrendConfig, add_trend, cells_to_csv, cells_to_markdown, resolve_config, run_table
from tirever.series import Frequency, TimeSeries, load_csv
from tirever.strategies import RrReport, TrVerdict, run_pipeline

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

SEED_ENV = "TIREVER_SEED"
_STRATEGY_TAGS = {"1": "s1", "2": "s2", "rr": "rr", "s1": "s1", "s2": "s2"}


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or not raw.strip():
        return 0
    try:
        return int(raw)
    except ValueError:
        raise DataError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _float_list(text: str) -> list[float]:
    if not text.strip():
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def canonical_json(payload: Any) -> str:
    """Serialisation used both for writing reports and comparing payloads."""
    return json.dumps(payload, sort_keys=True, indent=2)


def _report(command: str, seed: int | None, inputs: dict, options: dict, payload: Any, started: float) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "input": inputs,
        "options": options,
        "payload": payload,
        "duration_seconds": round(time.perf_counter() - started, 6),
    }


def _write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


# --------------------------------------------------------------------------
# detect


def detect_payload(options: dict) -> tuple[TrVerdict | RrReport, dict, dict]:
    """Run the detection pipeline described by recorded ``options``.

    Returns the result object, the input descriptor and the JSON payload.
    """
    series = load_csv(options["input"], options["column"], options["freq"])
    inputs = {
        "path": str(options["input"]),
        "sha256": _sha256(options["input"]),
        "n_obs": int(series.values.size),
        "label": series.label,
    }
    strategy = options["strategy"]
    kwargs: dict[str, Any] = {}
    if strategy == "rr":
        kwargs.update(k=options["k"], variance_method=options["rr_variance"], rng=stream(options["seed"], options["k"]))
    else:
        kwargs.update(
            criterion=options["ic"],
            alpha=options["alpha"],
            p=options["p"],
            p_max=options["p_max"],
            normality_alpha=options["normality_alpha"],
        )
    result = run_pipeline(
        series,
        strategy,
        detrend=options["detrend"],
        lam=options["lambda"],
        lambda_exponent=options["exponent"],
        **kwargs,
    )
    return result, inputs, result.to_dict()


def _fmt(x: float | None, spec: str = ".4f") -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "n/a"
    return format(x, spec)


def coefficient_table(fit: MarFit) -> str:
    """Estimates with standard errors in parentheses underneath; ``/`` marks absent terms."""
    rows = []
    for name, coefs in (("phi", fit.spec.phi), ("varphi", fit.spec.varphi)):
        if coefs.size == 0:
            rows.append((f"{name}_1", "/", ""))
        for i, c in enumerate(coefs, 1):
            rows.append((f"{name}_{i}", f"{c:.4f}", f"({_fmt(fit.std_errors.get(f'{name}{i}'))})"))
    inn = fit.spec.innovation
    rows.append(("nu", f"{inn.nu:.1f}", f"({_fmt(fit.std_errors.get('nu'), '.1f')})"))
    rows.append(("sigma", f"{inn.sigma:.4f}", f"({_fmt(fit.std_errors.get('sigma'))})"))
    width = max(len(r[0]) for r in rows)
    lines = [f"  {'':<{width}}  {fit.label}"]
    for name, est, se in rows:
        lines.append(f"  {name:<{width}}  {est}")
        if se:
            lines.append(f"  {'':<{width}}  {se}")
    return "\n".join(lines)


def format_verdict(result: TrVerdict | RrReport, alpha: float = 0.05) -> str:
    lines = []
    if isinstance(result, RrReport):
        lines += [
            f"verdict            : {'irreversible' if result.rejects(alpha) else 'reversible'} (level {alpha:g})",
            "strategy           : Ramsey-Rothman bicovariance test",
            f"lag k              : {result.k}",
            f"gamma_hat          : {result.gamma_hat:.6g}",
            f"z statistic        : {result.z_statistic:.4f}",
            f"p-value            : {result.p_value:.4g}",
            f"variance method    : {result.variance_method}",
        ]
    else:
        lines += [
            f"verdict            : {result.verdict}",
            f"strategy           : {result.strategy}",
            f"pseudo-causal p    : {result.p_selected}",
            f"Jarque-Bera        : {result.normality.statistic:.4f} (p = {result.normality.p_value:.4g})",
        ]
        if result.selected is not None:
            lines.append(f"grid order p       : {result.p_grid}")
            lines.append(f"selected (r, s)    : ({result.selected.r}, {result.selected.s})")
            if result.strategy == "s1":
                lines.append(f"IC(restricted) - min IC(unrestricted) [{result.criterion}] : {_fmt(result.decisive_statistic)}")
            else:
                lines.append(f"LR statistic       : {_fmt(result.decisive_statistic)}")
                lines.append(f"p-value            : {_fmt(result.decisive_p_value, '.4g')}")
            lines += ["", "fitted models:"]
            for f in result.fits:
                flag = "" if f.converged else "  [not converged]"
                lines.append(f"  {f.label:<22} loglik={f.loglik:.3f}  aic={f.aic:.3f}  bic={f.bic:.3f}{flag}")
            lines += ["", "coefficients (standard errors):", coefficient_table(result.selected)]
    if result.detrended:
        lines.append(f"HP lambda          : {result.hp_lambda:g}")
    return "\n".join(lines)


def cmd_detect(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    seed = args.seed if args.seed is not None else default_seed()
    options = {
        "input": str(args.input),
        "column": args.column,
        "freq": args.freq,
        "strategy": _STRATEGY_TAGS[args.strategy],
        "detrend": args.detrend,
        "lambda": args.lam,
        "exponent": args.exponent,
        "ic": args.ic,
        "alpha": args.alpha,
        "normality_alpha": None if args.no_gate else args.normality_alpha,
        "p": args.p,
        "p_max": args.p_max,
        "k": args.k,
        "rr_variance": args.rr_variance,
        "seed": seed,
    }
    result, inputs, payload = detect_payload(options)
    print(format_verdict(result, args.alpha))
    if args.out:
        _write_text(args.out, canonical_json(_report("detect", seed, inputs, options, payload, started)) + "\n")
    if isinstance(result, TrVerdict):
        bad = [f.label for f in result.fits if not f.converged]
        if bad:
            print(f"error: optimiser did not converge for {', '.join(bad)}", file=sys.stderr)
            return EXIT_NUMERIC
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate


def simulate_series(options: dict) -> tuple[MarSpec, TimeSeries]:
    phi, varphi = options["phi"], options["varphi"]
    for name, coefs, order in (("r", phi, options["r"]), ("s", varphi, options["s"])):
        if order is not None and order != len(coefs):
            raise DataError(f"--{name} {order} does not match {len(coefs)} coefficient(s) given")
    spec = MarSpec(phi, varphi, SkewedTParams(options["nu"], options["gamma"], options["sigma"]))
    if options["T"] < 1:
        raise DataError("--T must be positive")
    rng = stream(options["seed"])
    y = mar_simulate(spec, options["T"], rng, burn_in=options["burnin"])
    if options["trend"] == "rwd":
        y = add_trend(y, TrendConfig("random_walk_drift", options["delta"], options["noise_sd"]), rng)
    return spec, y


def series_csv(values: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "value"])
    for i, v in enumerate(values, 1):
        w.writerow([i, f"{v:.17g}"])
    return buf.getvalue()


def cmd_simulate(args: argparse.Namespace) -> int:
    options = {
        "r": args.r,
        "s": args.s,
        "phi": args.phi,
        "varphi": args.varphi,
        "nu": args.nu,
        "gamma": args.gamma,
        "sigma": args.sigma,
        "T": args.T,
        "burnin": args.burnin,
        "seed": args.seed if args.seed is not None else default_seed(),
        "trend": args.trend,
        "delta": args.delta,
        "noise_sd": args.noise_sd,
    }
    spec, y = simulate_series(options)
    text = series_csv(y.values)
    echo = (
        f"MAR({spec.r},{spec.s}) phi={spec.phi.tolist()} varphi={spec.varphi.tolist()} "
        f"nu={args.nu:g} gamma={args.gamma:g} sigma={args.sigma:g} T={args.T} seed={options['seed']} trend={args.trend}"
    )
    if args.out:
        _write_text(args.out, text)
        print(echo)
    else:
        print(echo, file=sys.stderr)
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------
# hpfilter


def cmd_hpfilter(args: argparse.Namespace) -> int:
    series = load_csv(args.input, args.column, args.freq)
    if args.lam is not None:
        lam = float(args.lam)
    elif args.freq is not None:
        lam = hp_lambda(series.frequency, args.exponent)
    else:
        raise DataError("hpfilter needs --lambda or --freq")
    dec = hp_decompose(series, lam)
    y, trend, cycle = series.values, dec.trend.values, dec.cycle.values
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "value", "trend", "cycle"])
    for i in range(y.size):
        w.writerow([i + 1, f"{y[i]:.17g}", f"{trend[i]:.17g}", f"{cycle[i]:.17g}"])
    err = float(np.max(np.abs(y - trend - cycle)))
    print(f"lambda = {lam:g}")
    print(f"max |value - trend - cycle| = {err:.3e}")
    if args.out:
        _write_text(args.out, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# --------------------------------------------------------------------------
# montecarlo


def montecarlo_payload(config_ref: str, reps: int | None, seed: int | None, jobs: int) -> tuple[Any, list]:
    config = resolve_config(config_ref)
    if reps is not None:
        config = config.with_reps(reps)
    if seed is not None:
        config = type(config).from_dict({**config.to_dict(), "master_seed": seed})
    return config, run_table(config, jobs=jobs)


def cmd_montecarlo(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    if args.jobs < 1:
        raise DataError("--jobs must be at least 1")
    config, cells = montecarlo_payload(args.config, args.reps, args.seed, args.jobs)
    csv_text = cells_to_csv(cells)
    md_text = cells_to_markdown(cells, title=f"{config.name}: {config.dgp.label}" if config.name else None)
    prefix = str(args.out or config.name or "montecarlo")
    _write_text(prefix + ".csv", csv_text)
    _write_text(prefix + ".md", md_text)
    options = {"config": str(args.config), "reps": args.reps, "seed": args.seed, "experiment": config.to_dict()}
    payload = {"csv": csv_text}
    report = _report("montecarlo", config.master_seed, {"config": str(args.config)}, options, payload, started)
    _write_text(prefix + ".json", canonical_json(report) + "\n")
    print(md_text, end="")
    failures = sum(c.failures for c in cells)
    if failures:
        print(f"note: {failures} replication(s) failed and were excluded from the frequencies")
    return EXIT_OK


# --------------------------------------------------------------------------
# verify


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read report {args.report}: {exc}") from exc
    if not isinstance(report, dict) or "command" not in report or "payload" not in report:
        raise DataError("report: missing 'command' or 'payload'")
    command = report["command"]
    options = report.get("options", {})
    if command == "detect":
        recorded = report.get("input", {}).get("sha256")
        if recorded and _sha256(options["input"]) != recorded:
            raise DataError(f"input file {options['input']} changed since the report was written")
        _, _, payload = detect_payload(options)
    elif command == "montecarlo":
        _, cells = montecarlo_payload(options["config"], options["reps"], options["seed"], args.jobs)
        payload = {"csv": cells_to_csv(cells)}
    else:
        raise DataError(f"report: cannot verify command {command!r}")
    if canonical_json(payload) == canonical_json(report["payload"]):
        print(f"verified: {command} payload reproduced exactly")
        return EXIT_OK
    print(f"mismatch: re-running {command} did not reproduce the recorded payload", file=sys.stderr)
    return EXIT_MISMATCH


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tirever", description="Time-reversibility diagnostics for MAR models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    freqs = [f.value for f in Frequency if f is not Frequency.UNSPECIFIED]

    d = sub.add_parser("detect", help="classify a series as time reversible or irreversible")
    d.add_argument("input", help="CSV file with one observation per row")
    d.add_argument("--column", default=None, help="value column (name or 0-based index)")
    d.add_argument("--strategy", choices=["1", "2", "rr"], default="2")
    d.add_argument("--detrend", action="store_true", help="apply the HP filter and analyse the cycle")
    d.add_argument("--freq", choices=freqs, default=None)
    d.add_argument("--lambda", dest="lam", type=float, default=None, help="HP smoothing parameter")
    d.add_argument("--exponent", type=int, choices=[2, 4], default=4)
    d.add_argument("--ic", choices=["aic", "bic"], default="bic")
    d.add_argument("--alpha", type=float, default=0.05)
    d.add_argument("--normality-alpha", type=float, default=0.05, help="level of the Jarque-Bera gate")
    d.add_argument("--no-gate", action="store_true", help="fit the MAR grid even for Gaussian-looking residuals")
    d.add_argument("--p", type=int, default=None, help="fix the total order instead of selecting it")
    d.add_argument("--p-max", type=int, default=None)
    d.add_argument("--k", type=int, default=2, help="bicovariance lag for --strategy rr")
    d.add_argument(
        "--rr-variance", choices=["gaussian_null", "iid_plugin", "block_bootstrap"], default="gaussian_null"
    )
    d.add_argument("--seed", type=int, default=None)
    d.add_argument("--out", default=None, help="write a JSON report here")
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("simulate", help="simulate a MAR process to CSV")
    s.add_argument("--r", type=int, default=None)
    s.add_argument("--s", type=int, default=None)
    s.add_argument("--phi", type=_float_list, default=[])
    s.add_argument("--varphi", type=_float_list, default=[])
    s.add_argument("--nu", type=float, default=3.0)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--T", type=int, default=500)
    s.add_argument("--burnin", type=int, default=200)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--trend", choices=["none", "rwd"], default="none")
    s.add_argument("--delta", type=float, default=0.05)
    s.add_argument("--noise-sd", type=float, default=1.0)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    h = sub.add_parser("hpfilter", help="Hodrick-Prescott trend/cycle decomposition")
    h.add_argument("input")
    h.add_argument("--column", default=None)
    h.add_argument("--freq", choices=freqs, default=None)
    h.add_argument("--lambda", dest="lam", type=float, default=None)
    h.add_argument("--exponent", type=int, choices=[2, 4], default=4)
    h.add_argument("--out", default=None)
    h.set_defaults(func=cmd_hpfilter)

    m = sub.add_parser("montecarlo", help="detection-frequency tables from a JSON experiment")
    m.add_argument("--config", required=True, help="JSON file or bundled config name (e.g. table1_panel1)")
    m.add_argument("--reps", type=int, default=None, help="override n_reps")
    m.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
    m.add_argument("--seed", type=int, default=None, help="override master_seed")
    m.add_argument("--out", default=None, help="output prefix for .csv, .md and .json")
    m.set_defaults(func=cmd_montecarlo)

    v = sub.add_parser("verify", help="re-run a JSON report and compare payloads")
    v.add_argument("report")
    v.add_argument("--jobs", type=int, default=1)
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func: Callable[[argparse.Namespace], int] = args.func
    try:
        return func(args)
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, TireverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
