"""Command-line front end tying the library into a study-planning workflow.

Subcommands follow the order of a pre-study confounding analysis: ``adjust``
and ``augment`` interrogate the causal DAG, ``fit``/``smd`` produce ballpark
effect estimates, ``tip``/``evalue`` run quick sensitivity analyses, and
``simulate`` runs the full simulation sweep.  Exit codes: 0 success, 1
input/usage error, 2 analysis verdict "no observed-only adjustment set
exists" (from ``adjust``).

Every report carries a run manifest (command, sha256 of each input file,
seed, version, timestamp): embedded under ``"manifest"`` with ``--json``,
written next to the output file for ``simulate -o``, and printed to stderr
otherwise.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .adjustment import (
    CausalQuery,
    edge_confounder_report,
    format_set,
    minimal_adjustment_sets,
)
from .dag import parse_dag
from .scm import load_sweep_config, run_sweep
from .sensitivity import (
    EValueInput,
    evalue_curve,
    evalue_curve_csv,
    evalue_ols,
    tip_n_confounders,
    tip_outcome_effect,
    tip_smd,
)
from .stats import StatsError, ols_fit, read_csv, scaled_mean_diff

_WORKFLOW = (
    "study-planning workflow: (1) survey variables, (2) draw the causal DAG, "
    "(3) compute adjustment sets, (4) ballpark the effect estimates, "
    "(5) tipping-point/E-value sensitivity checks, (6) simulation sweep."
)

_EXPLAIN = {
    "adjust": "step 3: lists the covariate sets that block all backdoor paths.",
    "augment": "step 3: stress-tests the adjustment sets against a hypothetical "
               "confounder on each edge.",
    "fit": "step 4: ballpark effect estimates from a regression fit.",
    "smd": "step 4: ballpark confounder-treatment association as a scaled-mean difference.",
    "tip": "step 5: how strong a confounder would have to be to flip the measured effect.",
    "evalue": "step 5: minimum confounder association (risk-ratio scale) that could "
              "explain the effect away.",
    "simulate": "step 6: Monte Carlo sweep of estimate bias under hypothetical confounding.",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; this toolkit reserves 2
    # for the "no observed-only adjustment set" verdict, so remap to 1.
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunManifest:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        self.version = __version__
        self.timestamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")

    def add_input(self, path: str | Path) -> bytes:
        data = Path(path).read_bytes()
        self.inputs[str(path)] = hashlib.sha256(data).hexdigest()
        return data

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "seed": self.seed,
            "version": self.version,
            "timestamp": self.timestamp,
        }

    def print_stderr(self) -> None:
        print(f"# run command={self.command} version={self.version} "
              f"seed={self.seed if self.seed is not None else '-'} "
              f"time={self.timestamp}", file=sys.stderr)
        for path, digest in self.inputs.items():
            print(f"# input {path} sha256={digest}", file=sys.stderr)


def _emit(payload: dict, text: str, manifest: RunManifest, as_json: bool) -> None:
    if as_json:
        print(json.dumps({**payload, "manifest": manifest.to_dict()}, indent=2))
    else:
        print(text, end="" if text.endswith("\n") else "\n")
        manifest.print_stderr()


def _load_dag(args, manifest: RunManifest):
    data = manifest.add_input(args.dag_file)
    dag = parse_dag(data.decode("utf-8"))
    treatment = args.treatment or dag.treatment
    outcome = args.outcome or dag.outcome
    if treatment is None or outcome is None:
        missing = "treatment" if treatment is None else "outcome"
        raise UsageError(
            f"no {missing} given: declare it in the DAG file or pass --{missing}"
        )
    return CausalQuery(dag, treatment, outcome)


def cmd_adjust(args) -> int:
    manifest = RunManifest("adjust")
    query = _load_dag(args, manifest)
    observed = minimal_adjustment_sets(query, observed_only=True)
    with_latents = minimal_adjustment_sets(query, observed_only=False)
    shown = with_latents if args.with_latents else observed
    scope = "latent nodes allowed" if args.with_latents else "observed nodes only"
    lines = [f"minimal adjustment sets for {query.treatment} -> {query.outcome} ({scope}):"]
    lines += [f"  {format_set(s)}" for s in shown] if shown else ["  (none)"]
    if not observed:
        lines.append("no observed-only adjustment set exists")
    payload = {
        "treatment": query.treatment,
        "outcome": query.outcome,
        "observed_sets": [sorted(s) for s in observed],
        "sets_with_latents": [sorted(s) for s in with_latents],
        "exists_observed_only": bool(observed),
    }
    _emit(payload, "\n".join(lines) + "\n", manifest, args.json)
    return 0 if observed else 2


def cmd_augment(args) -> int:
    manifest = RunManifest("augment")
    query = _load_dag(args, manifest)
    report = edge_confounder_report(query)
    text = (
        f"adjustment sets for {query.treatment} -> {query.outcome} after "
        f"confounding each edge:\n" + report.to_text()
    )
    _emit(report.to_json_dict(), text, manifest, args.json)
    return 0


def cmd_tip(args) -> int:
    manifest = RunManifest("tip")

    def need(flag_value, flag, absent=()):
        if flag_value is None:
            raise UsageError(f"--solve {args.solve} requires --{flag}")
        for name in absent:
            if getattr(args, name) is not None:
                raise UsageError(f"--solve {args.solve} conflicts with --{name}")
        return flag_value

    if args.solve == "smd":
        result = tip_smd(args.observed, need(args.effect, "effect", absent=("smd",)))
        sentence = (
            f"an SMD of {result.value:.3f} for the confounder-treatment link would "
            f"suffice to flip the sign of the measured effect ({args.observed:g})"
        )
    elif args.solve == "effect":
        result = tip_outcome_effect(args.observed, need(args.smd, "smd", absent=("effect",)))
        sentence = (
            f"a confounder-outcome effect of {result.value:.3f} would suffice to "
            f"flip the sign of the measured effect ({args.observed:g})"
        )
    else:
        result = tip_n_confounders(
            args.observed, need(args.smd, "smd"), need(args.effect, "effect")
        )
        sentence = (
            f"{result.value:.2f} confounders of the given strength would suffice to "
            f"flip the sign of the measured effect ({args.observed:g}); at least "
            f"{math.ceil(result.value)} whole confounders strictly flip it"
        )
    payload = {"solve": result.kind, "observed": args.observed, "value": result.value}
    if result.kind == "n_confounders_needed":
        payload["whole_confounders"] = math.ceil(result.value)
    _emit(payload, f"{result.value!r}\n{sentence}\n", manifest, args.json)
    return 0


def _parse_delta_range(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError("--delta-range takes LOW:HIGH:STEP")
    try:
        low, high, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"bad --delta-range {spec!r}") from None
    if step <= 0 or high < low:
        raise UsageError("--delta-range needs LOW <= HIGH and STEP > 0")
    count = int(round((high - low) / step)) + 1
    return [float(d) for d in np.linspace(low, high, count)]


def cmd_evalue(args) -> int:
    manifest = RunManifest("evalue")
    label = "estimate"
    if args.fit is not None:
        if args.estimate is not None or args.sigma is not None or args.se is not None:
            raise UsageError("--fit conflicts with --estimate/--sigma/--se")
        if args.outcome is None or args.treatment is None:
            raise UsageError("--fit requires --outcome and --treatment")
        data = read_csv_manifest(args.fit, manifest)
        covariates = _split(args.covariates)
        fit = ols_fit(data, args.outcome, [args.treatment, *covariates])
        estimate = fit.coefficients[args.treatment]
        std_error = fit.std_errors[args.treatment]
        sigma = fit.sigma
        label = args.treatment
    else:
        if args.estimate is None or args.sigma is None:
            raise UsageError("pass --estimate and --sigma, or --fit with column names")
        estimate, sigma = args.estimate, args.sigma
        std_error = args.se if args.se is not None else 0.0
    if (args.delta is None) == (args.delta_range is None):
        raise UsageError("pass exactly one of --delta or --delta-range")

    if args.delta is not None:
        result = evalue_ols(
            EValueInput(estimate, std_error, sigma, args.delta),
            use_ci=args.se is not None or args.fit is not None,
        )
        payload = {
            "estimate": estimate,
            "sigma": sigma,
            "delta": args.delta,
            "evalue": result.point,
            "ci_evalue": result.ci_bound,
        }
        text = f"E-value: {result.point:.3f}\n"
        if result.ci_bound is not None:
            text += f"E-value at the 95% limit closer to the null: {result.ci_bound:.3f}\n"
        _emit(payload, text, manifest, args.json)
    else:
        deltas = _parse_delta_range(args.delta_range)
        rows = evalue_curve([(label, estimate, std_error, sigma)], deltas)
        payload = {
            "estimate": estimate,
            "sigma": sigma,
            "curve": [{"label": r.label, "delta": r.delta, "evalue": r.evalue} for r in rows],
        }
        _emit(payload, evalue_curve_csv(rows), manifest, args.json)
    return 0


def read_csv_manifest(path: str, manifest: RunManifest):
    manifest.add_input(path)
    return read_csv(path)


def cmd_simulate(args) -> int:
    manifest = RunManifest("simulate")
    manifest.add_input(args.config)
    config = load_sweep_config(args.config)
    manifest.seed = config.seed
    result = run_sweep(config)
    csv_text = result.to_csv()
    if args.output is not None:
        out = Path(args.output)
        out.write_text(csv_text)
        Path(f"{out}.manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")
    else:
        print(csv_text, end="")
        manifest.print_stderr()
    if all(cell.failed for cell in result.cells):
        print("error: every sweep cell failed to produce estimates", file=sys.stderr)
        return 1
    return 0


def cmd_fit(args) -> int:
    manifest = RunManifest("fit")
    data = read_csv_manifest(args.csv_file, manifest)
    fit = ols_fit(data, args.outcome, _split(args.predictors))
    lines = [f"n = {fit.n}", f"intercept = {fit.intercept:.6g}"]
    for name in fit.coefficients:
        lines.append(
            f"{name}: coef {fit.coefficients[name]:.6g} (se {fit.std_errors[name]:.3g})"
        )
    lines.append(f"sigma = {fit.sigma:.6g}")
    _emit(fit.to_json_dict(), "\n".join(lines) + "\n", manifest, args.json)
    return 0


def cmd_smd(args) -> int:
    manifest = RunManifest("smd")
    manifest.add_input(args.csv_file)
    values, labels = _read_value_group_csv(args.csv_file, args.value, args.group)
    diff = scaled_mean_diff(values, labels, args.treat, args.ref)
    payload = {
        "value_column": args.value,
        "group_column": args.group,
        "treat": args.treat,
        "reference": args.ref,
        "smd": diff,
    }
    _emit(payload, f"SMD({args.treat} - {args.ref}) = {diff:.4f}\n", manifest, args.json)
    return 0


def _read_value_group_csv(path: str, value_col: str, group_col: str):
    # The group column holds arbitrary tags, so this cannot go through the
    # all-numeric Dataset loader.
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise StatsError("empty CSV: missing header row") from None
        for name in (value_col, group_col):
            if name not in header:
                raise StatsError(f"unknown column {name!r}")
        vi, gi = header.index(value_col), header.index(group_col)
        values, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                value = float(row[vi])
            except (ValueError, IndexError):
                raise StatsError(f"line {lineno}: bad value in column {value_col!r}") from None
            if not math.isfinite(value):
                raise StatsError(f"line {lineno}: non-finite value in {value_col!r}")
            values.append(value)
            labels.append(row[gi])
    return values, labels


def _split(raw: str | None) -> list[str]:
    if not raw:
        return []
    return [part.strip() for part in raw.split(",") if part.strip()]


def build_parser() -> _Parser:
    parser = _Parser(prog="ovbkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ovbkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--explain", action="store_true",
                       help="note which workflow step this command serves")

    p = sub.add_parser("adjust", help="minimal backdoor adjustment sets")
    p.add_argument("dag_file")
    p.add_argument("--treatment")
    p.add_argument("--outcome")
    p.add_argument("--with-latents", action="store_true",
                   help="allow latent nodes in the displayed sets")
    common(p)
    p.set_defaults(run=cmd_adjust)

    p = sub.add_parser("augment", help="per-edge hypothetical-confounder analysis")
    p.add_argument("dag_file")
    p.add_argument("--treatment")
    p.add_argument("--outcome")
    common(p)
    p.set_defaults(run=cmd_augment)

    p = sub.add_parser("fit", help="ordinary least squares on a CSV")
    p.add_argument("csv_file")
    p.add_argument("--outcome", required=True)
    p.add_argument("--predictors", required=True, help="comma-separated column names")
    common(p)
    p.set_defaults(run=cmd_fit)

    p = sub.add_parser("smd", help="scaled-mean difference between two groups")
    p.add_argument("csv_file")
    p.add_argument("--value", required=True, help="numeric column")
    p.add_argument("--group", required=True, help="group-tag column")
    p.add_argument("--treat", required=True)
    p.add_argument("--ref", required=True)
    common(p)
    p.set_defaults(run=cmd_smd)

    p = sub.add_parser("tip", help="tipping-point analysis of a measured effect")
    p.add_argument("--observed", type=float, required=True,
                   help="measured treatment-outcome effect")
    p.add_argument("--solve", choices=("smd", "effect", "n"), required=True)
    p.add_argument("--smd", type=float, help="confounder-treatment SMD")
    p.add_argument("--effect", type=float, help="confounder-outcome effect")
    common(p)
    p.set_defaults(run=cmd_tip)

    p = sub.add_parser("evalue", help="E-value of a fitted effect")
    p.add_argument("--estimate", type=float)
    p.add_argument("--sigma", type=float, help="residual standard deviation")
    p.add_argument("--se", type=float, help="standard error (adds a CI E-value)")
    p.add_argument("--fit", metavar="CSV", help="derive estimate/se/sigma from a fit")
    p.add_argument("--outcome", help="outcome column for --fit")
    p.add_argument("--treatment", help="treatment column for --fit")
    p.add_argument("--covariates", help="comma-separated extra predictors for --fit")
    p.add_argument("--delta", type=float, help="treatment change of interest")
    p.add_argument("--delta-range", metavar="LOW:HIGH:STEP",
                   help="sweep delta and emit a CSV curve")
    common(p)
    p.set_defaults(run=cmd_evalue)

    p = sub.add_parser("simulate", help="run a simulation sweep from a config file")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="write CSV here (plus <output>.manifest.json)")
    common(p)
    p.set_defaults(run=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "explain", False):
            print(f"{_WORKFLOW}\n`{args.command}` serves {_EXPLAIN[args.command]}",
                  file=sys.stderr)
        return args.run(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
