"""Structural causal models: mechanisms, seeded sampling, and sensitivity sweeps.

Sampling is bit-reproducible: the random source is numpy's counter-based
Philox generator, normal variates are produced by inverse-CDF transform of
uniforms (one uniform per variate), and nodes are always sampled in the DAG's
topological order.  Sweeps derive one seed per repetition from the tuple
(config seed, grid-point index, sample-size index, repetition index), so the
result never depends on scheduling or thread count.
"""

from __future__ import annotations

import io
import itertools
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Union

import numpy as np
from scipy.special import ndtri

from .dag import CausalDag, topological_order
from .stats import (
    Dataset,
    Interval,
    RankDeficiencyError,
    hpdi,
    solve_normal_equations,
)

__all__ = [
    "BernoulliExogenous",
    "LinearGaussian",
    "Mechanism",
    "ScmError",
    "ScmSpec",
    "ScmTemplate",
    "SweepCell",
    "SweepConfig",
    "SweepResult",
    "added_cause_scm",
    "build_scm",
    "confounded_scm",
    "direct_effect_scm",
    "expected_treatment_estimate",
    "load_sweep_config",
    "parse_sweep_config",
    "run_sweep",
    "sample",
    "team_effort_template",
]

SeedLike = Union[int, np.random.SeedSequence]

_MAX_DRAW_ATTEMPTS = 4  # one draw plus up to three redraws per repetition


class ScmError(ValueError):
    """Invalid structural model, sweep configuration, or sampling request."""


@dataclass(frozen=True)
class BernoulliExogenous:
    """A parentless 0/1 node taking value 1 with probability ``p``."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ScmError(f"Bernoulli probability must be in [0, 1], got {self.p}")


@dataclass(frozen=True, eq=False)
class LinearGaussian:
    """A Gaussian node whose mean is linear in its parents.

    ``weights`` maps each parent to its edge coefficient.  Inside templates a
    weight may instead be a string naming a free parameter.
    """

    intercept: float
    weights: Mapping[str, float | str]
    sd: float

    def __post_init__(self):
        object.__setattr__(self, "weights", dict(self.weights))
        if not self.sd > 0:
            raise ScmError(f"standard deviation must be positive, got {self.sd}")


Mechanism = Union[BernoulliExogenous, LinearGaussian]


@dataclass(frozen=True, eq=False)
class ScmSpec:
    """A DAG plus one concrete mechanism per node, sampled in ``order``."""

    dag: CausalDag
    mechanisms: Mapping[str, Mechanism]
    order: tuple[str, ...]


def build_scm(dag: CausalDag, mechanisms: Mapping[str, Mechanism]) -> ScmSpec:
    """Validate mechanisms against the DAG and fix the sampling order."""
    mechanisms = dict(mechanisms)
    missing = dag.nodes - set(mechanisms)
    if missing:
        raise ScmError(f"missing mechanism for node(s): {sorted(missing)}")
    extra = set(mechanisms) - dag.nodes
    if extra:
        raise ScmError(f"mechanism for undeclared node(s): {sorted(extra)}")
    for node, mech in mechanisms.items():
        parents = set(dag.parents(node))
        if isinstance(mech, BernoulliExogenous):
            if parents:
                raise ScmError(f"Bernoulli node {node!r} cannot have parents")
            continue
        if set(mech.weights) != parents:
            raise ScmError(
                f"weights for {node!r} must cover exactly its parents "
                f"{sorted(parents)}, got {sorted(mech.weights)}"
            )
        for parent, weight in mech.weights.items():
            if isinstance(weight, str):
                raise ScmError(
                    f"unbound parameter {weight!r} on edge {parent} -> {node}"
                )
    return ScmSpec(dag, mechanisms, tuple(topological_order(dag)))


def _rng_from(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        sequence = seed
    else:
        if seed < 0:
            raise ScmError("seed must be a non-negative integer")
        sequence = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(sequence))


def _standard_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    # Inverse-CDF transform: exactly one uniform per variate, which keeps the
    # Philox counter layout independent of the values drawn.
    return ndtri(np.maximum(rng.random(n), 1e-300))


def _sample_columns(spec: ScmSpec, n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    columns: dict[str, np.ndarray] = {}
    for node in spec.order:
        mech = spec.mechanisms[node]
        if isinstance(mech, BernoulliExogenous):
            columns[node] = (rng.random(n) < mech.p).astype(float)
        else:
            mean = np.full(n, float(mech.intercept))
            for parent in sorted(mech.weights):
                mean += mech.weights[parent] * columns[parent]
            columns[node] = mean + mech.sd * _standard_normal(rng, n)
    return columns


def sample(spec: ScmSpec, n: int, seed: SeedLike) -> Dataset:
    """Draw ``n`` joint samples; identical (spec, n, seed) give identical bytes.

    The returned dataset has one column per node, latent nodes included, in
    the model's topological order.
    """
    if n < 1:
        raise ScmError("sample count must be at least 1")
    columns = _sample_columns(spec, n, _rng_from(seed))
    return Dataset(spec.order, np.column_stack([columns[c] for c in spec.order]))


# --- templates ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScmTemplate:
    """An SCM whose edge weights may be left as named free parameters."""

    dag: CausalDag
    mechanisms: Mapping[str, Mechanism]

    @property
    def parameters(self) -> tuple[str, ...]:
        names = {
            w
            for mech in self.mechanisms.values()
            if isinstance(mech, LinearGaussian)
            for w in mech.weights.values()
            if isinstance(w, str)
        }
        return tuple(sorted(names))

    def bind(self, values: Mapping[str, float]) -> ScmSpec:
        """Substitute parameter values and validate the concrete model."""
        free = set(self.parameters)
        unknown = set(values) - free
        if unknown:
            raise ScmError(f"unknown parameter(s): {sorted(unknown)}")
        missing = free - set(values)
        if missing:
            raise ScmError(f"unbound parameter(s): {sorted(missing)}")
        concrete: dict[str, Mechanism] = {}
        for node, mech in self.mechanisms.items():
            if isinstance(mech, LinearGaussian):
                weights = {
                    parent: float(values[w]) if isinstance(w, str) else w
                    for parent, w in mech.weights.items()
                }
                mech = LinearGaussian(mech.intercept, weights, mech.sd)
            concrete[node] = mech
        return build_scm(self.dag, concrete)


def direct_effect_scm(x_y: float = 0.4) -> ScmSpec:
    """X -> Y with standard-normal X and unit measurement noise on Y."""
    dag = CausalDag.from_edges([("X", "Y")])
    return build_scm(dag, {
        "X": LinearGaussian(0.0, {}, 1.0),
        "Y": LinearGaussian(0.0, {"X": x_y}, 1.0),
    })


def added_cause_scm(x_y: float = 0.4, z_y: float = 0.7) -> ScmSpec:
    """X -> Y <- Z with independent standard-normal causes."""
    dag = CausalDag.from_edges([("X", "Y"), ("Z", "Y")])
    return build_scm(dag, {
        "X": LinearGaussian(0.0, {}, 1.0),
        "Z": LinearGaussian(0.0, {}, 1.0),
        "Y": LinearGaussian(0.0, {"X": x_y, "Z": z_y}, 1.0),
    })


def confounded_scm(x_y: float = 0.4, z_y: float = 0.7, z_x: float = 0.2) -> ScmSpec:
    """X -> Y with Z a common cause of both (the confounding triangle)."""
    dag = CausalDag.from_edges([("X", "Y"), ("Z", "X"), ("Z", "Y")])
    return build_scm(dag, {
        "Z": LinearGaussian(0.0, {}, 1.0),
        "X": LinearGaussian(0.0, {"Z": z_x}, 1.0),
        "Y": LinearGaussian(0.0, {"X": x_y, "Z": z_y}, 1.0),
    })


def team_effort_template() -> ScmTemplate:
    """The bundled project-effort model: effort E driven by team size T,
    context variables B, K, O, S, and an unmeasured confounder Z of T and E.

    Binary context variables are fair Bernoulli draws; continuous nodes are
    unit-variance Gaussians around a linear mean.  Every edge weight is a free
    parameter named ``<from>_<to>`` in lowercase (for example ``s_t`` for the
    S -> T edge; ``z_e`` and ``z_t`` belong to the unmeasured confounder).
    """
    dag = CausalDag.from_edges(
        [
            ("B", "S"), ("K", "S"),
            ("O", "T"), ("S", "T"), ("Z", "T"),
            ("B", "E"), ("K", "E"), ("O", "E"), ("S", "E"), ("T", "E"), ("Z", "E"),
        ],
        latent=["Z"],
        treatment="T",
        outcome="E",
    )
    mechanisms: dict[str, Mechanism] = {
        "B": BernoulliExogenous(0.5),
        "K": BernoulliExogenous(0.5),
        "O": BernoulliExogenous(0.5),
        "Z": LinearGaussian(0.0, {}, 1.0),
        "S": LinearGaussian(0.0, {"B": "b_s", "K": "k_s"}, 1.0),
        "T": LinearGaussian(0.0, {"O": "o_t", "S": "s_t", "Z": "z_t"}, 1.0),
        "E": LinearGaussian(
            0.0,
            {"B": "b_e", "K": "k_e", "O": "o_e", "S": "s_e", "T": "t_e", "Z": "z_e"},
            1.0,
        ),
    }
    return ScmTemplate(dag, mechanisms)


# --- sweeps ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SweepConfig:
    """A parameter sweep: grid values for some template parameters, fixed
    values for the rest, sample sizes, repetitions, and the regression run on
    each draw.  The first predictor is the treatment whose coefficient is
    tracked.  Grid order matters: per-repetition seeds are derived from the
    positional indices of grid point and sample size."""

    template: ScmTemplate
    grid: Mapping[str, tuple[float, ...]]
    fixed: Mapping[str, float]
    sample_sizes: tuple[int, ...]
    repetitions: int
    outcome: str
    predictors: tuple[str, ...]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "grid", {k: tuple(v) for k, v in self.grid.items()})
        object.__setattr__(self, "fixed", dict(self.fixed))
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "predictors", tuple(self.predictors))
        if not self.grid or any(not vals for vals in self.grid.values()):
            raise ScmError("grid must name at least one parameter with values")
        if self.repetitions < 1:
            raise ScmError("repetitions must be at least 1")
        if not self.sample_sizes or any(n < 1 for n in self.sample_sizes):
            raise ScmError("sample sizes must be positive")
        if self.seed < 0:
            raise ScmError("seed must be a non-negative integer")
        declared = set(self.grid) | set(self.fixed)
        free = set(self.template.parameters)
        if declared != free:
            raise ScmError(
                f"grid plus fixed values must cover the template parameters "
                f"{sorted(free)} exactly, got {sorted(declared)}"
            )
        overlap = set(self.grid) & set(self.fixed)
        if overlap:
            raise ScmError(f"parameter(s) both fixed and on the grid: {sorted(overlap)}")
        dag = self.template.dag
        for name in (self.outcome, *self.predictors):
            dag.require(name)
        bad = set(self.predictors) & dag.latent
        if bad:
            raise ScmError(f"latent node(s) cannot be regression predictors: {sorted(bad)}")
        if self.outcome in self.predictors or not self.predictors:
            raise ScmError("predictors must be nonempty and exclude the outcome")

    @property
    def grid_names(self) -> tuple[str, ...]:
        return tuple(self.grid)

    def grid_points(self) -> list[tuple[float, ...]]:
        return list(itertools.product(*self.grid.values()))


@dataclass(frozen=True, eq=False)
class SweepCell:
    """Summary of one (grid point, sample size) combination.

    ``mean``/``hpdi50``/``hpdi95`` are None when the cell failed, i.e. more
    than 10% of its repetitions could not produce an estimate."""

    params: Mapping[str, float]
    n: int
    mean: float | None
    hpdi50: Interval | None
    hpdi95: Interval | None
    failures: int

    @property
    def failed(self) -> bool:
        return self.mean is None


@dataclass(frozen=True, eq=False)
class SweepResult:
    grid_names: tuple[str, ...]
    sample_sizes: tuple[int, ...]
    repetitions: int
    cells: tuple[SweepCell, ...]

    def cell(self, n: int, **params: float) -> SweepCell:
        for cell in self.cells:
            if cell.n == n and all(cell.params[k] == v for k, v in params.items()):
                return cell
        raise KeyError(f"no cell with n={n} and {params}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join([*self.grid_names, "n", "mean", "l50", "u50", "l95", "u95", "failures"]))
        buf.write("\n")
        for cell in self.cells:
            fields = [repr(cell.params[name]) for name in self.grid_names]
            fields.append(str(cell.n))
            if cell.failed:
                fields += [""] * 5
            else:
                fields += [
                    repr(cell.mean),
                    repr(cell.hpdi50.low), repr(cell.hpdi50.high),
                    repr(cell.hpdi95.low), repr(cell.hpdi95.high),
                ]
            fields.append(str(cell.failures))
            buf.write(",".join(fields))
            buf.write("\n")
        return buf.getvalue()


def _treatment_estimate(
    spec: ScmSpec,
    n: int,
    outcome: str,
    predictors: tuple[str, ...],
    entropy: tuple[int, int, int, int],
) -> float | None:
    """One repetition: sample, regress, return the first predictor's coefficient.

    Rank-deficient draws are re-drawn with fresh derived seeds and count as a
    failure (None) after three retries.  When n is smaller than the parameter
    count the exact solve is impossible, so the minimum-norm least-squares
    solution is reported instead.
    """
    p = len(predictors) + 1
    for attempt in range(_MAX_DRAW_ATTEMPTS):
        rng = _rng_from(np.random.SeedSequence((*entropy, attempt)))
        columns = _sample_columns(spec, n, rng)
        design = np.empty((n, p))
        design[:, 0] = 1.0
        for i, name in enumerate(predictors, start=1):
            design[:, i] = columns[name]
        y = columns[outcome]
        if n < p:
            coef = np.linalg.lstsq(design, y, rcond=None)[0]
            return float(coef[1])
        try:
            coef, _ = solve_normal_equations(design, y)
        except RankDeficiencyError:
            continue
        return float(coef[1])
    return None


def run_sweep(config: SweepConfig, threads: int | None = None) -> SweepResult:
    """Run the full simulation sweep described by ``config``.

    For every grid point and sample size the model is sampled and refit
    ``config.repetitions`` times; the tracked coefficient's mean and its 50%
    and 95% HPD intervals are summarized per cell.  Results are bit-identical
    for a given config regardless of ``threads``.
    """
    if threads is None:
        threads = _threads_from_env()
    points = config.grid_points()
    specs = [
        config.template.bind({**config.fixed, **dict(zip(config.grid_names, point))})
        for point in points
    ]
    tasks = [
        (gi, si, n)
        for gi in range(len(points))
        for si, n in enumerate(config.sample_sizes)
    ]

    def run_cell(task: tuple[int, int, int]) -> SweepCell:
        gi, si, n = task
        estimates = []
        failures = 0
        for ri in range(config.repetitions):
            est = _treatment_estimate(
                specs[gi], n, config.outcome, config.predictors,
                (config.seed, gi, si, ri),
            )
            if est is None:
                failures += 1
            else:
                estimates.append(est)
        params = dict(zip(config.grid_names, points[gi]))
        if failures > 0.1 * config.repetitions:
            return SweepCell(params, n, None, None, None, failures)
        return SweepCell(
            params, n,
            float(np.mean(estimates)),
            hpdi(estimates, 0.50),
            hpdi(estimates, 0.95),
            failures,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = tuple(pool.map(run_cell, tasks))
    else:
        cells = tuple(run_cell(task) for task in tasks)
    return SweepResult(config.grid_names, config.sample_sizes, config.repetitions, cells)


def _threads_from_env() -> int:
    raw = os.environ.get("OVBKIT_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError:
        raise ScmError(f"OVBKIT_THREADS must be an integer, got {raw!r}") from None
    return max(1, threads)


def expected_treatment_estimate(t_e: float, z_e: float, z_t: float) -> float:
    """Large-sample value of the tracked coefficient in the effort model.

    Partialling the included covariates out of T leaves z_t * Z plus unit
    noise, so omitting Z biases the coefficient by
    z_e * z_t / (1 + z_t**2); the other edge weights cancel because Z is
    independent of every included covariate.
    """
    return t_e + z_e * z_t / (1.0 + z_t**2)


# --- config files ------------------------------------------------------------

_KEY_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")


def parse_sweep_config(text: str, template: ScmTemplate | None = None) -> SweepConfig:
    """Parse the key-value sweep config format.

    One ``key = value`` pair per line, ``#`` comments.  Keys: ``grid.<param>``
    (comma-separated values swept over), ``param.<param>`` (fixed value),
    ``n`` (comma-separated sample sizes), ``repetitions``, ``seed``,
    ``outcome``, and ``predictors`` (comma-separated; first is the treatment).
    Without an explicit template the bundled team-effort model is used.
    """
    if template is None:
        template = team_effort_template()
    grid: dict[str, tuple[float, ...]] = {}
    fixed: dict[str, float] = {}
    scalars: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key or not _KEY_RE.match(key):
            raise ScmError(f"config line {lineno}: expected 'key = value'")
        if key.startswith("grid."):
            grid[_dedup(key, grid, lineno)] = _floats(value, lineno)
        elif key.startswith("param."):
            fixed[_dedup(key, fixed, lineno)] = _float(value, lineno)
        else:
            if key in scalars:
                raise ScmError(f"config line {lineno}: duplicate key {key!r}")
            scalars[key] = value
    known = {"n", "repetitions", "seed", "outcome", "predictors"}
    unknown = set(scalars) - known
    if unknown:
        raise ScmError(f"unknown config key(s): {sorted(unknown)}")
    missing = known - set(scalars)
    if missing:
        raise ScmError(f"missing config key(s): {sorted(missing)}")
    try:
        sizes = tuple(int(v) for v in scalars["n"].split(","))
        repetitions = int(scalars["repetitions"])
        seed = int(scalars["seed"])
    except ValueError as exc:
        raise ScmError(f"bad integer in config: {exc}") from None
    return SweepConfig(
        template=template,
        grid=grid,
        fixed=fixed,
        sample_sizes=sizes,
        repetitions=repetitions,
        outcome=scalars["outcome"],
        predictors=tuple(p.strip() for p in scalars["predictors"].split(",")),
        seed=seed,
    )


def _dedup(key: str, seen: Mapping[str, object], lineno: int) -> str:
    name = key.split(".", 1)[1]
    if name in seen:
        raise ScmError(f"config line {lineno}: duplicate key {key!r}")
    return name


def _float(value: str, lineno: int) -> float:
    try:
        out = float(value)
    except ValueError:
        raise ScmError(f"config line {lineno}: not a number: {value!r}") from None
    if not math.isfinite(out):
        raise ScmError(f"config line {lineno}: values must be finite")
    return out


def _floats(value: str, lineno: int) -> tuple[float, ...]:
    parts = [p.strip() for p in value.split(",") if p.strip()]
    if not parts:
        raise ScmError(f"config line {lineno}: empty value list")
    return tuple(_float(p, lineno) for p in parts)


def load_sweep_config(path: str | Path, template: ScmTemplate | None = None) -> SweepConfig:
    return parse_sweep_config(Path(path).read_text(), template)
