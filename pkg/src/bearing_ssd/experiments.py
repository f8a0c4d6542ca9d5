"""Experiment suites: sample-size table, classifier curves and sweeps.

Every suite is a pure function of an :class:`ExperimentConfig`.  CSV output
is byte-stable for a fixed config; wall-clock timestamps live only in the
``metadata.json`` sidecar written by :func:`run_all`.

Suites and outputs
------------------
``table1``      table1.csv            moe,n_total,n_per_class,achieved_moe,converged
``fig2``        accuracy_curve.csv    n_per_class,seed,accuracy,mae,rmse
``fig3``        mae_curve.csv         n_per_class,seed,mae
``fig4``        rmse_curve.csv        n_per_class,seed,rmse
``fig5``        moe_sweep.csv         confidence,moe,n
``fig6``        confidence_sweep.csv  confidence,moe,n

Curve sweeps draw ``n_per_class`` signals per class with
``sample_random(..., seed=master_seed + r)`` for replicate ``r``; since the
draw is a prefix of one permutation per class, the samples of one replicate
are nested as ``n_per_class`` shrinks.  Cross-validation uses
``k = min(kfold, n_per_class)`` folds.
"""

from __future__ import annotations

import datetime
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from ._io import atomic_write, fmt_float
from .bayes_ssd import (PriorSpec, SampleSizeQuery, iterative_sample_size,
                        required_sample_size_closed_form)
from .dtree import KFold, TreeParams, evaluate
from .features import ALL_FEATURES, FeatureId, extract_features
from .signals import GeneratorConfig, generate_population, load_signals, sample_random
from .svgplot import PlotSpec, Series, write_svg

__all__ = [
    "ExperimentConfig",
    "ExperimentRow",
    "SCHEMAS",
    "SUITES",
    "TABLE1_MOES",
    "FIG6_MOES",
    "CONFIDENCE_LEVELS",
    "load_population",
    "population_features",
    "run_table1",
    "run_curves",
    "run_accuracy_curve",
    "run_error_curves",
    "run_moe_sweep",
    "run_confidence_sweep",
    "emit_csv",
    "read_csv",
    "emit_svg",
    "run_suite",
    "run_all",
]

TABLE1_MOES = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 2.0, 2.3, 2.7)
FIG6_MOES = (0.78, 1.56, 2.34)
CONFIDENCE_LEVELS = (0.90, 0.95, 0.99, 0.995, 0.998)

SCHEMAS = {
    "table1": ("moe", "n_total", "n_per_class", "achieved_moe", "converged"),
    "accuracy_curve": ("n_per_class", "seed", "accuracy", "mae", "rmse"),
    "mae_curve": ("n_per_class", "seed", "mae"),
    "rmse_curve": ("n_per_class", "seed", "rmse"),
    "moe_sweep": ("confidence", "moe", "n"),
    "confidence_sweep": ("confidence", "moe", "n"),
}

SUITES = ("table1", "fig2", "fig3", "fig4", "fig5", "fig6", "all")


@dataclass(frozen=True)
class ExperimentConfig:
    """Inputs shared by every suite.

    ``population`` is either a :class:`GeneratorConfig` or the path of a
    signal CSV.
    """

    population: object = field(default_factory=GeneratorConfig)
    master_seed: int = 42
    confidence: float = 0.95
    confidence_levels: tuple = CONFIDENCE_LEVELS
    moes: tuple = TABLE1_MOES
    fig6_moes: tuple = FIG6_MOES
    sigma_prime: float = 19.9251
    mu_prime: float = 7.8093
    max_per_class: int = 100
    step: int = 5
    min_per_class: int = 5
    replicates: int = 20
    kfold: int = 10
    redraws: int = 10
    max_iter: int = 100
    all_features: bool = False
    tree: TreeParams = field(default_factory=TreeParams)

    def __post_init__(self):
        if not (self.confidence_levels and self.moes and self.fig6_moes):
            raise ValueError("confidence and MOE lists must be nonempty")
        if self.step < 1:
            raise ValueError("step must be >= 1")
        if not 1 <= self.min_per_class <= self.max_per_class:
            raise ValueError("need 1 <= min_per_class <= max_per_class")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.kfold < 2:
            raise ValueError("kfold must be >= 2")

    @property
    def per_class_grid(self):
        return tuple(range(self.max_per_class, self.min_per_class - 1, -self.step))

    def describe(self):
        d = {k: v for k, v in asdict(self).items() if k not in ("population", "tree")}
        pop = self.population
        d["population"] = os.fspath(pop) if isinstance(pop, (str, os.PathLike)) else {
            "seed": pop.seed, "signals_per_class": pop.signals_per_class, "length": pop.length}
        d["tree"] = {"min_leaf": self.tree.min_leaf, "max_depth": self.tree.max_depth,
                     "criterion": self.tree.criterion.value}
        return d


@dataclass(frozen=True)
class ExperimentRow:
    experiment: str
    values: dict

    def cells(self):
        return [_cell(self.values[c]) for c in SCHEMAS[self.experiment]]


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt_float(v)


def _parse_cell(text):
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        return float(text)


# -- data -------------------------------------------------------------------

def load_population(config):
    pop = config.population
    if isinstance(pop, GeneratorConfig):
        return generate_population(pop)
    return load_signals(pop)


def population_features(config, signals=None):
    signals = load_population(config) if signals is None else signals
    active = ALL_FEATURES if config.all_features else (FeatureId.KURTOSIS,)
    return extract_features(signals, active)


def _kurtosis_only(data):
    return data if data.features == (FeatureId.KURTOSIS,) else data.select([FeatureId.KURTOSIS])


def _prior(config, N):
    return PriorSpec(config.mu_prime, config.sigma_prime, N)


# -- suites -----------------------------------------------------------------

def run_table1(config, data=None, seed=None):
    """Iterative sample size at every MOE of ``config.moes``."""
    data = _kurtosis_only(population_features(config) if data is None else data)
    seed = config.master_seed if seed is None else seed
    prior = _prior(config, len(data))
    rows = []
    for moe in config.moes:
        q = SampleSizeQuery(config.confidence, moe, prior)
        r = iterative_sample_size(data, q, seed=seed, max_iter=config.max_iter,
                                  redraws=config.redraws)
        rows.append(ExperimentRow("table1", {"moe": float(moe), "n_total": r.n_total,
                                             "n_per_class": r.n_per_class,
                                             "achieved_moe": r.achieved_moe,
                                             "converged": r.converged}))
    return rows


def _signal_view(signals, data):
    """Map a sampled SignalSet back to the rows of the feature table."""
    pos = {sid: i for i, sid in enumerate(data.ids)}
    return data.subset([pos[sid] for sid in signals.ids])


def run_curves(config, signals=None, data=None):
    """Per-replicate accuracy, MAE and RMSE over the per-class grid."""
    signals = load_population(config) if signals is None else signals
    data = population_features(config, signals) if data is None else data
    rows = []
    for n in config.per_class_grid:
        for r in range(config.replicates):
            seed = config.master_seed + r
            sub = _signal_view(sample_random(signals, n, seed), data)
            rep = evaluate(sub, config.tree, KFold(min(config.kfold, n), seed))
            rows.append(ExperimentRow("accuracy_curve", {
                "n_per_class": n, "seed": seed, "accuracy": rep.accuracy_percent,
                "mae": rep.mean_absolute_error, "rmse": rep.root_mean_square_error}))
    return rows


def run_accuracy_curve(config, curves=None):
    return list(curves) if curves is not None else run_curves(config)


def run_error_curves(config, curves=None):
    """``(mae_rows, rmse_rows)`` derived from the shared curve sweep."""
    curves = run_curves(config) if curves is None else curves
    mae = [ExperimentRow("mae_curve", {k: r.values[k] for k in SCHEMAS["mae_curve"]})
           for r in curves]
    rmse = [ExperimentRow("rmse_curve", {k: r.values[k] for k in SCHEMAS["rmse_curve"]})
            for r in curves]
    return mae, rmse


def _sweep_sigma(config, data):
    return float(np.std(_kurtosis_only(data).values[:, 0], ddof=1))


def run_moe_sweep(config, data=None):
    """Closed-form ``n`` over the MOE grid at each confidence level.

    ``sigma_s`` is the population standard deviation of the kurtosis feature.
    """
    data = population_features(config) if data is None else data
    prior, sigma = _prior(config, len(data)), _sweep_sigma(config, data)
    return [ExperimentRow("moe_sweep", {"confidence": float(c), "moe": float(m),
                                        "n": required_sample_size_closed_form(
                                            SampleSizeQuery(c, m, prior, sigma))})
            for c in config.confidence_levels for m in config.moes]


def run_confidence_sweep(config, data=None):
    data = population_features(config) if data is None else data
    prior, sigma = _prior(config, len(data)), _sweep_sigma(config, data)
    return [ExperimentRow("confidence_sweep", {"confidence": float(c), "moe": float(m),
                                               "n": required_sample_size_closed_form(
                                                   SampleSizeQuery(c, m, prior, sigma))})
            for m in config.fig6_moes for c in config.confidence_levels]


# -- output -----------------------------------------------------------------

def emit_csv(rows, path, experiment=None):
    """Write rows under their schema; ``experiment`` names it for empty input."""
    rows = list(rows)
    name = experiment or (rows[0].experiment if rows else None)
    if name not in SCHEMAS:
        raise ValueError(f"unknown experiment {name!r}")
    with atomic_write(path) as fh:
        fh.write(",".join(SCHEMAS[name]) + "\n")
        for r in rows:
            if r.experiment != name:
                raise ValueError("rows from different experiments")
            fh.write(",".join(r.cells()) + "\n")


def read_csv(path, experiment):
    with open(path, encoding="utf-8") as fh:
        header = tuple(fh.readline().rstrip("\n").split(","))
        if header != SCHEMAS[experiment]:
            raise ValueError(f"{path}: header {header} does not match {experiment}")
        return [ExperimentRow(experiment, dict(zip(header, map(_parse_cell, line.rstrip("\n").split(",")))))
                for line in fh if line.strip()]


def _curve_stats(rows, key):
    by_n = {}
    for r in rows:
        by_n.setdefault(r.values["n_per_class"], []).append(r.values[key])
    ns = sorted(by_n)
    mean = [float(np.mean(by_n[n])) for n in ns]
    std = [float(np.std(by_n[n], ddof=1)) if len(by_n[n]) > 1 else 0.0 for n in ns]
    return ns, mean, std


def plot_spec(name, rows):
    """Chart definition for figure ``name`` (fig2 .. fig6)."""
    if name in ("fig2", "fig3", "fig4"):
        key, ylabel, title = {"fig2": ("accuracy", "Classification accuracy (%)",
                                       "Accuracy vs sample size per class"),
                              "fig3": ("mae", "Mean absolute error",
                                       "Mean absolute error vs sample size per class"),
                              "fig4": ("rmse", "Root mean square error",
                                       "RMSE vs sample size per class")}[name]
        ns, mean, std = _curve_stats(rows, key)
        return PlotSpec(title, "Samples per class", ylabel,
                        (Series("mean, std bars", tuple(ns), tuple(mean), tuple(std)),))
    if name == "fig5":
        groups = {}
        for r in rows:
            groups.setdefault(r.values["confidence"], []).append((r.values["moe"], r.values["n"]))
        series = tuple(Series(f"{100 * c:g}% confidence", *map(tuple, zip(*sorted(pts))))
                       for c, pts in groups.items())
        return PlotSpec("Sample size vs margin of error", "Margin of error", "Total sample size",
                        series)
    if name == "fig6":
        groups = {}
        for r in rows:
            groups.setdefault(r.values["moe"], []).append((100 * r.values["confidence"], r.values["n"]))
        series = tuple(Series(f"MOE {m:g}", *map(tuple, zip(*sorted(pts))))
                       for m, pts in groups.items())
        return PlotSpec("Sample size vs confidence level", "Confidence level (%)",
                        "Total sample size", series)
    raise ValueError(f"no figure {name!r}")


def emit_svg(rows, spec, path):
    if not rows:
        raise ValueError("no rows to plot")
    write_svg(spec, path)


def run_suite(name, config, outdir):
    """Run one suite (or ``all``) and write its CSV/SVG files into ``outdir``.

    Returns the list of written paths.
    """
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; valid: {', '.join(SUITES)}")
    os.makedirs(outdir, exist_ok=True)
    signals = load_population(config)
    data = population_features(config, signals)
    written = []

    def out(fname):
        p = os.path.join(outdir, fname)
        written.append(p)
        return p

    wanted = set(SUITES[:-1]) if name == "all" else {name}
    if "table1" in wanted:
        emit_csv(run_table1(config, data), out("table1.csv"))
    if wanted & {"fig2", "fig3", "fig4"}:
        curves = run_curves(config, signals, data)
        mae, rmse = run_error_curves(config, curves)
        if "fig2" in wanted:
            emit_csv(curves, out("accuracy_curve.csv"))
            emit_svg(curves, plot_spec("fig2", curves), out("fig2.svg"))
        if "fig3" in wanted:
            emit_csv(mae, out("mae_curve.csv"))
            emit_svg(mae, plot_spec("fig3", mae), out("fig3.svg"))
        if "fig4" in wanted:
            emit_csv(rmse, out("rmse_curve.csv"))
            emit_svg(rmse, plot_spec("fig4", rmse), out("fig4.svg"))
    if "fig5" in wanted:
        rows = run_moe_sweep(config, data)
        emit_csv(rows, out("moe_sweep.csv"))
        emit_svg(rows, plot_spec("fig5", rows), out("fig5.svg"))
    if "fig6" in wanted:
        rows = run_confidence_sweep(config, data)
        emit_csv(rows, out("confidence_sweep.csv"))
        emit_svg(rows, plot_spec("fig6", rows), out("fig6.svg"))

    meta = {"suite": name, "version": __version__,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "config": config.describe(), "files": [os.path.basename(p) for p in written]}
    with atomic_write(out("metadata.json")) as fh:
        fh.write(json.dumps(meta, indent=2, default=_json_default) + "\n")
    return written


def run_all(config, outdir):
    return run_suite("all", config, outdir)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(type(o))
