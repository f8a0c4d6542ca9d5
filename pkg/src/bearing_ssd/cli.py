"""``bearing-ssd`` command line interface.

Exit status: 0 on success, 1 on input/output or data errors, 2 on invalid
flags.  Every subcommand accepts ``--config FILE`` holding ``key = value``
lines (``#`` starts a comment); keys are flag names with dashes or
underscores, and flags given on the command line win.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from ._io import atomic_write, fmt_float
from .bayes_ssd import (RESULT_CSV_COLUMNS, PriorSpec, SampleSizeQuery, achieved_moe, per_class,
                        posterior_sigma, required_sample_size_closed_form, iterative_sample_size)
from .dtree import (KFold, Resubstitution, SplitCriterion, TrainTestSplit, TreeParams, build_tree,
                    evaluate, rank_features, tree_to_json, tree_to_text)
from .experiments import SUITES, ExperimentConfig, run_suite
from .features import FeatureError, extract_features, parse_features, read_feature_csv, \
    write_feature_csv
from .signals import (ClassParams, FaultClass, GeneratorConfig, SignalFormatError,
                      export_signals, generate_population, load_signals)

__all__ = ["main", "build_parser", "UsageError"]


class UsageError(Exception):
    """Invalid flag value; exit status 2."""


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return v


def _probability(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must be in (0, 1), got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0.0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _pos_float(text):
    v = float(text)
    if not v > 0.0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def _feature_list(text):
    try:
        return parse_features([t for t in text.split(",") if t.strip()])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="FILE", help="key = value defaults for this command")
    return p


def _tree_flags(p):
    p.add_argument("--min-leaf", type=_positive_int, default=2)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--criterion", choices=[c.value for c in SplitCriterion],
                   default=SplitCriterion.GAIN_RATIO.value)
    p.add_argument("--features", type=_feature_list, default=None,
                   help="comma-separated subset of the table's features")


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="bearing-ssd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a synthetic signal population")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=_seed, default=42)
    g.add_argument("--per-class", type=int, default=100)
    g.add_argument("--length", type=int, default=8192)
    g.add_argument("--preset", choices=["calibrated", "white-noise"], default="calibrated",
                   help="white-noise zeroes every impulse train")

    f = sub.add_parser("features", parents=[common], help="extract the feature table")
    f.add_argument("--in", dest="input", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--only", type=_feature_list, default=None, help="comma-separated features")
    f.add_argument("--skewness-prefactor", choices=["standard", "as_printed"], default="standard")

    t = sub.add_parser("tree", help="train, evaluate or rank with the decision tree")
    tsub = t.add_subparsers(dest="action", required=True)
    tt = tsub.add_parser("train", parents=[common])
    tt.add_argument("--in", dest="input", required=True)
    tt.add_argument("--out", help="tree JSON path")
    _tree_flags(tt)
    te = tsub.add_parser("evaluate", parents=[common])
    te.add_argument("--in", dest="input", required=True)
    proto = te.add_mutually_exclusive_group()
    proto.add_argument("--kfold", type=int, default=None, help="stratified k-fold (default 10)")
    proto.add_argument("--split", type=_probability, default=None, help="train fraction")
    proto.add_argument("--resubstitution", action="store_true")
    te.add_argument("--seed", type=_seed, default=0)
    te.add_argument("--out", help="metrics CSV path")
    _tree_flags(te)
    tr = tsub.add_parser("rank", parents=[common])
    tr.add_argument("--in", dest="input", required=True)
    _tree_flags(tr)

    s = sub.add_parser("ssd", help="Bayesian sample size")
    ssub = s.add_subparsers(dest="action", required=True)
    sc = ssub.add_parser("closed", parents=[common])
    si = ssub.add_parser("iterate", parents=[common])
    for p in (sc, si):
        p.add_argument("--confidence", type=float, default=0.95)
        p.add_argument("--moe", type=_nonneg_float, required=True)
        p.add_argument("--sigma-prime", type=_pos_float, default=19.9251)
        p.add_argument("--mu-prime", type=float, default=7.8093)
    sc.add_argument("--N", dest="N", type=int, default=400)
    sc.add_argument("--sigma-s", type=_nonneg_float, default=19.9251)
    si.add_argument("--in", dest="input", required=True, help="feature CSV")
    si.add_argument("--feature", default="kurtosis")
    si.add_argument("--seed", type=_seed, default=0)
    si.add_argument("--redraws", type=_positive_int, default=10)
    si.add_argument("--max-iter", type=_positive_int, default=100)
    si.add_argument("--n0", type=_positive_int, default=None)
    si.add_argument("--out", help="result CSV path")

    e = sub.add_parser("experiment", parents=[common], help="run a reproduction suite")
    e.add_argument("suite", help=f"one of {', '.join(SUITES)}")
    e.add_argument("--outdir", default="results")
    e.add_argument("--seed", type=_seed, default=42, help="master seed for sampling")
    e.add_argument("--population-seed", type=_seed, default=42)
    e.add_argument("--population", default=None, help="signal CSV instead of the generator")
    e.add_argument("--replicates", type=_positive_int, default=20)
    e.add_argument("--kfold", type=int, default=10)
    e.add_argument("--confidence", type=_probability, default=0.95)
    e.add_argument("--sigma-prime", type=_pos_float, default=19.9251)
    e.add_argument("--all-features", type=_bool, nargs="?", const=True, default=False)
    return parser


def _subparsers(node):
    return next((a for a in node._actions if isinstance(a, argparse._SubParsersAction)), None)


def _leaf_parser(parser, argv):
    """Subparser selected by the leading command words of ``argv``."""
    node = parser
    for tok in argv:
        sub = _subparsers(node)
        if sub is None or tok not in sub.choices:
            break
        node = sub.choices[tok]
    return node


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _read_config(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            k, v = (p.strip() for p in line.split("=", 1))
            out[k.replace("-", "_")] = (v, lineno)
    return out


def _apply_config(parser, argv):
    path = _config_path(argv)
    if path is None or "-h" in argv or "--help" in argv:
        return parser.parse_args(argv)
    leaf = _leaf_parser(parser, argv)
    actions = {a.dest: a for a in leaf._actions
               if a.dest not in ("help", "config") and not isinstance(a, argparse._SubParsersAction)}
    try:
        entries = _read_config(path)
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config {path}: {exc.strerror}") from None
    defaults = {}
    for key, (value, lineno) in entries.items():
        act = actions.get(key)
        if act is None:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            if isinstance(act, argparse._StoreTrueAction):
                conv = _bool(value)
            else:
                conv = act.type(value) if act.type else value
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
        if act.choices is not None and conv not in act.choices:
            raise UsageError(f"{path}:{lineno}: {key!r} must be one of {list(act.choices)}")
        defaults[key] = conv
    leaf.set_defaults(**defaults)
    for act in leaf._actions:  # a config value satisfies a required flag
        if act.dest in defaults:
            act.required = False
    return parser.parse_args(argv)


# -- commands ---------------------------------------------------------------

def _summary(values):
    return f"mean = {float(np.mean(values)):.4f}, std = {float(np.std(values, ddof=1)) if len(values) > 1 else 0.0:.4f}"


def cmd_generate(a):
    if a.per_class < 1:
        raise UsageError("--per-class must be >= 1")
    if a.length < 8:
        raise UsageError("--length must be >= 8")
    classes = None
    if a.preset == "white-noise":
        classes = {c: ClassParams(0.0, 0.0, 0.002, 1.0) for c in FaultClass}
    cfg = GeneratorConfig(**({"classes": classes} if classes else {}),
                          signals_per_class=a.per_class, length=a.length, seed=a.seed)
    pop = generate_population(cfg)
    export_signals(pop, a.out)
    k = extract_features(pop, ["kurtosis"]).values[:, 0]
    print(f"wrote {len(pop)} signals x {a.length} samples to {a.out}")
    print(f"kurtosis {_summary(k)}")
    for c in FaultClass:
        kc = k[np.asarray(pop.labels) == int(c)]
        print(f"  {c.label:<19} {_summary(kc)}")
    return 0


def cmd_features(a):
    pop = load_signals(a.input)
    data = extract_features(pop, a.only, skewness_prefactor=a.skewness_prefactor)
    write_feature_csv(data, a.out)
    print(f"wrote {data.shape[0]} x {data.shape[1]} feature table to {a.out}")
    return 0


def _tree_data(a):
    data = read_feature_csv(a.input)
    if a.features:
        missing = [f.value for f in a.features if f not in data.features]
        if missing:
            raise UsageError(f"--features not in table: {', '.join(missing)}")
        data = data.select(a.features)
    if a.max_depth is not None and a.max_depth < 0:
        raise UsageError("--max-depth must be >= 0")
    return data, TreeParams(a.min_leaf, a.max_depth, SplitCriterion(a.criterion))


def cmd_tree(a):
    if a.action == "evaluate" and a.kfold is not None and a.kfold < 2:
        raise UsageError("--kfold must be >= 2")
    data, params = _tree_data(a)
    if a.action == "train":
        tree = build_tree(data, params)
        print(tree_to_text(tree), end="")
        if a.out:
            with atomic_write(a.out) as fh:
                fh.write(tree_to_json(tree))
        return 0
    if a.action == "rank":
        r = rank_features(data, params)
        print(f"rank,feature,{r.criterion.value},first_use_depth")
        for i, (f, s) in enumerate(zip(r.features, r.scores), start=1):
            d = r.first_use_depth[f]
            print(f"{i},{f.value},{s:.6f},{'' if d is None else d}")
        return 0
    if a.resubstitution:
        protocol = Resubstitution()
    elif a.split is not None:
        protocol = TrainTestSplit(a.split, a.seed)
    else:
        protocol = KFold(10 if a.kfold is None else a.kfold, a.seed)
    rep = evaluate(data, params, protocol)
    print(f"protocol: {rep.protocol}")
    print(f"accuracy_percent = {rep.accuracy_percent:.4f}")
    print(f"mean_absolute_error = {rep.mean_absolute_error:.6f}")
    print(f"root_mean_square_error = {rep.root_mean_square_error:.6f}")
    print("confusion matrix (rows = true class):")
    for c, row in zip(FaultClass, rep.confusion_matrix):
        print(f"  {c.label:<19} " + " ".join(f"{v:4d}" for v in row))
    if a.out:
        with atomic_write(a.out) as fh:
            fh.write("protocol,accuracy,mae,rmse\n")
            fh.write(f"{rep.protocol},{fmt_float(rep.accuracy_percent)},"
                     f"{fmt_float(rep.mean_absolute_error)},{fmt_float(rep.root_mean_square_error)}\n")
    return 0


def _query(a, N, sigma_s):
    if not 0.0 < a.confidence < 1.0:
        raise UsageError("confidence must be in (0,1)")
    if N < 2:
        raise UsageError("--N must be >= 2")
    return SampleSizeQuery(a.confidence, a.moe, PriorSpec(a.mu_prime, a.sigma_prime, N), sigma_s)


def cmd_ssd(a):
    if a.action == "closed":
        q = _query(a, a.N, a.sigma_s)
        n = required_sample_size_closed_form(q)
        s2 = posterior_sigma(q.prior.sigma_prime, q.sigma_s)
        floor_pc, nearest_pc = per_class(n)
        print(f"n_total = {n}")
        print(f"n_per_class = {floor_pc}")
        print(f"n_per_class_nearest = {nearest_pc}")
        print(f"sigma_doubleprime = {s2!r}")
        print(f"achieved_moe = {achieved_moe(n, s2, q.confidence_level, a.N)!r}")
        return 0
    if not 0.0 < a.confidence < 1.0:
        raise UsageError("confidence must be in (0,1)")
    data = read_feature_csv(a.input)
    try:
        feature = parse_features([a.feature])[0]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if feature not in data.features:
        raise UsageError(f"feature {feature.value} not in {a.input}")
    data = data.select([feature])
    q = _query(a, len(data), 0.0)
    if a.n0 is not None and a.n0 > len(data):
        raise UsageError("--n0 exceeds the population size")
    r = iterative_sample_size(data, q, seed=a.seed, max_iter=a.max_iter, redraws=a.redraws, n0=a.n0)
    print(r.to_kv(q), end="")
    print("iteration,assumed_n,sigma_s,next_n")
    for i, st in enumerate(r.iterations, start=1):
        print(f"{i},{st.assumed_n},{st.sigma_s:.6f},{st.next_n}")
    if a.out:
        with atomic_write(a.out) as fh:
            fh.write(",".join(RESULT_CSV_COLUMNS) + "\n")
            fh.write(",".join(r.csv_row(q)) + "\n")
    return 0


def cmd_experiment(a):
    if a.suite not in SUITES:
        raise UsageError(f"unknown suite {a.suite!r}; valid suites: {', '.join(SUITES)}")
    if a.kfold < 2:
        raise UsageError("--kfold must be >= 2")
    population = a.population if a.population else GeneratorConfig(seed=a.population_seed)
    if a.population and not os.path.exists(a.population):
        raise FileNotFoundError(f"population file not found: {a.population}")
    cfg = ExperimentConfig(population=population, master_seed=a.seed, confidence=a.confidence,
                           sigma_prime=a.sigma_prime, replicates=a.replicates, kfold=a.kfold,
                           all_features=a.all_features)
    for p in run_suite(a.suite, cfg, a.outdir):
        print(p)
    return 0


COMMANDS = {"generate": cmd_generate, "features": cmd_features, "tree": cmd_tree,
            "ssd": cmd_ssd, "experiment": cmd_experiment}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for bad flags
        return exc.code if isinstance(exc.code, int) else 2
    except UsageError as exc:
        print(f"bearing-ssd: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, SignalFormatError, FeatureError, ValueError, KeyError) as exc:
        msg = exc.strerror + f": {exc.filename}" if isinstance(exc, OSError) and exc.filename \
            else str(exc)
        print(f"bearing-ssd: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
