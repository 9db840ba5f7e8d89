"""Command-line interface.

Commands: train, predict, evaluate, benchmark, stats, gen-synthetic.
Exit codes: 0 success, 1 usage/configuration error, 2 data error,
3 numerical error. All randomness derives from --seed; --threads caps the
compiled kernels' internal parallelism. A ``--config`` file of
``key = value`` lines (sequences comma-separated) overrides flags.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import _accel, harness, metrics, model_io, solver, stats as stats_mod
from .datasets import load_arff, load_csv, read_numeric_csv, save_csv
from .errors import ConfigurationError, DataError, NumericalError
from .solver import Hyperparams, KernelSpec


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")


def _add_common(p):
    p.add_argument("--seed", type=int, default=42, help="master random seed")
    p.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count(),
        help="cap on internal parallelism (numba backend)",
    )
    p.add_argument(
        "--config",
        type=Path,
        default=None,
        help="key = value file whose entries override flags",
    )


def _add_data_options(p, labels_required=True):
    p.add_argument("--data", type=Path, required=True, help="ARFF or CSV dataset")
    group = p.add_mutually_exclusive_group(required=False)
    group.add_argument(
        "--labels", type=int, default=None, help="number of trailing label columns"
    )
    group.add_argument(
        "--labels-xml", type=Path, default=None, help="MULAN label-list XML"
    )
    p.set_defaults(_labels_required=labels_required)


def _load_dataset(args):
    path = args.data
    if path.suffix.lower() == ".arff":
        spec = args.labels_xml if args.labels_xml is not None else args.labels
        if spec is None:
            raise ConfigurationError("ARFF input needs --labels or --labels-xml")
        return load_arff(path, spec)
    if args.labels_xml is not None:
        raise ConfigurationError("--labels-xml applies to ARFF input only")
    if args.labels is None:
        raise ConfigurationError("CSV input needs --labels")
    return load_csv(path, args.labels)


def _set_threads(threads):
    if threads is None:
        return
    if threads < 1:
        raise ConfigurationError("--threads must be at least 1")
    if _accel.BACKEND == "numba":
        import numba

        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))


def _apply_config(args, actions):
    """Override parsed args with --config file entries (config wins)."""
    if args.config is None:
        return
    mapping = harness.parse_config(args.config)
    by_dest = {a.dest: a for a in actions if a.dest != "help"}
    for key, raw in mapping.items():
        dest = key.replace("-", "_")
        if dest not in by_dest:
            raise ConfigurationError(f"unknown config key {key!r}")
        action = by_dest[dest]
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("1", "true", "yes")
        elif action.type is not None:
            try:
                value = action.type(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigurationError(f"config key {key!r}: {exc}") from None
        else:
            value = raw
        if action.choices is not None and value not in action.choices:
            raise ConfigurationError(
                f"config key {key!r}: {value!r} not in {sorted(action.choices)}"
            )
        setattr(args, dest, value)


def _emit(obj):
    print(model_io.dumps_json(obj))


# ---------------------------------------------------------------------------
# train


def _cmd_train(args):
    data = _load_dataset(args)
    hp = Hyperparams(args.alpha, args.beta, args.gamma, args.clusters)
    if args.solver == "linear":
        spec = None
    else:
        sigma = args.sigma
        spec = KernelSpec(args.kernel, sigma if args.kernel == "gaussian" else None)
    _emit(
        {
            "event": "train_start",
            "examples": data.num_examples,
            "features": data.num_features,
            "labels": data.num_labels,
            "alpha": hp.alpha,
            "beta": hp.beta,
            "gamma": hp.gamma,
            "clusters": hp.num_clusters,
            "seed": args.seed,
        }
    )
    tic = time.perf_counter()
    model, aug = solver.train_model(
        data,
        hp,
        spec=spec,
        seed=args.seed,
        normalize_method=args.normalize,
        restarts=args.restarts,
    )
    fit_seconds = time.perf_counter() - tic
    normalized = model.norm_stats.apply(data)
    if isinstance(model, solver.KernelModel):
        params = (model.coefficients, model.bias)
        used_spec = model.spec
        sigma = model.spec.sigma
    else:
        params = (model.weights, model.bias)
        used_spec = None
        sigma = None
    value = solver.objective(params, normalized, aug, hp, spec=used_spec)
    _emit({"event": "kernel", "kind": args.solver if used_spec is None else used_spec.kind, "sigma": sigma})
    _emit({"event": "clusters", "sizes": aug.assignment.counts().tolist()})
    _emit({"event": "trained", "objective": value, "fit_seconds": fit_seconds})
    model_io.save_model(model, args.model_out)
    _emit({"event": "saved", "path": str(args.model_out)})
    return 0


# ---------------------------------------------------------------------------
# predict


def _load_features(args):
    path = args.data
    if path.suffix.lower() == ".arff":
        spec = args.labels_xml if args.labels_xml is not None else args.labels
        if spec is None:
            raise ConfigurationError("ARFF input needs --labels or --labels-xml")
        return load_arff(path, spec).features
    if args.labels:
        return load_csv(path, args.labels).features
    matrix, _ = read_numeric_csv(path)
    return matrix


def _cmd_predict(args):
    model = model_io.load_model(args.model)
    features = _load_features(args)
    scores = solver.predict_scores(model, features)
    signs = solver.predict_labels(scores)
    q = scores.shape[1]
    with Path(args.out).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [f"score_{j}" for j in range(q)] + [f"pred_{j}" for j in range(q)]
        )
        for srow, prow in zip(scores, signs):
            writer.writerow(
                [f"{v:.17g}" for v in srow] + [str(int(v)) for v in prow]
            )
    return 0


# ---------------------------------------------------------------------------
# evaluate


def _cmd_evaluate(args):
    truth = _load_dataset(args)
    matrix, names = read_numeric_csv(args.predictions)
    q = truth.num_labels
    if matrix.shape[1] < q:
        raise DataError(
            f"predictions file has {matrix.shape[1]} columns, need {q} score columns"
        )
    if matrix.shape[0] != truth.num_examples:
        raise DataError(
            f"row mismatch: {matrix.shape[0]} predictions vs "
            f"{truth.num_examples} truth rows"
        )
    report = metrics.evaluate_all(matrix[:, :q], truth.labels)
    _emit(report.to_dict())
    # fixed-order human-readable table on stderr; stdout stays machine-readable
    for name, value in report.to_dict().items():
        print(f"{name:<20} {value:.6f}" if isinstance(value, float)
              else f"{name:<20} {value}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# benchmark


def _resolve_grid(args):
    base = harness.PAPER_GRID if args.grid == "paper" else harness.REDUCED_GRID
    return harness.GridSpec(
        alpha_values=args.alphas or base.alpha_values,
        beta_values=args.betas or base.beta_values,
        gamma_values=args.gammas or base.gamma_values,
        cluster_values=args.cluster_grid or base.cluster_values,
        kernel_kind=args.kernel,
    )


def _cmd_benchmark(args):
    from .datasets import compute_stats

    data = _load_dataset(args)
    grid = _resolve_grid(args)
    surface = [] if args.surface_csv else None
    trials, summary = harness.repeated_trials(
        data,
        grid,
        repeats=args.repeats,
        train_fraction=args.train_fraction,
        base_seed=args.seed,
        folds=args.folds,
        select_metric=args.select_metric,
        normalize_method=args.normalize,
        surface=surface,
    )
    config = {
        "data": str(args.data),
        "dataset_stats": compute_stats(data).to_dict(),
        "grid": {
            "alpha_values": list(grid.alpha_values),
            "beta_values": list(grid.beta_values),
            "gamma_values": list(grid.gamma_values),
            "cluster_values": list(grid.cluster_values),
            "kernel_kind": grid.kernel_kind,
        },
        "repeats": args.repeats,
        "train_fraction": args.train_fraction,
        "folds": args.folds,
        "select_metric": args.select_metric,
        "normalize": args.normalize,
        "seed": args.seed,
    }
    report = harness.run_report(trials, summary, config)
    Path(args.report).write_text(
        model_io.dumps_json(report) + "\n", encoding="utf-8"
    )
    if surface is not None:
        with Path(args.surface_csv).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["alpha", "beta", "gamma", "clusters", "fold", "metric", "value"]
            )
            for row in surface:
                writer.writerow(
                    [
                        f"{row['alpha']:.17g}",
                        f"{row['beta']:.17g}",
                        f"{row['gamma']:.17g}",
                        row["clusters"],
                        row["fold"],
                        row["metric"],
                        f"{row['value']:.17g}",
                    ]
                )
    print(f"{'metric':<20} {'mean':>10} {'std':>10}")
    for name, (mean, std) in summary.items():
        print(f"{name:<20} {mean:>10.4f} {std:>10.4f}")
    return 0


# ---------------------------------------------------------------------------
# stats


def _cmd_stats(args):
    values, algorithms, dataset_names = stats_mod.load_ranks_csv(args.ranks)
    table = stats_mod.average_ranks(
        values, algorithms, dataset_names, higher_is_better=args.higher_is_better
    )
    result = stats_mod.friedman(table)
    nemenyi = stats_mod.nemenyi_cd(
        table.num_algorithms, table.num_datasets, args.q_alpha
    )
    _emit(
        {
            "chi_squared": result.chi_squared,
            "f_statistic": result.f_statistic,
            "critical_difference": nemenyi.critical_difference,
            "average_ranks": {
                name: float(rank)
                for name, rank in zip(table.algorithm_names, table.average_ranks())
            },
        }
    )
    print(stats_mod.cd_summary(table, nemenyi.critical_difference), file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# gen-synthetic


def _cmd_gen_synthetic(args):
    data = harness.synthetic_blobs(
        n=args.n,
        d=args.d,
        q=args.q,
        blobs=args.blobs,
        flip_prob=args.flip_prob,
        seed=args.seed,
        separation=args.separation,
        spread=args.spread,
    )
    save_csv(data, args.out)
    print(f"wrote {data.num_examples} x ({data.num_features}+{data.num_labels}) "
          f"dataset to {args.out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    parser = _Parser(
        prog="imcc",
        description="Multi-label learning with cluster-center augmentation.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fit a model and write a model file")
    _add_data_options(p)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--clusters", type=int, default=8)
    p.add_argument("--solver", choices=("kernel", "linear"), default="kernel")
    p.add_argument("--kernel", choices=("gaussian", "linear"), default="gaussian")
    p.add_argument("--sigma", type=float, default=None,
                   help="gaussian bandwidth (default: mean pairwise distance)")
    p.add_argument("--normalize", choices=("zscore", "minmax", "none"),
                   default="zscore")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--model-out", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="score a dataset with a saved model")
    p.add_argument("--model", type=Path, required=True)
    _add_data_options(p, labels_required=False)
    p.add_argument("--out", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="metrics for a predictions file")
    p.add_argument("--predictions", type=Path, required=True)
    _add_data_options(p)
    _add_common(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("benchmark", help="repeated-split grid-search protocol")
    _add_data_options(p)
    p.add_argument("--grid", choices=("reduced", "paper"), default="reduced")
    p.add_argument("--alphas", type=_float_list, default=None)
    p.add_argument("--betas", type=_float_list, default=None)
    p.add_argument("--gammas", type=_float_list, default=None)
    p.add_argument("--cluster-grid", type=_int_list, default=None)
    p.add_argument("--kernel", choices=("gaussian", "linear"), default="gaussian")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--select-metric", choices=metrics.METRIC_NAMES,
                   default="average_precision")
    p.add_argument("--normalize", choices=("zscore", "minmax", "none"),
                   default="zscore")
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--surface-csv", type=Path, default=None,
                   help="write the per-point per-fold search surface")
    _add_common(p)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("stats", help="Friedman test and Nemenyi CD from ranks.csv")
    p.add_argument("--ranks", type=Path, required=True)
    p.add_argument("--q-alpha", type=float, required=True)
    p.add_argument("--higher-is-better", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("gen-synthetic", help="write a synthetic blob dataset CSV")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--q", type=int, default=6)
    p.add_argument("--blobs", type=int, default=8)
    p.add_argument("--flip-prob", type=float, default=0.05)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--spread", type=float, default=1.5)
    _add_common(p)
    p.set_defaults(func=_cmd_gen_synthetic)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    sub_actions = next(
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    command_parser = sub_actions.choices[args.command]
    try:
        _apply_config(args, command_parser._actions)
        _set_threads(args.threads)
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
