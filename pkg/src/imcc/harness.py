"""Experimental protocol: repeated random splits, k-fold cross-validated
grid search, synthetic data generation and report assembly.

Everything is a pure function of (data, grid, seeds): trial t splits with
base_seed + t, fold partitions and k-means both reuse the trial seed, and
normalization stats, kernel bandwidth and cluster centers are always fitted
on the training portion of the current split or fold only.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datasets import Dataset, random_split
from .errors import ConfigurationError, ImccError, ParseError
from .metrics import (
    HIGHER_IS_BETTER,
    METRIC_NAMES,
    MetricReport,
    evaluate_all,
    hamming_loss,
    average_precision,
    coverage,
    one_error,
    ranking_loss,
)
from .solver import Hyperparams, KernelSpec, predict_scores, train_model

_METRIC_FUNCS = {
    "one_error": one_error,
    "ranking_loss": ranking_loss,
    "coverage": coverage,
    "average_precision": average_precision,
}


@dataclass(frozen=True)
class GridSpec:
    """Hyperparameter search space."""

    alpha_values: tuple[float, ...]
    beta_values: tuple[float, ...]
    gamma_values: tuple[float, ...]
    cluster_values: tuple[int, ...]
    kernel_kind: str = "gaussian"

    def __post_init__(self):
        for name in ("alpha_values", "beta_values", "gamma_values", "cluster_values"):
            seq = tuple(getattr(self, name))
            if not seq:
                raise ConfigurationError(f"{name} must be non-empty")
            object.__setattr__(self, name, seq)
        if any(b <= 0 for b in self.beta_values):
            raise ConfigurationError("beta values must be strictly positive")
        if any(v < 0 for v in self.alpha_values + self.gamma_values):
            raise ConfigurationError("alpha and gamma values must be non-negative")
        if any(c < 1 for c in self.cluster_values):
            raise ConfigurationError("cluster counts must be at least 1")
        if self.kernel_kind not in ("gaussian", "linear"):
            raise ConfigurationError(
                f"kernel kind {self.kernel_kind!r} must be 'gaussian' or 'linear'"
            )

    def points(self):
        """Parameter points in lexicographic order of the value sequences."""
        for alpha, beta, gamma, c in itertools.product(
            self.alpha_values, self.beta_values, self.gamma_values, self.cluster_values
        ):
            yield Hyperparams(alpha, beta, gamma, c)


# The full published search space and a desk-scale subset of it.
PAPER_GRID = GridSpec(
    alpha_values=tuple(10.0**e for e in range(-3, 4)),
    beta_values=tuple(10.0**e for e in range(-3, 4)),
    gamma_values=tuple(10.0**e for e in range(-3, 4)),
    cluster_values=(8, 16, 32, 64, 128, 256),
)
REDUCED_GRID = GridSpec(
    alpha_values=(0.01, 0.1, 1.0),
    beta_values=(0.1, 1.0, 10.0),
    gamma_values=(0.01, 0.1, 1.0),
    cluster_values=(8, 32, 128),
)


@dataclass(frozen=True)
class TrialResult:
    seed: int
    chosen_params: Hyperparams
    metrics: MetricReport
    fit_seconds: float
    predict_seconds: float


def metric_value(name, scores, truth) -> float:
    """Evaluate one named metric; hamming works on the score signs."""
    if name == "hamming_loss":
        return hamming_loss(np.where(np.asarray(scores) >= 0, 1, -1), truth)
    try:
        return _METRIC_FUNCS[name](scores, truth)
    except KeyError:
        raise ConfigurationError(
            f"unknown metric {name!r}; expected one of {METRIC_NAMES}"
        ) from None


def _grid_kernel(grid_or_kind) -> KernelSpec:
    kind = getattr(grid_or_kind, "kernel_kind", grid_or_kind)
    return KernelSpec(kind)


def _fold_scores(
    train: Dataset, hp, spec, folds, seed, select_metric, normalize_method
):
    n = train.num_examples
    if folds < 2:
        raise ConfigurationError("need at least 2 folds")
    if folds > n:
        raise ConfigurationError(f"{folds} folds cannot all be non-empty with n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    parts = np.array_split(perm, folds)
    values = []
    for i, part in enumerate(parts):
        val_idx = np.sort(part)
        fit_idx = np.sort(np.concatenate([p for j, p in enumerate(parts) if j != i]))
        fold_train = train.take(fit_idx)
        model, _ = train_model(
            fold_train, hp, spec=spec, seed=seed, normalize_method=normalize_method
        )
        fold_val = train.take(val_idx)
        scores = predict_scores(model, fold_val.features)
        values.append(metric_value(select_metric, scores, fold_val.labels))
    return values


def cross_validate(
    train: Dataset,
    hp: Hyperparams,
    spec: KernelSpec,
    folds: int,
    seed: int,
    select_metric: str,
    normalize_method: str = "zscore",
) -> float:
    """Mean of ``select_metric`` over a seeded k-fold partition.

    The augmentation (k-means plus virtual examples), normalization stats and
    kernel bandwidth are refitted per fold on that fold's training part only.
    """
    return float(
        np.mean(
            _fold_scores(train, hp, spec, folds, seed, select_metric, normalize_method)
        )
    )


def grid_search(
    train: Dataset,
    grid: GridSpec,
    folds: int,
    seed: int,
    select_metric: str = "average_precision",
    normalize_method: str = "zscore",
    surface: list | None = None,
) -> Hyperparams:
    """Best parameter point by cross-validated mean of ``select_metric``.

    Points that cannot run (cluster count above the fold-train size) are
    skipped and reported; ties keep the earliest point in grid order. Pass a
    list as ``surface`` to collect one record per point per fold.
    """
    maximize = HIGHER_IS_BETTER[select_metric] if select_metric in HIGHER_IS_BETTER \
        else False
    best = None
    skipped = []
    for hp in grid.points():
        spec = _grid_kernel(grid)
        try:
            fold_values = _fold_scores(
                train, hp, spec, folds, seed, select_metric, normalize_method
            )
        except ConfigurationError as exc:
            skipped.append(f"alpha={hp.alpha} beta={hp.beta} gamma={hp.gamma} "
                           f"c={hp.num_clusters}: {exc}")
            continue
        if surface is not None:
            for fold, value in enumerate(fold_values):
                surface.append(
                    {
                        "alpha": hp.alpha,
                        "beta": hp.beta,
                        "gamma": hp.gamma,
                        "clusters": hp.num_clusters,
                        "fold": fold,
                        "metric": select_metric,
                        "value": value,
                    }
                )
        value = float(np.mean(fold_values))
        better = best is None or (value > best[0] if maximize else value < best[0])
        if better:
            best = (value, hp)
    if best is None:
        detail = "; ".join(skipped[:5])
        raise ConfigurationError(f"every grid point failed: {detail}")
    return best[1]


def repeated_trials(
    data: Dataset,
    grid: GridSpec,
    repeats: int,
    train_fraction: float = 0.8,
    base_seed: int = 0,
    folds: int = 5,
    select_metric: str = "average_precision",
    normalize_method: str = "zscore",
    surface: list | None = None,
):
    """Repeated random-split protocol.

    Trial t splits with seed base_seed + t, grid-searches on its training
    part, refits on the full training part and scores the held-out part.
    Returns (trials, summary) where summary maps each metric to
    (mean, sample standard deviation; 0 for a single trial).
    """
    if repeats < 1:
        raise ConfigurationError("repeats must be at least 1")
    trials = []
    for t in range(repeats):
        seed = base_seed + t
        try:
            train, test = random_split(data, train_fraction, seed)
            chosen = grid_search(
                train, grid, folds, seed, select_metric, normalize_method, surface
            )
            spec = _grid_kernel(grid)
            tic = time.perf_counter()
            model, _ = train_model(
                train, chosen, spec=spec, seed=seed, normalize_method=normalize_method
            )
            fit_seconds = time.perf_counter() - tic
            tic = time.perf_counter()
            scores = predict_scores(model, test.features)
            predict_seconds = time.perf_counter() - tic
            report = evaluate_all(scores, test.labels)
        except ImccError as exc:
            raise type(exc)(f"trial {t} (seed {seed}) failed: {exc}") from exc
        trials.append(TrialResult(seed, chosen, report, fit_seconds, predict_seconds))

    summary = {}
    for name in METRIC_NAMES:
        values = np.array([getattr(t.metrics, name) for t in trials])
        std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        summary[name] = (float(values.mean()), std)
    return trials, summary


def run_report(trials, summary, config=None) -> dict:
    """JSON-ready report of a repeated-trials run."""
    return {
        "config": config or {},
        "trials": [
            {
                "seed": t.seed,
                "chosen_params": {
                    "alpha": t.chosen_params.alpha,
                    "beta": t.chosen_params.beta,
                    "gamma": t.chosen_params.gamma,
                    "clusters": t.chosen_params.num_clusters,
                },
                "metrics": t.metrics.to_dict(),
                "timing": {
                    "fit_seconds": t.fit_seconds,
                    "predict_seconds": t.predict_seconds,
                },
            }
            for t in trials
        ],
        "summary": {
            name: {"mean": mean, "std": std} for name, (mean, std) in summary.items()
        },
    }


# ---------------------------------------------------------------------------
# Synthetic data


def synthetic_blobs(
    n=400,
    d=10,
    q=6,
    blobs=8,
    flip_prob=0.05,
    seed=0,
    separation=2.0,
    spread=1.5,
) -> Dataset:
    """Isotropic Gaussian blobs with per-blob label templates.

    Blob membership is balanced, each template mixes +1 and -1, and every
    label cell flips sign independently with ``flip_prob``. The flips make
    the within-blob label means soft, which is the regime cluster-center
    augmentation targets.
    """
    if blobs < 1 or n < blobs:
        raise ConfigurationError("need 1 <= blobs <= n")
    if not 0 <= flip_prob < 1:
        raise ConfigurationError("flip_prob must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, separation, size=(blobs, d))
    templates = np.empty((blobs, q), dtype=np.int64)
    for i in range(blobs):
        row = rng.choice((-1, 1), size=q)
        while np.all(row == row[0]):
            row = rng.choice((-1, 1), size=q)
        templates[i] = row
    membership = rng.permutation(np.repeat(np.arange(blobs), -(-n // blobs))[:n])
    X = centers[membership] + rng.normal(0.0, spread, size=(n, d))
    Y = templates[membership].copy()
    Y[rng.random((n, q)) < flip_prob] *= -1
    return Dataset(
        X,
        Y,
        tuple(f"f{j}" for j in range(d)),
        tuple(f"label{j}" for j in range(q)),
    )


# ---------------------------------------------------------------------------
# Flat key = value config files


def parse_config(path) -> dict[str, str]:
    """Read ``key = value`` lines ('#' comments and blank lines ignored)."""
    path = Path(path)
    if not path.exists():
        raise ParseError("file not found", path)
    out = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", path, lineno)
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out
