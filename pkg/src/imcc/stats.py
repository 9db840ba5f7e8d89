"""Friedman test and Nemenyi critical difference for comparing k algorithms
over N datasets from their per-dataset metric values.

Ranks are mean-shared on ties, so every rank row sums to k(k+1)/2. The
post-hoc quantile q_alpha is caller-supplied; no distribution tables are
built in.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .errors import (
    ConfigurationError,
    DegenerateStatisticError,
    ParseError,
    ValidationError,
)


@dataclass(frozen=True)
class RankTable:
    ranks: np.ndarray
    algorithm_names: tuple[str, ...]
    dataset_names: tuple[str, ...]

    def __post_init__(self):
        ranks = np.asarray(self.ranks, dtype=np.float64)
        if ranks.ndim != 2:
            raise ValidationError("ranks must be a 2-D matrix")
        n, k = ranks.shape
        if len(self.algorithm_names) != k or len(self.dataset_names) != n:
            raise ValidationError("name sequences must match the rank matrix")
        expected = k * (k + 1) / 2.0
        if np.any(np.abs(ranks.sum(axis=1) - expected) > 1e-9):
            raise ValidationError(f"every rank row must sum to {expected}")
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "algorithm_names", tuple(self.algorithm_names))
        object.__setattr__(self, "dataset_names", tuple(self.dataset_names))

    @property
    def num_algorithms(self):
        return self.ranks.shape[1]

    @property
    def num_datasets(self):
        return self.ranks.shape[0]

    def average_ranks(self):
        return self.ranks.mean(axis=0)


@dataclass(frozen=True)
class FriedmanResult:
    chi_squared: float
    f_statistic: float
    k: int
    n_datasets: int


@dataclass(frozen=True)
class NemenyiResult:
    critical_difference: float
    q_alpha: float


def average_ranks(values, algorithm_names=None, dataset_names=None,
                  higher_is_better=False) -> RankTable:
    """Per-dataset ranks of an N x k value matrix (rank 1 = best, ties
    mean-shared)."""
    V = np.asarray(values, dtype=np.float64)
    if V.ndim != 2:
        raise ValidationError("values must be a 2-D matrix")
    n, k = V.shape
    if n < 2 or k < 2:
        raise ConfigurationError("need at least 2 datasets and 2 algorithms")
    if not np.all(np.isfinite(V)):
        raise ValidationError("values contain non-finite entries")
    ranks = rankdata(-V if higher_is_better else V, axis=1, method="average")
    if algorithm_names is None:
        algorithm_names = tuple(f"alg{i}" for i in range(k))
    if dataset_names is None:
        dataset_names = tuple(f"dataset{i}" for i in range(n))
    return RankTable(ranks, tuple(algorithm_names), tuple(dataset_names))


def friedman(table: RankTable) -> FriedmanResult:
    """Friedman chi-squared and its F-distributed refinement."""
    k = table.num_algorithms
    n = table.num_datasets
    r = table.average_ranks()
    chi2 = 12.0 * n / (k * (k + 1)) * float((r**2).sum() - k * (k + 1) ** 2 / 4.0)
    chi2 = max(chi2, 0.0)
    denom = n * (k - 1) - chi2
    if denom <= 0:
        raise DegenerateStatisticError(
            "rankings are perfectly consistent; the F statistic is undefined "
            f"(N(k-1) = {n * (k - 1)} <= chi-squared = {chi2:.6g})"
        )
    f_stat = (n - 1) * chi2 / denom
    return FriedmanResult(chi_squared=chi2, f_statistic=f_stat, k=k, n_datasets=n)


def nemenyi_cd(k, n_datasets, q_alpha) -> NemenyiResult:
    """Critical difference q_alpha * sqrt(k(k+1) / (6N))."""
    if k < 2:
        raise ConfigurationError("need at least 2 algorithms")
    if n_datasets < 1:
        raise ConfigurationError("need at least 1 dataset")
    if not q_alpha > 0:
        raise ConfigurationError("q_alpha must be positive")
    cd = float(q_alpha * np.sqrt(k * (k + 1) / (6.0 * n_datasets)))
    return NemenyiResult(critical_difference=cd, q_alpha=float(q_alpha))


def load_ranks_csv(path):
    """Read an N x k metric-value table.

    The header row carries algorithm names. If its first cell is empty or
    the first data column is non-numeric, that column holds dataset names.
    Returns (values, algorithm_names, dataset_names).
    """
    path = Path(path)
    if not path.exists():
        raise ParseError("file not found", path)
    with path.open("r", newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if len(rows) < 2:
        raise ParseError("need a header row and at least one data row", path)
    header = [cell.strip() for cell in rows[0]]
    body = rows[1:]

    def numeric(cell):
        try:
            float(cell)
            return True
        except ValueError:
            return False

    named = header[0] == "" or any(not numeric(r[0]) for r in body)
    start = 1 if named else 0
    algorithms = header[start:]
    if len(algorithms) < 2:
        raise ParseError("need at least two algorithm columns", path)
    values = np.empty((len(body), len(algorithms)), dtype=np.float64)
    datasets = []
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise ParseError(
                f"row has {len(row)} cells, header has {len(header)}", path, i + 2
            )
        datasets.append(row[0].strip() if named else f"dataset{i}")
        for j, cell in enumerate(row[start:]):
            if not numeric(cell):
                raise ParseError(f"non-numeric cell {cell!r}", path, i + 2)
            values[i, j] = float(cell)
    return values, tuple(algorithms), tuple(datasets)


def cd_summary(table: RankTable, cd: float) -> str:
    """Plain-text summary naming the algorithms within one critical
    difference of the best average rank."""
    avg = table.average_ranks()
    order = np.argsort(avg, kind="stable")
    best = order[0]
    lines = [
        f"best by average rank: {table.algorithm_names[best]} "
        f"({avg[best]:.4f}); critical difference: {cd:.4f}"
    ]
    for idx in order:
        gap = avg[idx] - avg[best]
        verdict = "within one CD of best" if gap <= cd else "significantly worse"
        lines.append(
            f"  {table.algorithm_names[idx]}: average rank {avg[idx]:.4f} "
            f"(gap {gap:.4f}, {verdict})"
        )
    return "\n".join(lines)
