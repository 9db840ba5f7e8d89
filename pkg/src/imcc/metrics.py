"""The five standard multi-label evaluation metrics.

Ranks are 1-based over descending scores, with ties broken by the lower
label index: rank(s_j) = 1 + #{k: s_k > s_j} + #{k < j: s_k = s_j}. Rows
without any relevant label are skipped by the rank-based metrics (and
all-relevant rows additionally by ranking_loss) because their denominators
are undefined; skipped rows are counted in the report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMetricError, ValidationError


@dataclass(frozen=True)
class MetricReport:
    one_error: float
    hamming_loss: float
    ranking_loss: float
    coverage: float
    average_precision: float
    skipped_instances: int

    def to_dict(self):
        return {
            "one_error": self.one_error,
            "hamming_loss": self.hamming_loss,
            "ranking_loss": self.ranking_loss,
            "coverage": self.coverage,
            "average_precision": self.average_precision,
            "skipped_instances": self.skipped_instances,
        }


def _check_pair(scores, truth, scores_are_signs=False):
    S = np.asarray(scores, dtype=np.float64)
    Y = np.asarray(truth)
    if S.shape != Y.shape or S.ndim != 2:
        raise ValidationError(f"shape mismatch: scores {S.shape} vs truth {Y.shape}")
    if not np.all(np.isin(Y, (-1, 1))):
        raise ValidationError("truth must contain only -1 and +1")
    if scores_are_signs and not np.all(np.isin(S, (-1.0, 1.0))):
        raise ValidationError("predictions must contain only -1 and +1")
    if not np.all(np.isfinite(S)):
        raise ValidationError("scores contain non-finite entries")
    return S, Y.astype(np.int64)


def label_ranks(scores) -> np.ndarray:
    """1-based rank of every score within its row (see module docstring)."""
    S = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-S, axis=1, kind="stable")
    ranks = np.empty(S.shape, dtype=np.int64)
    rows = np.arange(S.shape[0])[:, None]
    ranks[rows, order] = np.arange(1, S.shape[1] + 1)[None, :]
    return ranks


def one_error(scores, truth) -> float:
    """Fraction of rows whose top-ranked label is irrelevant."""
    S, Y = _check_pair(scores, truth)
    keep = (Y == 1).any(axis=1)
    if not keep.any():
        raise UndefinedMetricError("every row lacks a relevant label")
    top = np.argmax(S[keep], axis=1)
    return float((Y[keep, top] == -1).mean())


def hamming_loss(predictions, truth) -> float:
    """Fraction of misclassified (instance, label) pairs."""
    P, Y = _check_pair(predictions, truth, scores_are_signs=True)
    return float((P != Y).mean())


def ranking_loss(scores, truth) -> float:
    """Mean fraction of (irrelevant, relevant) pairs ordered wrongly.

    A tied pair counts as a full error.
    """
    S, Y = _check_pair(scores, truth)
    q = Y.shape[1]
    n_pos = (Y == 1).sum(axis=1)
    keep = np.flatnonzero((n_pos > 0) & (n_pos < q))
    if keep.size == 0:
        raise UndefinedMetricError("every row has no relevant or no irrelevant label")
    total = 0.0
    for start in range(0, keep.size, 256):
        rows = keep[start : start + 256]
        s = S[rows]
        pos = Y[rows] == 1
        neg = ~pos
        # bad[i, j, k] marks s_ik <= s_ij for an (irrelevant j, relevant k) pair
        bad = (s[:, None, :] <= s[:, :, None]) & neg[:, :, None] & pos[:, None, :]
        counts = bad.sum(axis=(1, 2))
        np_rows = n_pos[rows]
        total += (counts / (np_rows * (q - np_rows))).sum()
    return float(total / keep.size)


def coverage(scores, truth) -> float:
    """Normalized mean rank depth needed to include every relevant label."""
    S, Y = _check_pair(scores, truth)
    n_pos = (Y == 1).sum(axis=1)
    keep = n_pos > 0
    if not keep.any():
        raise UndefinedMetricError("every row lacks a relevant label")
    ranks = label_ranks(S[keep])
    deepest = np.where(Y[keep] == 1, ranks, 0).max(axis=1)
    return float((deepest.mean() - 1.0) / Y.shape[1])


def average_precision(scores, truth) -> float:
    """Mean over relevant labels of the fraction of at-or-above-rank labels
    that are relevant."""
    S, Y = _check_pair(scores, truth)
    n_pos = (Y == 1).sum(axis=1)
    keep = n_pos > 0
    if not keep.any():
        raise UndefinedMetricError("every row lacks a relevant label")
    ranks = label_ranks(S[keep])
    relevant_ranks = np.where(Y[keep] == 1, ranks, np.inf)
    relevant_ranks.sort(axis=1)
    # After sorting, position u holds the (u+1)-th best relevant rank, so
    # exactly u+1 relevant labels sit at or above it.
    hits = np.arange(1, Y.shape[1] + 1, dtype=np.float64)
    terms = np.where(np.isfinite(relevant_ranks), hits / relevant_ranks, 0.0)
    per_row = terms.sum(axis=1) / n_pos[keep]
    return float(per_row.mean())


def evaluate_all(scores, truth) -> MetricReport:
    """All five metrics for one score matrix; hamming uses sign(score) with
    sign(0) = +1."""
    S, Y = _check_pair(scores, truth)
    predictions = np.where(S >= 0, 1, -1)
    n_pos = (Y == 1).sum(axis=1)
    skipped = int(((n_pos == 0) | (n_pos == Y.shape[1])).sum())
    return MetricReport(
        one_error=one_error(S, Y),
        hamming_loss=hamming_loss(predictions, Y),
        ranking_loss=ranking_loss(S, Y),
        coverage=coverage(S, Y),
        average_precision=average_precision(S, Y),
        skipped_instances=skipped,
    )


METRIC_NAMES = (
    "one_error",
    "hamming_loss",
    "ranking_loss",
    "coverage",
    "average_precision",
)

# Direction of improvement per metric: False = smaller is better.
HIGHER_IS_BETTER = {name: name == "average_precision" for name in METRIC_NAMES}
