"""Multi-label learning with cluster-center data augmentation.

The training set is enlarged with virtual examples (k-means centers carrying
averaged soft labels), a smoothness penalty ties each instance's prediction
to its center's prediction, and the resulting regularized least-squares
objective is solved in closed form, either linearly or through a kernel.
Evaluation ships the five standard multi-label metrics plus the
Friedman/Nemenyi comparison protocol.
"""

from ._accel import BACKEND
from .augment import Augmentation, ClusterAssignment, expand_centers, kmeans, make_virtual_examples
from .datasets import (
    Dataset,
    DatasetMeta,
    NormStats,
    compute_stats,
    load_arff,
    load_csv,
    normalize,
    random_split,
    save_csv,
)
from .harness import (
    GridSpec,
    PAPER_GRID,
    REDUCED_GRID,
    TrialResult,
    cross_validate,
    grid_search,
    repeated_trials,
    synthetic_blobs,
)
from .metrics import (
    MetricReport,
    average_precision,
    coverage,
    evaluate_all,
    hamming_loss,
    one_error,
    ranking_loss,
)
from .model_io import load_model, save_model
from .solver import (
    Hyperparams,
    KernelModel,
    KernelSpec,
    LinearModel,
    gaussian_sigma,
    gradient,
    kernel_matrix,
    objective,
    predict_labels,
    predict_scores,
    solve_kernel,
    solve_linear,
    train_model,
)
from .stats import (
    FriedmanResult,
    NemenyiResult,
    RankTable,
    average_ranks,
    friedman,
    nemenyi_cd,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Augmentation",
    "ClusterAssignment",
    "Dataset",
    "DatasetMeta",
    "FriedmanResult",
    "GridSpec",
    "Hyperparams",
    "KernelModel",
    "KernelSpec",
    "LinearModel",
    "MetricReport",
    "NemenyiResult",
    "NormStats",
    "PAPER_GRID",
    "RankTable",
    "REDUCED_GRID",
    "TrialResult",
    "average_precision",
    "average_ranks",
    "compute_stats",
    "coverage",
    "cross_validate",
    "evaluate_all",
    "expand_centers",
    "friedman",
    "gaussian_sigma",
    "gradient",
    "grid_search",
    "hamming_loss",
    "kernel_matrix",
    "kmeans",
    "load_arff",
    "load_csv",
    "load_model",
    "make_virtual_examples",
    "nemenyi_cd",
    "normalize",
    "objective",
    "one_error",
    "predict_labels",
    "predict_scores",
    "random_split",
    "ranking_loss",
    "repeated_trials",
    "save_csv",
    "save_model",
    "solve_kernel",
    "solve_linear",
    "synthetic_blobs",
    "train_model",
]
