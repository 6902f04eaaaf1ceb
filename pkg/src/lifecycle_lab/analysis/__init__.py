from .dataset import AnalysisDataset
from .density import default_grid, kernel_density, silverman_bandwidth
from .measures import (
    DebtAversionIndex,
    DeviationMeasures,
    compute_da,
    compute_measures,
    learning_deltas,
)
from .regression import RegressionResult, ols_clustered
from .stats import (
    MannWhitneyResult,
    WilcoxonResult,
    cohens_d,
    descriptive_stats,
    mann_whitney_u,
    wilcoxon_signed_rank,
)

from .tables import load_period_rows, run_analysis

__all__ = [
    "AnalysisDataset",
    "DebtAversionIndex",
    "DeviationMeasures",
    "MannWhitneyResult",
    "RegressionResult",
    "WilcoxonResult",
    "cohens_d",
    "compute_da",
    "compute_measures",
    "default_grid",
    "descriptive_stats",
    "kernel_density",
    "learning_deltas",
    "load_period_rows",
    "mann_whitney_u",
    "ols_clustered",
    "run_analysis",
    "silverman_bandwidth",
    "wilcoxon_signed_rank",
]
