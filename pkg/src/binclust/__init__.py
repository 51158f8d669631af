"""Model selection for non-parametric mixtures through binned latent class models.

Each variable is cut into quantile bins; the binned data follow a latent
class model whose EM also decides which variables discriminate between
components. The number of components and the relevant variables are chosen
by a penalized log-likelihood (BIC by default).
"""

__version__ = "0.1.0"

from .binning import BinningScheme, DiscretizedData, build_scheme, default_bin_count, discretize
from .data import Categorical, Continuous, Dataset, load_csv
from .lcm import FitResult, LcmParams, penalized_em
from .metrics import ari, selection_table, sensitivity, specificity
from .postfit import bin_densities, hard_partition, kernel_refine
from .selection import AIC, BIC, BinsConfig, PenaltyRule, SelectionResult, select_full, select_k_only

__all__ = [
    "__version__",
    "AIC",
    "BIC",
    "BinningScheme",
    "BinsConfig",
    "Categorical",
    "Continuous",
    "Dataset",
    "DiscretizedData",
    "FitResult",
    "LcmParams",
    "PenaltyRule",
    "SelectionResult",
    "ari",
    "bin_densities",
    "build_scheme",
    "default_bin_count",
    "discretize",
    "hard_partition",
    "kernel_refine",
    "load_csv",
    "penalized_em",
    "select_full",
    "select_k_only",
    "selection_table",
    "sensitivity",
    "specificity",
]
