"""Heart-disease survey analysis: balanced resampling, seven classifiers with
embedded feature importance, repeated-sampling feature-selection stability, and
maximum-likelihood fits of survey-administration times."""
__version__ = "0.1.0"

from ._core import BACKEND as KERNEL_BACKEND  # noqa: E402
from .classifiers import (ALL_KINDS, IMPORTANCE_KINDS, FeatureImportance, Hyperparams, ModelKind,  # noqa: E402
                          TrainedModel, importance, predict, top_k, train)
from .dataset import (ClassCounts, Dataset, FeatureSchema, brfss_schema, class_counts, load_csv,  # noqa: E402
                      normalize, synthesize)
from .metrics import ConfusionMatrix, MetricsReport, compute, confusion  # noqa: E402
from .sampling import SampleSpec, balanced_sample, train_test_split  # noqa: E402
from .stability import StabilityConfig, StabilityResult, aggregate, reduce_dataset, run_stability  # noqa: E402
from .surveytime import best_fit, fit_logistic, fit_triangular, reduction_percent  # noqa: E402
