"""genebench: synthetic gene-expression cohorts with known causal genes,
from-scratch feature-selection and classification methods, and a harness
that scores them on accuracy, false discovery, false non-discovery, and
selection stability."""

from .simkit import (
    CorrelationParams,
    DiseaseSpec,
    ExpressionMatrix,
    LabeledDataset,
    balanced_cutoff,
    gen_cohort,
    label,
    make_disease_spec,
    oversample,
)
from .hypotest import AdjustmentResult, TestResult, adjust, testwise_scan, welch_t
from .screen import GeneRanking, backward_eliminate, cut_to, rsquare_rank
from .learners import (
    FittedModel,
    ModelSpec,
    Posterior,
    fit,
    gene_importance,
    predict,
    stepwise_select,
)
from .evalkit import (
    EvalReport,
    StabilityReport,
    kfold_accuracy,
    loocv,
    sbc,
    selection_metrics,
    split_eval,
    stability_study,
)
from .runner import ExperimentConfig, ReportBundle, load_dataset, run, save_dataset

__version__ = "0.1.0"
