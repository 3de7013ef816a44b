"""Distribution-shift robustness evaluation toolkit.

Fits baseline accuracy curves in logit space, scores the effective and
relative robustness of interventions (with a residual-based significance
test), trains low-shot classifier heads on frozen embeddings, performs
weight-space ensembling, curates class-balanced subsets, and emits reports
and scatter plots.  See the ``demos/`` directory for narrative walkthroughs
of each capability and the ``shiftbench`` CLI for the pipeline commands.
"""

from .classifiers import (
    BASELINEPP,
    CENTROID,
    LOGISTIC,
    ClassifierModel,
    EmbeddingMatrix,
    LabelVector,
    TrainConfig,
    evaluate_accuracy,
    model_from_paramset,
    model_to_paramset,
    predict,
    train_baselinepp,
    train_logistic_regression,
    train_mean_centroid,
)
from .curation import (
    FIXED_PER_CLASS,
    K_PER_CLASS,
    RATIO,
    Manifest,
    SubsetSpec,
    VerificationReport,
    curate,
    read_manifest,
    verify_subset,
    write_manifest,
)
from .ensembles import (
    ParamSet,
    ParamSetMismatchError,
    SoupCandidate,
    SoupConfig,
    SoupConfigRanges,
    greedy_soup,
    interpolate,
    sample_soup_config,
    uniform_soup,
)
from .metrics import (
    AccuracyPoint,
    LogitLinearFit,
    ResidualStats,
    RobustnessAssessment,
    SignificanceConfig,
    assess_across_regimes,
    assess_significance,
    beta_lambda,
    clamp_fraction,
    effective_robustness,
    fit_beta,
    inv_logit,
    logit,
    predict_beta,
    relative_robustness,
)
from .records import (
    AccuracyRecord,
    DatasetProfile,
    average_ood,
    builtin_profile,
    load_accuracy_records,
    standard_points,
)
from .report import build_report, format_report_table, report_to_json

__version__ = "0.1.0"
