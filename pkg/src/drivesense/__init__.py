"""Driving-context classification from multimodal smartwatch sensor logs.

Pipeline stages: ingest sensor CSV logs onto a shared 10 Hz grid, slice 1 s
windows with 50% overlap, extract 30 features per channel, balance classes
(inverse-frequency weights or SMOTE), train tree ensembles, and evaluate with
stratified cross-validation, permutation importance, and modality ablation.
"""

from .balance import BalanceMode, BalanceSpec, ClassWeights, class_weights, smote_oversample
from .errors import (
    AlignmentError,
    AnnotationError,
    DataError,
    FeatureError,
    ModelError,
    ParseError,
    PipelineError,
    TaxonomyError,
)
from .evaluate import (
    ConfusionMatrix,
    CvSpec,
    EvalReport,
    ImportanceReport,
    f1_scores,
    modality_ablation,
    permutation_importance,
    run_cv,
    stratified_kfold,
)
from .features import (
    ALL_FEATURES,
    FeatureMatrix,
    FeatureSet,
    FeatureVector,
    benford_correlation,
    extract_features,
    impute_and_assemble,
    mean_second_derivative_central,
    reoccurring_sums,
    spectral_entropy,
)
from .forest import (
    Forest,
    ForestParams,
    SplitMode,
    TreeNode,
    TreeParams,
    fit_forest,
    fit_tree,
    gini_impurity,
    load_forest,
    model_params,
    predict,
    predict_proba,
    save_forest,
)
from .ingest import (
    ChannelKind,
    RawChannel,
    SamplingSpec,
    UniformTrip,
    align_and_resample,
    derive_magnitude,
    parse_channel_log,
    parse_triaxial_log,
)
from .labels import LabeledWindowSet, LabelTrack, Taxonomy, canonical_taxonomy, label_windows, load_annotations
from .synth import ClassProfile, ChannelSignal, SynthSpec, default_profiles, generate
from .windows import Window, WindowSpec, slice_windows

__version__ = "0.1.0"
