"""Generalized zero-shot multi-label classification engine.

Visual features and class semantics are projected into a shared latent
space by small feedforward nets trained with a margin-ranking objective
plus alignment and semantic-consistency regularizers; inference scores
every class, seen or unseen, by cosine similarity in that space.
"""

from .checkpoints import Checkpoint, config_digest, load_checkpoint, save_checkpoint
from .data import (
    SPLIT_NAMES,
    ClassVocabulary,
    DataBundle,
    Dataset,
    LabelSpace,
    Sample,
    SemanticMatrix,
    Violation,
    average_positive_semantics,
    inductive_violations,
    load_manifest,
    save_manifest,
    validate_dataset,
)
from .exceptions import (
    CheckpointError,
    DegenerateVectorError,
    GzslError,
    InductiveViolationError,
    ManifestError,
    NonFiniteGradientError,
    NonFiniteLossError,
    NoPositiveLabelsError,
    UndefinedAurocError,
    ValidationError,
)
from .gradcheck import GradcheckResult, run_gradient_check
from .losses import (
    LossBreakdown,
    LossConfig,
    alignment_loss,
    consistency_loss,
    ranking_loss_batch,
    ranking_loss_image,
    relevance_scores,
    total_loss,
)
from .metrics import (
    MetricsReport,
    TopKMetrics,
    auroc,
    evaluate,
    gzsl_summary,
    infer_scores,
    per_class_auroc,
    read_report_json,
    topk_indices,
    topk_metrics,
    write_report_csv,
    write_report_json,
)
from .networks import (
    MlpParams,
    MlpSpec,
    ModelGrads,
    ModelParams,
    cosine_similarity,
    init_model_params,
    init_params,
    mlp_backward,
    mlp_forward,
    pairwise_cosine,
    row_norms,
)
from .optimizers import AdamState, PlateauScheduler, adam_step, init_adam
from .synthetic import (
    REFERENCE_SEEDS,
    SemanticGeometry,
    SynthSpec,
    bayes_reference_auroc,
    expected_label_rates,
    generate,
    reference_model_params,
    reference_spec,
    reference_train_config,
    true_scores,
)
from .training import (
    EncoderMode,
    EpochRecord,
    GridResult,
    GridSpec,
    RunRecord,
    TrainConfig,
    default_model_specs,
    grid_search,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "Checkpoint",
    "ClassVocabulary",
    "DataBundle",
    "Dataset",
    "CheckpointError",
    "DegenerateVectorError",
    "EncoderMode",
    "EpochRecord",
    "GradcheckResult",
    "GridResult",
    "GridSpec",
    "GzslError",
    "InductiveViolationError",
    "LabelSpace",
    "LossBreakdown",
    "LossConfig",
    "ManifestError",
    "MetricsReport",
    "MlpParams",
    "MlpSpec",
    "ModelGrads",
    "ModelParams",
    "NoPositiveLabelsError",
    "NonFiniteGradientError",
    "NonFiniteLossError",
    "PlateauScheduler",
    "REFERENCE_SEEDS",
    "RunRecord",
    "SPLIT_NAMES",
    "Sample",
    "SemanticGeometry",
    "SemanticMatrix",
    "SynthSpec",
    "TopKMetrics",
    "TrainConfig",
    "UndefinedAurocError",
    "ValidationError",
    "Violation",
    "adam_step",
    "alignment_loss",
    "auroc",
    "average_positive_semantics",
    "bayes_reference_auroc",
    "config_digest",
    "consistency_loss",
    "cosine_similarity",
    "default_model_specs",
    "evaluate",
    "expected_label_rates",
    "generate",
    "grid_search",
    "gzsl_summary",
    "inductive_violations",
    "infer_scores",
    "init_adam",
    "init_model_params",
    "init_params",
    "load_checkpoint",
    "load_manifest",
    "mlp_backward",
    "mlp_forward",
    "pairwise_cosine",
    "row_norms",
    "per_class_auroc",
    "ranking_loss_batch",
    "ranking_loss_image",
    "read_report_json",
    "reference_model_params",
    "reference_spec",
    "reference_train_config",
    "true_scores",
    "relevance_scores",
    "run_gradient_check",
    "save_checkpoint",
    "save_manifest",
    "topk_indices",
    "topk_metrics",
    "total_loss",
    "train",
    "validate_dataset",
    "write_report_csv",
    "write_report_json",
]
