"""Multi-view representation learning via co-trained autoencoders.

Per-view autoencoders capture what is specific to each view while a
weight-sharing fusion network distills what the views agree on into a
single joint latent, trained by an alternating two-stage schedule.
"""

from .adadelta import AdaDelta
from .cotrain import (
    LossTrace,
    SnapshotBank,
    TrainConfig,
    TrainResult,
    early_stop_check,
    run_cotraining,
    run_stage1,
    run_stage2,
    write_traces_csv,
)
from .data import (
    MinMaxScale,
    MultiViewDataset,
    SynthSpec,
    batches,
    load_dataset,
    save_dataset,
    split,
    synth_multiview,
)
from .estimator import CoTrainedFusion
from .evaluation import (
    GmmModel,
    LogRegModel,
    MetricsReport,
    accuracy,
    evaluate_protocol,
    fit_gmm,
    jaccard,
    macro_f1,
    nmi,
    predict_gmm,
    predict_logreg,
    train_logreg,
)
from .exceptions import DataError, ShapeError, StateError
from .networks import (
    ArchSpec,
    Checkpoint,
    DecoderParams,
    EncoderParams,
    SupervisedParams,
    ae_backward,
    ae_forward,
    encode_views,
    init_model,
    joint_latent,
    load_checkpoint,
    predict_proba,
    save_checkpoint,
    sup_backward,
    sup_forward,
)

__version__ = "0.1.0"

__all__ = [
    "AdaDelta",
    "ArchSpec",
    "Checkpoint",
    "CoTrainedFusion",
    "DataError",
    "DecoderParams",
    "EncoderParams",
    "GmmModel",
    "LogRegModel",
    "LossTrace",
    "MetricsReport",
    "MinMaxScale",
    "MultiViewDataset",
    "ShapeError",
    "SnapshotBank",
    "StateError",
    "SupervisedParams",
    "SynthSpec",
    "TrainConfig",
    "TrainResult",
    "accuracy",
    "ae_backward",
    "ae_forward",
    "batches",
    "early_stop_check",
    "encode_views",
    "evaluate_protocol",
    "fit_gmm",
    "init_model",
    "jaccard",
    "joint_latent",
    "load_checkpoint",
    "load_dataset",
    "macro_f1",
    "nmi",
    "predict_gmm",
    "predict_logreg",
    "predict_proba",
    "run_cotraining",
    "run_stage1",
    "run_stage2",
    "save_checkpoint",
    "save_dataset",
    "split",
    "synth_multiview",
    "train_logreg",
    "write_traces_csv",
]
