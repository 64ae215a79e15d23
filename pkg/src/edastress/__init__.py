"""Stress classification from raw wrist EDA with a from-scratch 1D CNN.

The library covers the full experiment pipeline: per-subject normalization
and sliding-window segmentation, seeded training of the two-conv-layer
network, bi-/tri-affective evaluation with 10-fold cross-validation,
leave-one-subject-out analysis, and incremental personalization of the
population model on a held-out subject.
"""

__version__ = "0.1.0"

from .pipeline import (
    CLASS_NAMES,
    SAMPLING_RATE_HZ,
    CsvFormatError,
    DegenerateSignalError,
    EdaRecording,
    EdaWindow,
    PipelineConfig,
    StratificationError,
    WindowedDataset,
    build_corpus,
    kfold,
    load_corpus,
    load_recording,
    make_split,
    min_max_normalize,
    segment,
    write_recording_csv,
)
from .synth import GeneratorProfile, default_subject_tags, synth_corpus, synth_subject
from .network import ModelConfig, ModelParams, backward, forward, forward_batch, init_model
from .optim import AdamState, SgdState, adam_step, init_adam, init_sgd, sgd_step
from .metrics import Metrics, compute_metrics, confusion_matrix, metrics_from_confusion
from .training import (
    CvReport,
    TrainConfig,
    TrainReport,
    assemble_task,
    cross_validate,
    evaluate,
    predict,
    train,
)
from .personalization import (
    LosoFoldReport,
    LosoReport,
    PersonalizationReport,
    loso_all,
    loso_run,
    personalize,
)
from .modelio import ModelFormatError, load_model, save_model
from .reports import emit_plot_data
