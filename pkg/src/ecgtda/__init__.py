"""ECG arrhythmia toolkit: topological features, preprocessing, autoencoder
scoring and patient-wise evaluation."""

from .autoencoder import (
    AEModel,
    TrainConfig,
    ae_channels,
    ae_forward,
    ae_init,
    ae_train,
    load_model,
    save_model,
)
from .errors import (
    InvalidInputError,
    NumericError,
    ParseError,
    TruncatedDataError,
    UnsupportedFormatError,
)
from .evaluation import (
    ChannelMask,
    ExperimentConfig,
    MetricsReport,
    SplitPlan,
    compute_metrics,
    leakage_audit,
    make_splits,
    run_ablation_grid,
    run_experiment,
)
from .features import feature_layout, feature_vector, pca_fit, pca_project
from .preprocess import PreprocessConfig, preprocess_signal, remove_baseline
from .segmentation import BeatWindow, slice_windows, standardize_length
from .tda import (
    BettiCurve,
    PersistenceBarcode,
    PersistenceInterval,
    Signal,
    betti_curve,
    betti_pair,
    sublevel_barcode,
    superlevel_barcode,
)
from .wfdb import AnnotatedRecord, build_manifest, read_header, read_record

__version__ = "0.1.0"
