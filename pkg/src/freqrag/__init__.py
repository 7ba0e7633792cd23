"""freqrag: frequency-domain fusion of text/image embeddings with
fidelity-based knowledge retrieval and a focal-loss classifier."""

__version__ = "0.1.0"

from .classifier import (
    AdamState,
    ModelDims,
    ModelParams,
    Prediction,
    TrainConfig,
    TrainHistory,
    adam_step,
    backward,
    cosine_anneal,
    focal_loss,
    forward,
    init_params,
    load_model,
    predict,
    save_model,
    train,
)
from .dataio import (
    KnowledgeBase,
    KnowledgeEntry,
    Sample,
    SampleSet,
    SynthConfig,
    read_dataset,
    read_knowledge_base,
    synth_dataset,
    write_dataset,
    write_knowledge_base,
)
from .errors import DataError, FreqragError, NumericError
from .evaluation import (
    ConfusionMatrix,
    CVReport,
    FoldAssignment,
    confusion,
    cross_validate,
    prf1,
    roc_auc,
    stratified_folds,
)
from .fusion import GateParams, ProjectionParams, concat_fuse, gated_fuse, project
from .retrieval import (
    QuantumState,
    RetrievalHit,
    RetrievedContext,
    amplitude_encode,
    cosine_similarity,
    quantum_similarity,
    top_k,
    topk_avg,
)
from .spectral import (
    ComplexSpectrum,
    active_backend,
    irfft,
    power_spectrum,
    rfft,
    to_freq_feature,
)
