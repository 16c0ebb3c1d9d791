"""Pose lexicon learning: translate quantized skeleton key frames into semantic poses."""
from .codebook import VisualCodebook, VisualSentence, fit_kmeans, quantize, quantize_sequence
from .config import PipelineConfig, load_config
from .decoder import (
    ClassificationResult,
    InstructionSet,
    best_alignment_score,
    classify,
    classify_zero_shot,
    compose_instruction,
)
from .keyframes import (
    EigenProfile,
    KeyFrameSet,
    detect_keyframes,
    eigen_profile,
    extract_keyframes,
    frame_covariance,
    gaussian_smooth,
    largest_eigenvalue,
)
from .lexicon import (
    NULL,
    ParallelCorpus,
    PoseLexicon,
    SemanticInstruction,
    SentencePair,
    TranslationTable,
    em_iteration,
    extract_lexicon,
    init_uniform,
    likelihood_enumerated,
    likelihood_factored,
    pair_posteriors,
    train,
)
from .skeleton import Frame, Joint, SkeletonSequence, frame_features, load_sequences, normalize

__version__ = "0.1.0"
