"""Information content of landmark frames in frame-synchronous decoding.

The package measures how phone error rate reacts when per-frame
acoustic scores are dropped, replaced, or re-weighted before Viterbi
decoding: build a drop mask (regular, random, or landmark-guided),
rewrite the dropped rows, decode, score against the reference phones,
and test the change for significance.
"""

from .corpus_io import (
    MANNERS,
    NEG_INF,
    FrameMask,
    FrameTiming,
    PhoneAlignment,
    ScoreMatrix,
    format_alignment,
    parse_alignment,
    read_manner_table,
    read_mask,
    read_score_matrix,
    read_score_matrix_text,
    write_manner_table,
    write_mask,
    write_score_matrix,
    write_score_matrix_text,
)
from .decoder import (
    NORMALIZATION_TOL,
    DecodeResult,
    TransitionModel,
    collapse_states,
    read_transition_model,
    sequence_score,
    viterbi,
    write_transition_model,
)
from .errors import (
    BeamCollapse,
    DegenerateBaseline,
    DegenerateTest,
    EmptyInput,
    FormatError,
    InvalidConfig,
    InvalidPattern,
    LandmarkFramesError,
    MalformedAlignment,
    ParseError,
    ShapeError,
    UnknownPhone,
    UnknownSenone,
)
from .experiment import (
    BASELINE,
    REPORT_FORMATS,
    SWEEP_PARAMETERS,
    ExperimentConfig,
    StrategyOutcome,
    compute_outcomes,
    emit_report,
    format_plot_svg,
    format_report_csv,
    format_sweep_svg,
    load_experiment_config,
    run_experiment,
    sweep,
)
from .landmarks import (
    ANNOTATION_MODES,
    DEFAULT_TIMIT_MANNERS,
    END_OFFSET_FRAC,
    LANDMARK_TYPES,
    START_OFFSET_FRAC,
    AnnotationConfig,
    LandmarkSet,
    annotate,
    frame_map,
    landmark_fraction,
    landmark_frames,
    read_landmarks,
    write_landmarks,
)
from .scoring import (
    PERReport,
    align_edit,
    edit_ops,
    merge_reports,
    normalized_error_increment,
    per_increment,
    read_confusion_csv,
    read_report_csv,
    write_confusion_csv,
    write_report_csv,
)
from .stats import (
    EXACT_WILCOXON_MAX_N,
    FoldSpec,
    StatResult,
    cv_folds,
    summarize_cv,
    welch_t,
    wilcoxon_signed_rank,
    write_stats_csv,
)
from .strategy import (
    INTERP_TAPS,
    REPLACEMENT_METHODS,
    STRATEGY_KINDS,
    InterpFilter,
    StrategySpec,
    adjust_mask_to_rate,
    apply_replacement,
    apply_weights,
    design_interp_filter,
    landmark_weights,
    mask_identity,
    mask_landmark,
    mask_or,
    mask_random,
    mask_regular,
    mask_subtract,
    parse_strategy,
    realize_strategy,
    uniform_weights,
)
from .synth import SynthConfig, SynthCorpus, gen_corpus, parse_synth_config

__version__ = "0.1.0"
