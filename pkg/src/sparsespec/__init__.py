"""Sparse spectral estimation from shifted undersampled streams.

A K-sparse spectrum is recovered at full-grid resolution from M short
streams taken at a coprime (stride, shift) pair: aliased peaks are
disambiguated by intersecting candidate frequency sets, and bins where
several components collide are separated by small matrix-pencil
decompositions of the per-stream coefficient sequence.
"""
from .aliasing import (
    BezoutPair,
    CandidateSet,
    Generator,
    bezout,
    candidate_set,
    circular_distance_hz,
    resolve_bezout,
    resolve_match,
)
from .core import (
    ComplexSignal,
    PeakList,
    Spectrum,
    StreamSet,
    StreamSpec,
    budget_stream_length,
    circular_shift,
    dft,
    dft_direct,
    extract_streams,
    idft,
    max_stream_length,
    select_peaks,
)
from .errors import (
    BadShape,
    DegenerateGenerator,
    IllConditionedPencil,
    IllConditionedVandermonde,
    IndexBudgetExceeded,
    NoConvergence,
    NoIntersection,
    NotCoprime,
    NoUniqueIntersection,
    SparseSpecError,
    SvdFailure,
)
from .lab import (
    EXPERIMENT_1_TONES,
    EXPERIMENT_2_MUS,
    EXPERIMENT_2_REFERENCE_SAMPLES,
    EvalReport,
    SynthSpec,
    ToneSpec,
    evaluate,
    experiment_1_config,
    experiment_1_spec,
    experiment_2_config,
    experiment_2_spec,
    run_experiment_1,
    run_experiment_2,
    run_selftest,
    synthesize,
)
from .pipeline import (
    HybridConfig,
    RecoveredComponent,
    SparseSpectrum,
    analyze,
    build_prony_sequences,
    dense_reference,
    shifted_coeffs_shortcut,
)
from .prony import (
    ExponentialTerm,
    OrderEstimate,
    PronySequence,
    estimate_order,
    hankel,
    model_residual,
    no_collision_test,
    pencil_decompose,
    svd_small,
)

__version__ = "0.1.0"

__all__ = [
    "BadShape",
    "BezoutPair",
    "CandidateSet",
    "ComplexSignal",
    "DegenerateGenerator",
    "EXPERIMENT_1_TONES",
    "EXPERIMENT_2_MUS",
    "EXPERIMENT_2_REFERENCE_SAMPLES",
    "EvalReport",
    "ExponentialTerm",
    "Generator",
    "HybridConfig",
    "IllConditionedPencil",
    "IllConditionedVandermonde",
    "IndexBudgetExceeded",
    "NoConvergence",
    "NoIntersection",
    "NotCoprime",
    "NoUniqueIntersection",
    "OrderEstimate",
    "PeakList",
    "PronySequence",
    "RecoveredComponent",
    "SparseSpecError",
    "SparseSpectrum",
    "Spectrum",
    "StreamSet",
    "StreamSpec",
    "SvdFailure",
    "SynthSpec",
    "ToneSpec",
    "analyze",
    "bezout",
    "budget_stream_length",
    "build_prony_sequences",
    "candidate_set",
    "circular_distance_hz",
    "circular_shift",
    "dense_reference",
    "dft",
    "dft_direct",
    "estimate_order",
    "evaluate",
    "experiment_1_config",
    "experiment_1_spec",
    "experiment_2_config",
    "experiment_2_spec",
    "extract_streams",
    "hankel",
    "idft",
    "max_stream_length",
    "model_residual",
    "no_collision_test",
    "pencil_decompose",
    "resolve_bezout",
    "resolve_match",
    "run_experiment_1",
    "run_experiment_2",
    "run_selftest",
    "select_peaks",
    "shifted_coeffs_shortcut",
    "svd_small",
    "synthesize",
]
