"""End-to-end sparse estimation from shifted undersampled streams.

``analyze`` runs the whole chain: stream extraction, per-stream DFTs, peak
picking on the reference stream, collision-order estimation and pencil
decomposition per peak bin, ambiguity resolution against the coprime shift
step, and a final merge onto the fine grid. ``dense_reference`` is the
brute-force single-DFT estimator used for oracle comparisons and budget
studies.

Amplitudes everywhere are in tone units: a unit-amplitude complex tone
sitting on the analysis grid comes back with amplitude 1, whether it went
through the hybrid chain or the dense reference.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .aliasing import (
    DEFAULT_AMBIGUITY_FACTOR,
    Generator,
    bezout,
    candidate_set,
    resolve_bezout,
    resolve_match,
)
from .core import (
    ComplexSignal,
    PeakList,
    Spectrum,
    StreamSpec,
    budget_stream_length,
    dft,
    extract_streams,
    select_peaks,
)
from .errors import (
    BadShape,
    IllConditionedPencil,
    IllConditionedVandermonde,
    NoIntersection,
    NotCoprime,
    NoUniqueIntersection,
    SvdFailure,
)
from .prony import (
    DEFAULT_EXTRA_TERMS,
    DEFAULT_SIGMA_REL_TOL,
    DEFAULT_UNIT_CIRCLE_DELTA,
    ExponentialTerm,
    PronySequence,
    estimate_order,
    model_residual,
    pencil_decompose,
    svd_small,
)

RESOLVERS = ("match", "bezout")
SHORTCUT_CONDITION_CAP = 1e10


@dataclass(frozen=True)
class HybridConfig:
    """Knobs for one hybrid analysis run.

    u is the undersampling stride, s the stream-to-stream shift (coprime
    with u), M the stream count. ``threshold`` is in tone units: a peak
    survives when its per-sample amplitude reaches it. ``stream_len`` pins
    the per-stream length; None takes the longest the signal supports.
    ``max_peaks`` caps how many reference-stream peaks are pursued, largest
    first; None pursues all of them.
    """

    u: int
    s: int
    M: int
    threshold: float = 0.1
    resolver: str = "match"
    sigma_rel_tol: float = DEFAULT_SIGMA_REL_TOL
    extra_terms: int = DEFAULT_EXTRA_TERMS
    delta: float = DEFAULT_UNIT_CIRCLE_DELTA
    M_rows: int | None = None
    wrap: bool = False
    shortcut_shifted: bool = False
    merge_tol_hz: float | None = None
    match_tol_hz: float | None = None
    ambiguity_factor: float = DEFAULT_AMBIGUITY_FACTOR
    stream_len: int | None = None
    max_peaks: int | None = None
    threads: int = 1

    def validate(self) -> None:
        if self.u < 1 or self.s < 1:
            raise ValueError("u and s must be positive integers")
        if math.gcd(self.u, self.s) != 1:
            raise NotCoprime(f"u={self.u} and s={self.s} share a factor")
        if self.M < 2:
            raise ValueError("at least 2 streams are required")
        if self.threshold < 0:
            raise ValueError("threshold must be nonnegative")
        if self.resolver not in RESOLVERS:
            raise ValueError(f"resolver must be one of {RESOLVERS}")
        if self.extra_terms < 0:
            raise ValueError("extra_terms must be nonnegative")
        if not 0 < self.delta < 1:
            raise ValueError("delta must sit in (0, 1)")
        if self.stream_len is not None and self.stream_len < 1:
            raise ValueError("stream_len must be positive when given")
        if self.max_peaks is not None and self.max_peaks < 1:
            raise ValueError("max_peaks must be positive when given")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass(frozen=True)
class RecoveredComponent:
    """One estimated tone on the fine grid.

    ``collision_order`` is how many components shared the source bin,
    ``match_distance_hz`` the candidate-set agreement of the resolution
    (zero for the Bezout resolver), ``residual`` the relative model misfit
    of the pencil fit this term came from.
    """

    freq_hz: float
    amplitude: complex
    source_bin: int
    collision_order: int
    match_distance_hz: float = 0.0
    residual: float = 0.0

    @property
    def magnitude(self) -> float:
        return abs(self.amplitude)


@dataclass(frozen=True)
class SparseSpectrum:
    """Analysis result: components, the config that produced them, and
    run diagnostics (per-bin order estimates, sample counts, failures)."""

    components: tuple[RecoveredComponent, ...]
    config: HybridConfig | None
    rate_hz: float
    resolution_hz: float
    diagnostics: dict = field(default_factory=dict)


def _stream_dfts(streams, threads: int) -> list[Spectrum]:
    # Order-preserving map keeps results deterministic at any worker count.
    if threads <= 1:
        return [dft(s) for s in streams]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(dft, streams))


def build_prony_sequences(stream_dfts: list[Spectrum], peaks: PeakList,
                          shift_step: int) -> dict[int, PronySequence]:
    """Assemble P(m) = X_m[bin] across the M stream spectra, per peak bin."""
    out: dict[int, PronySequence] = {}
    for b in peaks.bin_indices():
        values = np.array([spec.bins[b] for spec in stream_dfts])
        out[b] = PronySequence(values=values, shift_step=shift_step)
    return out


def shifted_coeffs_shortcut(x: ComplexSignal, peaks: PeakList,
                            spec: StreamSpec,
                            m: int) -> tuple[np.ndarray, float]:
    """Shifted-stream DFT values at the peak bins from only K samples.

    Stream m restricted to the K peak bins obeys, at sample l,
    sum_k y_k * z_k^l with nodes z_k = exp(2i pi bin_k / n). Solving the
    K x K Vandermonde system against (x[u*l + m*s])_{l<K} therefore yields
    the stream-m DFT values (n * y) without touching the other n - K
    samples. Returns (values aligned with the peak order, condition number
    of the node matrix).

    Raises:
        IllConditionedVandermonde: node condition beyond 1e10; callers fall
            back to the full stream DFT.
    """
    if m < 1:
        raise ValueError("shortcut applies to shifted streams (m >= 1)")
    n = spec.resolve_length(len(x))
    bins = list(peaks.bin_indices())
    k = len(bins)
    if k == 0:
        return np.zeros(0, dtype=np.complex128), 1.0
    if k > n:
        raise BadShape(f"{k} peaks exceed stream length {n}")
    idx = spec.u * np.arange(k) + m * spec.s
    if spec.wrap:
        idx = idx % len(x)
    rhs = x.samples[idx]
    nodes = np.exp(2j * np.pi * np.asarray(bins, dtype=float) / n)
    vand = nodes[None, :] ** np.arange(k)[:, None]
    _, sv, _ = svd_small(vand)
    cond = math.inf if sv[-1] <= 0.0 else float(sv[0] / sv[-1])
    if cond > SHORTCUT_CONDITION_CAP:
        raise IllConditionedVandermonde(
            f"node condition {cond:.3e} beyond {SHORTCUT_CONDITION_CAP:.0e}")
    y = np.linalg.solve(vand, rhs)
    return n * y, cond


def _two_sample_terms(seq: PronySequence) -> list[ExponentialTerm]:
    # With only two streams the ratio P(1)/P(0) is the whole model; this is
    # the no-collision fallback when a pencil cannot be formed.
    p0, p1 = complex(seq.values[0]), complex(seq.values[1])
    if p0 == 0:
        raise IllConditionedPencil("reference coefficient is zero")
    return [ExponentialTerm(amplitude=p0, z=p1 / p0)]


def _merge_components(comps: list[RecoveredComponent], tol_hz: float,
                      rate_hz: float) -> list[RecoveredComponent]:
    if len(comps) < 2 or tol_hz <= 0:
        return comps
    comps = sorted(comps, key=lambda c: c.freq_hz)
    clusters: list[list[RecoveredComponent]] = [[comps[0]]]
    for c in comps[1:]:
        if c.freq_hz - clusters[-1][-1].freq_hz <= tol_hz:
            clusters[-1].append(c)
        else:
            clusters.append([c])
    if len(clusters) > 1:
        # Frequencies are circular: close the seam at 0 / rate.
        if comps[0].freq_hz + rate_hz - comps[-1].freq_hz <= tol_hz:
            clusters[0] = clusters.pop() + clusters[0]
    merged = []
    for cluster in clusters:
        total = sum(c.amplitude for c in cluster)
        rep = max(cluster, key=lambda c: (abs(c.amplitude), -c.freq_hz))
        merged.append(replace(rep, amplitude=complex(total)))
    return merged


def analyze(x: ComplexSignal, cfg: HybridConfig) -> SparseSpectrum:
    """Recover a sparse spectrum at full-grid resolution from M streams.

    Per-peak failures (unresolvable ambiguity, degenerate pencil) are
    recorded in diagnostics["failures"] and do not abort the run. The run
    is deterministic for a fixed config and input, at any thread count.
    """
    cfg.validate()
    spec = StreamSpec(u=cfg.u, s=cfg.s, M=cfg.M, n=cfg.stream_len,
                      wrap=cfg.wrap)
    n = spec.resolve_length(len(x))
    pinned = StreamSpec(u=cfg.u, s=cfg.s, M=cfg.M, n=n, wrap=cfg.wrap)
    rate = x.rate_hz
    fine_res = rate / (cfg.u * n)
    accessed: list[np.ndarray] = []
    per_stream_samples: list[int] = []
    shortcut_conds: list[float] = []
    shortcut_fallbacks = 0

    def stream_indices(m: int) -> np.ndarray:
        idx = cfg.u * np.arange(n) + m * cfg.s
        return idx % len(x) if cfg.wrap else idx

    if cfg.shortcut_shifted:
        idx0 = stream_indices(0)
        ref_stream = ComplexSignal(samples=x.samples[idx0],
                                   rate_hz=rate / cfg.u, origin_index=0)
        accessed.append(idx0)
        per_stream_samples.append(n)
    else:
        streams = extract_streams(x, pinned)
        ref_stream = streams.streams[0]
        for m in range(cfg.M):
            accessed.append(stream_indices(m))
            per_stream_samples.append(n)

    ref_dft = dft(ref_stream)
    peaks = select_peaks(ref_dft, cfg.threshold * n)
    if cfg.max_peaks is not None and len(peaks.entries) > cfg.max_peaks:
        peaks = PeakList(entries=peaks.entries[:cfg.max_peaks],
                         threshold=peaks.threshold)
    peak_bins = list(peaks.bin_indices())

    if cfg.shortcut_shifted:
        rows = {b: np.empty(cfg.M, dtype=np.complex128) for b in peak_bins}
        for b in peak_bins:
            rows[b][0] = ref_dft.bins[b]
        k = len(peak_bins)
        for m in range(1, cfg.M):
            try:
                vals, cond = shifted_coeffs_shortcut(x, peaks, pinned, m)
                shortcut_conds.append(cond)
                idx = (cfg.u * np.arange(k) + m * cfg.s)
                accessed.append(idx % len(x) if cfg.wrap else idx)
                per_stream_samples.append(k)
            except IllConditionedVandermonde:
                shortcut_fallbacks += 1
                idx = stream_indices(m)
                fallback = ComplexSignal(samples=x.samples[idx],
                                         rate_hz=rate / cfg.u,
                                         origin_index=m * cfg.s)
                vals = dft(fallback).bins[peak_bins]
                accessed.append(idx)
                per_stream_samples.append(n)
            for b, val in zip(peak_bins, vals):
                rows[b][m] = val
        sequences = {b: PronySequence(values=rows[b], shift_step=cfg.s)
                     for b in peak_bins}
    else:
        specs = [ref_dft] + _stream_dfts(streams.streams[1:], cfg.threads)
        sequences = build_prony_sequences(specs, peaks, cfg.s)

    components: list[RecoveredComponent] = []
    failures: list[dict] = []
    bin_reports: list[dict] = []
    bez = bezout(cfg.u, cfg.s) if cfg.resolver == "bezout" else None

    for b in peak_bins:
        seq = sequences[b]
        gen_u = Generator(value=complex(np.exp(2j * np.pi * b / n)),
                          step=cfg.u)
        u_set = candidate_set(gen_u, rate)
        try:
            if cfg.M == 2:
                rank = 1
                gap = math.inf
                terms = _two_sample_terms(seq)
            else:
                est = estimate_order(seq, cfg.sigma_rel_tol)
                rank = est.rank
                gap = est.gap_ratio
                if rank == 0:
                    bin_reports.append({"bin": b, "rank": 0, "gap": gap,
                                        "kept": 0, "residual": 0.0})
                    continue
                cap = (cfg.M - 1) // 2
                fit_order = min(cap, rank + cfg.extra_terms)
                terms = pencil_decompose(seq, fit_order, rows=cfg.M_rows)
            residual = model_residual(seq, terms)
            on_circle = [t for t in terms
                         if abs(abs(t.z) - 1.0) <= cfg.delta]
            kept = on_circle[:rank]
            for term in kept:
                gen_s = Generator(value=term.z, step=cfg.s,
                                  unit_tol=cfg.delta)
                if cfg.resolver == "bezout":
                    freq, _ = resolve_bezout(gen_u, gen_s, bez, rate)
                    dist = 0.0
                else:
                    s_set = candidate_set(gen_s, rate)
                    freq, dist = resolve_match(
                        u_set, s_set, tol_hz=cfg.match_tol_hz,
                        ambiguity_factor=cfg.ambiguity_factor)
                components.append(RecoveredComponent(
                    freq_hz=float(freq),
                    amplitude=complex(term.amplitude) / n,
                    source_bin=int(b),
                    collision_order=len(kept),
                    match_distance_hz=float(dist),
                    residual=residual))
            bin_reports.append({"bin": b, "rank": rank, "gap": gap,
                                "kept": len(kept), "residual": residual})
        except (NoIntersection, NoUniqueIntersection, IllConditionedPencil,
                SvdFailure, BadShape) as exc:
            failures.append({"bin": int(b), "error": type(exc).__name__,
                             "detail": str(exc)})

    merge_tol = cfg.merge_tol_hz
    if merge_tol is None:
        merge_tol = fine_res / 2.0
    components = _merge_components(components, merge_tol, rate)
    components.sort(key=lambda c: (-abs(c.amplitude), c.freq_hz))

    diagnostics = {
        "stream_length": n,
        "budget_stream_length": budget_stream_length(
            len(x), cfg.u, cfg.s, cfg.M),
        "fine_grid_size": cfg.u * n,
        "samples_used": int(np.unique(np.concatenate(accessed)).size),
        "per_stream_samples": per_stream_samples,
        "peak_bins": [int(b) for b in peak_bins],
        "bin_reports": bin_reports,
        "failures": failures,
        "threads": cfg.threads,
        "resolver": cfg.resolver,
        "shortcut_shifted": cfg.shortcut_shifted,
        "shortcut_conditions": shortcut_conds,
        "shortcut_fallbacks": shortcut_fallbacks,
    }
    if bez is not None:
        diagnostics["bezout_pair"] = (bez.t, bez.v)
    return SparseSpectrum(components=tuple(components), config=cfg,
                          rate_hz=rate, resolution_hz=fine_res,
                          diagnostics=diagnostics)


def dense_reference(x: ComplexSignal, threshold: float,
                    max_terms: int | None = None) -> SparseSpectrum:
    """Single full-length DFT estimator over the same tone-unit threshold.

    The baseline the hybrid is judged against: every bin of the full
    transform whose per-sample amplitude reaches the threshold becomes a
    component.
    """
    big = len(x)
    spectrum = dft(x)
    peaks = select_peaks(spectrum, threshold * big)
    comps = []
    for b, _ in peaks.entries:
        comps.append(RecoveredComponent(
            freq_hz=float(b * spectrum.bin_hz),
            amplitude=complex(spectrum.bins[b]) / big,
            source_bin=int(b),
            collision_order=1))
        if max_terms is not None and len(comps) >= max_terms:
            break
    comps.sort(key=lambda c: (-abs(c.amplitude), c.freq_hz))
    diagnostics = {"samples_used": big, "fine_grid_size": big}
    return SparseSpectrum(components=tuple(comps), config=None,
                          rate_hz=x.rate_hz, resolution_hz=x.rate_hz / big,
                          diagnostics=diagnostics)
