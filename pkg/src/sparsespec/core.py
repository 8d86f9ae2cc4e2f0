"""Complex signal containers, DFT/IDFT kernels, stream extraction and peak picking.

A signal lives on a uniform grid at ``rate_hz``. Decimating by a stride ``u``
and shifting the start by multiples of ``s`` grid samples produces the short
sub-streams the rest of the pipeline works on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IndexBudgetExceeded, NotCoprime


@dataclass(frozen=True)
class ComplexSignal:
    """Uniformly sampled complex time series.

    Attributes:
        samples: complex sample values.
        rate_hz: sample rate of the underlying grid, Hz.
        origin_index: offset of sample 0 on the underlying grid (streams
            extracted with a shift remember where they started).
    """

    samples: np.ndarray
    rate_hz: float
    origin_index: int = 0

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", arr)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("samples must be a non-empty 1-d sequence")
        if not self.rate_hz > 0:
            raise ValueError("rate_hz must be positive")
        if self.origin_index < 0:
            raise ValueError("origin_index must be >= 0")

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class Spectrum:
    """DFT coefficients with their bin spacing in Hz."""

    bins: np.ndarray
    bin_hz: float

    def __post_init__(self):
        arr = np.asarray(self.bins, dtype=np.complex128)
        object.__setattr__(self, "bins", arr)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("bins must be a non-empty 1-d sequence")
        if not self.bin_hz > 0:
            raise ValueError("bin_hz must be positive")

    def __len__(self) -> int:
        return self.bins.size


@dataclass(frozen=True)
class StreamSpec:
    """Decimation plan: stride ``u``, shift ``s``, ``M`` streams of length ``n``.

    ``n=None`` means "as long as the source signal allows", resolved when the
    streams are extracted. ``wrap=True`` indexes the source periodically, which
    is only meaningful for signals that are genuinely periodic on their grid.
    """

    u: int
    s: int
    M: int
    n: int | None = None
    wrap: bool = False

    def __post_init__(self):
        if self.u < 1 or self.s < 1 or self.M < 1:
            raise ValueError("u, s and M must be positive integers")
        if math.gcd(self.u, self.s) != 1:
            raise NotCoprime(f"u={self.u} and s={self.s} must be coprime")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be positive when given")

    def resolve_length(self, source_length: int) -> int:
        """Concrete per-stream length against a source of ``source_length``."""
        n = self.n if self.n is not None else max_stream_length(
            source_length, self.u, self.s, self.M)
        if n < 1:
            raise IndexBudgetExceeded(
                f"no feasible stream length for u={self.u}, s={self.s}, "
                f"M={self.M} against {source_length} samples")
        if not self.wrap:
            last = self.u * (n - 1) + (self.M - 1) * self.s
            if last > source_length - 1:
                raise IndexBudgetExceeded(
                    f"stream index {last} exceeds last sample "
                    f"{source_length - 1} (u={self.u}, s={self.s}, "
                    f"M={self.M}, n={n})")
        return n


@dataclass(frozen=True)
class StreamSet:
    """The extracted sub-streams, in shift order."""

    streams: tuple[ComplexSignal, ...]
    spec: StreamSpec

    def __len__(self) -> int:
        return len(self.streams)


@dataclass(frozen=True)
class PeakList:
    """Bins whose magnitude reached the selection threshold.

    Entries are (bin_index, magnitude), sorted by descending magnitude with
    ties broken by ascending bin index.
    """

    entries: tuple[tuple[int, float], ...]
    threshold: float = 0.0

    def bin_indices(self) -> list[int]:
        return [b for b, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def max_stream_length(source_length: int, u: int, s: int, M: int) -> int:
    """Largest n with every stream index u*l + m*s inside the source."""
    return (source_length - 1 - (M - 1) * s) // u + 1


def budget_stream_length(source_length: int, u: int, s: int, M: int) -> int:
    """Conservative stream-length estimate from the acquisition budget.

    Kept for diagnostics alongside the exact :func:`max_stream_length`; the
    two differ by at most one sample in typical settings.
    """
    return (source_length - (s - 1) * M) // u


def dft(x: ComplexSignal) -> Spectrum:
    """Discrete Fourier transform, bins[j] = sum_l x_l exp(-2*pi*i*l*j/N)."""
    bins = np.fft.fft(x.samples)
    return Spectrum(bins=bins, bin_hz=x.rate_hz / len(x))


def idft(spectrum: Spectrum, rate_hz: float | None = None) -> ComplexSignal:
    """Inverse transform; ``rate_hz`` defaults to bin_hz * N."""
    n = len(spectrum)
    rate = rate_hz if rate_hz is not None else spectrum.bin_hz * n
    return ComplexSignal(samples=np.fft.ifft(spectrum.bins), rate_hz=rate)


def dft_direct(samples: np.ndarray) -> np.ndarray:
    """Direct O(N^2) summation, the reference the fast path is checked against."""
    x = np.asarray(samples, dtype=np.complex128)
    n = x.size
    lj = np.outer(np.arange(n), np.arange(n))
    return np.exp(-2j * np.pi * lj / n) @ x


def circular_shift(x: ComplexSignal, s: int) -> ComplexSignal:
    """Periodic time shift: sample l of the result is x[(l + s) mod N]."""
    n = len(x)
    idx = (np.arange(n) + s) % n
    return ComplexSignal(samples=x.samples[idx], rate_hz=x.rate_hz,
                         origin_index=x.origin_index)


def extract_streams(x: ComplexSignal, spec: StreamSpec) -> StreamSet:
    """Pull the M decimated, shifted sub-streams out of ``x``.

    Stream m, index l holds x[u*l + m*s] (modulo the length when the spec
    wraps). Each stream records its shift as ``origin_index``.

    Raises:
        IndexBudgetExceeded: a requested sample would fall past the end of
            ``x`` and wrapping is off.
    """
    length = len(x)
    n = spec.resolve_length(length)
    base = spec.u * np.arange(n)
    streams = []
    for m in range(spec.M):
        idx = base + m * spec.s
        if spec.wrap:
            idx = idx % length
        streams.append(ComplexSignal(samples=x.samples[idx],
                                     rate_hz=x.rate_hz / spec.u,
                                     origin_index=m * spec.s))
    return StreamSet(streams=tuple(streams), spec=spec)


def select_peaks(spectrum: Spectrum, threshold: float) -> PeakList:
    """All bins with |X_j| >= threshold, strongest first.

    Ties in magnitude are ordered by ascending bin index so the output is
    deterministic.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    mags = np.abs(spectrum.bins)
    hits = np.flatnonzero(mags >= threshold)
    order = sorted(hits, key=lambda j: (-mags[j], j))
    entries = tuple((int(j), float(mags[j])) for j in order)
    return PeakList(entries=entries, threshold=threshold)
