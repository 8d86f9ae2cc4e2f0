"""End-to-end hybrid analysis, sample budget, Vandermonde shortcut."""
import numpy as np
import pytest

from sparsespec import (
    ComplexSignal,
    HybridConfig,
    IllConditionedVandermonde,
    NotCoprime,
    PeakList,
    StreamSpec,
    analyze,
    circular_distance_hz,
    dense_reference,
    dft,
    extract_streams,
    shifted_coeffs_shortcut,
)


class CountingArray(np.ndarray):
    """Array that records which flat indices have been read."""

    def __new__(cls, base):
        obj = np.asarray(base, dtype=np.complex128).view(cls)
        obj.touched = set()
        return obj

    def __array_finalize__(self, obj):
        self.touched = getattr(obj, "touched", set())

    def __getitem__(self, key):
        if isinstance(key, (int, np.integer)):
            self.touched.add(int(key))
        else:
            flat = np.asarray(key).ravel()
            if flat.dtype != bool:
                self.touched.update(int(i) for i in flat)
        return np.asarray(super().__getitem__(key))


def counted(signal):
    view = CountingArray(signal.samples)
    object.__setattr__(signal, "samples", view)
    return view


def tone_signal(freqs_amps, rate, length):
    idx = np.arange(length)
    vals = np.zeros(length, dtype=np.complex128)
    for f, a in freqs_amps:
        vals += a * np.exp(2j * np.pi * f * idx / rate)
    return ComplexSignal(samples=vals, rate_hz=rate)


class TestHybridConfig:
    def test_non_coprime_rejected(self):
        with pytest.raises(NotCoprime):
            HybridConfig(u=4, s=2, M=8).validate()

    @pytest.mark.parametrize("kwargs", [
        dict(u=0, s=1, M=4),
        dict(u=5, s=3, M=1),
        dict(u=5, s=3, M=4, threshold=-1.0),
        dict(u=5, s=3, M=4, resolver="guess"),
        dict(u=5, s=3, M=4, delta=-0.1),
        dict(u=5, s=3, M=4, threads=-1),
    ])
    def test_invalid_fields_rejected(self, kwargs):
        with pytest.raises(ValueError):
            HybridConfig(**kwargs).validate()


class TestAnalyze:
    def test_degenerate_single_stream_pair(self):
        # u=1, s=1, M=2 on an on-grid tone: no aliasing to undo, the
        # result is the plain DFT peak.
        rate, n = 32.0, 32
        x = tone_signal([(5.0, 0.8 - 0.6j)], rate, n + 1)
        cfg = HybridConfig(u=1, s=1, M=2, threshold=0.3, stream_len=n)
        res = analyze(x, cfg)
        assert len(res.components) == 1
        comp = res.components[0]
        assert comp.freq_hz == pytest.approx(5.0, abs=1e-6)
        assert comp.amplitude == pytest.approx(0.8 - 0.6j, abs=1e-6)
        assert comp.collision_order == 1

    def test_zero_signal_has_no_components(self):
        x = ComplexSignal(samples=np.zeros(200, dtype=np.complex128),
                          rate_hz=100.0)
        res = analyze(x, HybridConfig(u=5, s=2, M=6, threshold=0.1))
        assert res.components == ()

    def test_collision_pair_resolved(self):
        # 25 Hz and 85 Hz collide at stride 5 of a 100 Hz grid
        # (both fall on stream bin 5 of the 20 Hz streams).
        rate = 100.0
        x = tone_signal([(25.0, 1.0), (85.0, 0.5j)], rate, 200)
        cfg = HybridConfig(u=5, s=2, M=9, threshold=0.2, stream_len=20,
                           sigma_rel_tol=1e-8)
        res = analyze(x, cfg)
        found = {round(c.freq_hz, 6): c for c in res.components}
        assert set(found) == {25.0, 85.0}
        assert found[25.0].amplitude == pytest.approx(1.0 + 0j, abs=1e-6)
        assert found[85.0].amplitude == pytest.approx(0.5j, abs=1e-6)
        assert found[25.0].collision_order == 2

    def test_matches_dense_reference_support(self):
        # Periodic on-grid signal, wrapped extraction: fine grid == full
        # grid, so hybrid support must equal the dense support exactly.
        rate, length = 240.0, 240
        x = tone_signal([(30.0, 1.2), (75.0, 0.9j), (110.0, -0.7)],
                        rate, length)
        cfg = HybridConfig(u=4, s=3, M=9, threshold=0.25, sigma_rel_tol=1e-8,
                           stream_len=60, wrap=True)
        res = analyze(x, cfg)
        dense = dense_reference(x, 0.25)
        got = sorted(c.freq_hz for c in res.components)
        want = sorted(c.freq_hz for c in dense.components)
        assert np.allclose(got, want, atol=1e-6)

    def test_sample_budget_counting_sampler(self):
        rate = 100.0
        x = tone_signal([(25.0, 1.0), (85.0, 0.5j)], rate, 200)
        view = counted(x)
        cfg = HybridConfig(u=5, s=2, M=9, threshold=0.2, stream_len=20,
                           sigma_rel_tol=1e-8)
        res = analyze(x, cfg)
        assert len(view.touched) <= 9 * 20
        assert res.diagnostics["samples_used"] == len(view.touched)

    def test_shortcut_touches_fewer_samples(self):
        rate = 100.0
        x = tone_signal([(25.0, 1.0), (85.0, 0.5j)], rate, 200)
        full = analyze(x, HybridConfig(u=5, s=2, M=9, threshold=0.2,
                                       stream_len=20, sigma_rel_tol=1e-8))
        y = tone_signal([(25.0, 1.0), (85.0, 0.5j)], rate, 200)
        view = counted(y)
        cfg = HybridConfig(u=5, s=2, M=9, threshold=0.2, stream_len=20,
                           sigma_rel_tol=1e-8, shortcut_shifted=True)
        fast = analyze(y, cfg)
        assert len(view.touched) < 9 * 20
        for a, b in zip(full.components, fast.components):
            assert a.freq_hz == pytest.approx(b.freq_hz, abs=1e-6)
            assert a.amplitude == pytest.approx(b.amplitude, abs=1e-6)

    def test_merge_invariant(self):
        rng = np.random.default_rng(12)
        rate = 1000.0
        for seed in range(5):
            base = tone_signal([(125.0, 1.0), (165.0, 0.7)], rate, 1000)
            noise = 0.05 * (rng.standard_normal(1000)
                            + 1j * rng.standard_normal(1000))
            x = ComplexSignal(samples=base.samples + noise, rate_hz=rate)
            cfg = HybridConfig(u=50, s=17, M=12, threshold=0.2,
                               stream_len=16, sigma_rel_tol=0.05,
                               extra_terms=0)
            res = analyze(x, cfg)
            tol = res.diagnostics.get("merge_tol_hz",
                                      res.resolution_hz / 2)
            freqs = [c.freq_hz for c in res.components]
            for i in range(len(freqs)):
                for j in range(i + 1, len(freqs)):
                    assert circular_distance_hz(freqs[i], freqs[j],
                                                rate) > tol / 2

    def test_components_sorted_by_magnitude(self):
        rate = 240.0
        x = tone_signal([(30.0, 0.6), (75.0, 1.4), (110.0, 1.0)], rate, 240)
        cfg = HybridConfig(u=4, s=3, M=9, threshold=0.25, sigma_rel_tol=1e-8,
                           stream_len=60, wrap=True)
        res = analyze(x, cfg)
        mags = [abs(c.amplitude) for c in res.components]
        assert mags == sorted(mags, reverse=True)

    def test_resolver_bezout_agrees_noise_free(self):
        rate = 240.0
        x = tone_signal([(30.0, 1.2), (110.0, -0.7)], rate, 240)
        base = dict(u=4, s=3, M=9, threshold=0.25, sigma_rel_tol=1e-8,
                    stream_len=60, wrap=True)
        match = analyze(x, HybridConfig(**base))
        bez = analyze(x, HybridConfig(resolver="bezout", **base))
        for a, b in zip(match.components, bez.components):
            assert a.freq_hz == pytest.approx(b.freq_hz, abs=1e-6)


class TestDenseReference:
    def test_two_tone_support(self):
        x = tone_signal([(125.0, 1.0), (165.0, np.exp(1j * np.pi / 3))],
                        1000.0, 1000)
        dense = dense_reference(x, 0.2)
        assert sorted(c.freq_hz for c in dense.components) == [125.0, 165.0]

    def test_zero_signal_empty(self):
        x = ComplexSignal(samples=np.zeros(64, dtype=np.complex128),
                          rate_hz=64.0)
        assert dense_reference(x, 0.1).components == ()

    def test_one_hot_bin(self):
        from sparsespec import Spectrum, idft
        bins = np.zeros(32, dtype=np.complex128)
        bins[7] = 32.0
        x = idft(Spectrum(bins=bins, bin_hz=1.0), rate_hz=32.0)
        dense = dense_reference(x, 0.5)
        assert len(dense.components) == 1
        assert dense.components[0].freq_hz == pytest.approx(7.0)
        assert dense.components[0].amplitude == pytest.approx(1.0 + 0j)


class TestShortcut:
    def test_condition_one_for_root_grid(self):
        # Stride 250 of a 1000-point grid leaves 4-point streams whose
        # nodes are the 4th roots of unity: perfectly conditioned.
        rate = 1000.0
        x = tone_signal([(2.0, 1.0)], rate, 1000)
        spec = StreamSpec(u=250, s=1, M=2, n=4)
        peaks = PeakList(entries=tuple((b, 1.0) for b in range(4)))
        vals, cond = shifted_coeffs_shortcut(x, peaks, spec, 1)
        assert cond == pytest.approx(1.0, abs=1e-9)
        direct = dft(extract_streams(x, spec).streams[1]).bins
        for (b, _), v in zip(peaks.entries, vals):
            assert abs(v - direct[b]) <= 1e-8 * max(np.abs(direct).max(), 1)

    def test_full_grid_nodes_ill_conditioned(self):
        rate = 1000.0
        x = tone_signal([(11.0, 1.0)], rate, 1000)
        spec = StreamSpec(u=1, s=1, M=2, n=999)
        peaks = PeakList(entries=tuple((b, 1.0) for b in (11, 22, 33, 44)))
        try:
            _, cond = shifted_coeffs_shortcut(x, peaks, spec, 1)
        except IllConditionedVandermonde:
            return
        assert cond > 1e4

    def test_requires_shifted_stream(self):
        x = tone_signal([(2.0, 1.0)], 1000.0, 1000)
        spec = StreamSpec(u=250, s=1, M=2, n=4)
        peaks = PeakList(entries=((0, 1.0),))
        with pytest.raises(ValueError):
            shifted_coeffs_shortcut(x, peaks, spec, 0)

    def test_empty_peaks(self):
        x = tone_signal([(2.0, 1.0)], 1000.0, 1000)
        spec = StreamSpec(u=250, s=1, M=2, n=4)
        vals, cond = shifted_coeffs_shortcut(
            x, PeakList(entries=()), spec, 1)
        assert vals.size == 0
        assert cond == 1.0

    def test_fallback_keeps_analysis_working(self):
        # Eight adjacent stream bins give a tight arc of Vandermonde nodes
        # whose condition blows past the cap; analyze must fall back to
        # full stream DFTs and still recover every tone.
        rate = 240.0
        tones = [(30.0 + k, np.exp(0.7j * k)) for k in range(12)]
        x = tone_signal(tones, rate, 240)
        cfg = HybridConfig(u=2, s=1, M=8, threshold=0.3, sigma_rel_tol=1e-8,
                           stream_len=120, wrap=True, shortcut_shifted=True)
        res = analyze(x, cfg)
        freqs = sorted(c.freq_hz for c in res.components)
        assert np.allclose(freqs, [f for f, _ in tones], atol=1e-6)
        assert res.diagnostics["shortcut_fallbacks"] >= 1


class TestDiagnostics:
    def test_budget_and_reports_present(self):
        rate = 100.0
        x = tone_signal([(25.0, 1.0)], rate, 200)
        cfg = HybridConfig(u=5, s=2, M=9, threshold=0.2, stream_len=20,
                           sigma_rel_tol=1e-8)
        res = analyze(x, cfg)
        d = res.diagnostics
        assert d["stream_length"] == 20
        assert d["fine_grid_size"] == 100
        assert d["samples_used"] <= 9 * 20
        assert len(d["per_stream_samples"]) == 9
        assert d["bin_reports"]
        assert res.resolution_hz == pytest.approx(rate / 100)
