"""Candidate sets from generators, coprime intersection, Bezout resolution."""
import math

import numpy as np
import pytest

from sparsespec import (
    BezoutPair,
    DegenerateGenerator,
    Generator,
    NoIntersection,
    NotCoprime,
    NoUniqueIntersection,
    bezout,
    candidate_set,
    circular_distance_hz,
    resolve_bezout,
    resolve_match,
)


def generator_for(freq, step, rate, scale=1.0):
    return Generator(value=scale * np.exp(2j * np.pi * freq * step / rate),
                     step=step)


class TestCandidateSet:
    def test_quarter_turn_roots(self):
        g = Generator(value=np.exp(2j * np.pi * 0.75), step=4)
        cs = candidate_set(g, 1000.0)
        assert np.allclose(cs.candidates, [187.5, 437.5, 687.5, 937.5])

    def test_unit_generator_step_three(self):
        cs = candidate_set(Generator(value=1.0 + 0j, step=3), 9.0)
        assert np.allclose(cs.candidates, [0.0, 3.0, 6.0])

    def test_undersampled_tone_set_membership(self):
        # 5 Hz seen at stride 50 of a 1000 Hz grid: candidates are spaced
        # 20 Hz and include every tone that collides onto that bin.
        g = generator_for(5.0, 50, 1000.0)
        cs = candidate_set(g, 1000.0)
        assert len(cs.candidates) == 50
        expected = 5.0 + 20.0 * np.arange(50)
        assert np.allclose(np.sort(cs.candidates), expected, atol=1e-9)
        for tone in (125.0, 165.0, 245.0):
            assert np.min(np.abs(np.asarray(cs.candidates) - tone)) < 1e-9

    def test_candidates_sorted_and_distinct(self):
        cs = candidate_set(generator_for(7.3, 9, 100.0), 100.0)
        cands = np.asarray(cs.candidates)
        assert np.all(np.diff(cands) > 0)
        assert cands.size == 9

    def test_degenerate_value_rejected(self):
        with pytest.raises(DegenerateGenerator):
            Generator(value=0.0 + 0j, step=4)

    def test_off_unit_modulus_rejected(self):
        with pytest.raises(ValueError):
            Generator(value=3.0 + 0j, step=4)

    def test_noisy_modulus_normalized(self):
        g = Generator(value=1.1 * np.exp(0.4j), step=5)
        assert abs(g.normalized) == pytest.approx(1.0)
        assert g.angle_cycles == pytest.approx(0.4 / (2 * math.pi))


class TestBezout:
    def test_reference_pair(self):
        bp = bezout(50, 17)
        assert (bp.t, bp.v) == (-1, 3)
        assert 50 * bp.t + 17 * bp.v == 1

    def test_trivial_pair(self):
        bp = bezout(2, 1)
        assert (bp.t, bp.v) == (0, 1)

    def test_second_setting_minimal_max(self):
        bp = bezout(142, 7)
        assert 142 * bp.t + 7 * bp.v == 1
        # Exhaustive scan over the one-parameter solution family: no valid
        # pair has a smaller max(|t|, |v|), and ties prefer smaller |t|.
        best = max(abs(bp.t), abs(bp.v))
        for k in range(-200, 201):
            t = bp.t + 7 * k
            v = bp.v - 142 * k
            cand = max(abs(t), abs(v))
            assert cand >= best
            if cand == best:
                assert abs(bp.t) <= abs(t)

    def test_non_coprime_rejected(self):
        with pytest.raises(NotCoprime):
            bezout(4, 2)

    def test_pair_invariant_enforced(self):
        with pytest.raises(ValueError):
            BezoutPair(t=1, v=1, u=4, s=3)


class TestResolveBezout:
    def test_tone_125(self):
        bp = bezout(50, 17)
        g_u = generator_for(125.0, 50, 1000.0)
        g_s = generator_for(125.0, 17, 1000.0)
        freq, amp = resolve_bezout(g_u, g_s, bp, 1000.0)
        assert freq == pytest.approx(125.0, abs=1e-9)
        assert amp == abs(bp.t) + abs(bp.v)

    def test_tone_245(self):
        bp = bezout(50, 17)
        g_u = generator_for(245.0, 50, 1000.0)
        g_s = generator_for(245.0, 17, 1000.0)
        freq, _ = resolve_bezout(g_u, g_s, bp, 1000.0)
        assert freq == pytest.approx(245.0, abs=1e-9)

    def test_unit_generators_give_zero(self):
        bp = bezout(5, 3)
        g = Generator(value=1.0 + 0j, step=5)
        h = Generator(value=1.0 + 0j, step=3)
        freq, _ = resolve_bezout(g, h, bp, 1000.0)
        assert freq == pytest.approx(0.0, abs=1e-9)

    def test_perturbation_bound(self):
        rng = np.random.default_rng(3)
        bp = bezout(50, 17)
        rate = 1000.0
        eps = 1e-4
        bound = (abs(bp.t) + abs(bp.v)) * eps * rate / (2 * math.pi)
        for _ in range(50):
            true = float(rng.uniform(0, rate))
            du, ds = rng.uniform(-eps, eps, size=2)
            g_u = Generator(value=np.exp(
                1j * (2 * np.pi * true * 50 / rate + du)), step=50)
            g_s = Generator(value=np.exp(
                1j * (2 * np.pi * true * 17 / rate + ds)), step=17)
            freq, _ = resolve_bezout(g_u, g_s, bp, rate)
            assert circular_distance_hz(freq, true, rate) <= bound + 1e-9


class TestResolveMatch:
    def test_tone_125(self):
        u_set = candidate_set(generator_for(125.0, 50, 1000.0), 1000.0)
        s_set = candidate_set(generator_for(125.0, 17, 1000.0), 1000.0)
        freq, dist = resolve_match(u_set, s_set)
        assert freq == pytest.approx(125.0, abs=1e-9)
        assert dist == pytest.approx(0.0, abs=1e-9)

    def test_on_grid_uniqueness_sweep(self):
        # Every on-grid frequency for N=60, u=4, s=3 resolves exactly.
        n, u, s, rate = 60, 4, 3, 60.0
        for j in range(n):
            f = j * rate / n
            u_set = candidate_set(generator_for(f, u, rate), rate)
            s_set = candidate_set(generator_for(f, s, rate), rate)
            freq, _ = resolve_match(u_set, s_set)
            assert freq == pytest.approx(f, abs=1e-9)

    def test_non_coprime_rejected(self):
        u_set = candidate_set(generator_for(10.0, 4, 100.0), 100.0)
        s_set = candidate_set(generator_for(10.0, 2, 100.0), 100.0)
        with pytest.raises(NotCoprime):
            resolve_match(u_set, s_set)

    def test_rescaled_generators_match(self):
        u_set = candidate_set(generator_for(125.0, 50, 1000.0, scale=1.15),
                              1000.0)
        s_set = candidate_set(generator_for(125.0, 17, 1000.0, scale=1.15),
                              1000.0)
        freq, _ = resolve_match(u_set, s_set)
        assert freq == pytest.approx(125.0, abs=1e-9)

    def test_result_prefers_prony_side_candidate(self):
        # Perturb the step-s generator: the returned frequency must follow
        # the s-set candidate, which carries the finer estimate.
        rate = 1000.0
        offset = 0.05
        u_set = candidate_set(generator_for(125.0, 50, rate), rate)
        s_set = candidate_set(generator_for(125.0 + offset, 17, rate), rate)
        freq, dist = resolve_match(u_set, s_set)
        assert freq == pytest.approx(125.0 + offset, abs=1e-9)
        assert dist == pytest.approx(offset * 17 / 17, abs=1e-6)

    def test_all_far_raises_no_intersection(self):
        rate = 1000.0
        u_set = candidate_set(generator_for(125.0, 50, rate), rate)
        s_set = candidate_set(generator_for(125.0, 17, rate), rate)
        with pytest.raises(NoIntersection):
            resolve_match(u_set, s_set, tol_hz=-1.0)

    def test_near_tie_raises_ambiguous(self):
        # U spacing 2 Hz, S spacing 3 Hz on a 6 Hz band; offsetting the
        # s-generator by 0.4 Hz leaves two pairings within a factor two.
        rate = 6.0
        u_set = candidate_set(generator_for(0.5, 3, rate), rate)
        s_set = candidate_set(generator_for(1.9, 2, rate), rate)
        with pytest.raises(NoUniqueIntersection):
            resolve_match(u_set, s_set)

    def test_circular_distance(self):
        assert circular_distance_hz(1.0, 999.0, 1000.0) == pytest.approx(2.0)
        assert circular_distance_hz(10.0, 30.0, 1000.0) == pytest.approx(20.0)
