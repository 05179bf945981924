import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adiabat.errors import DegenerateTemperatureError, DomainError
from adiabat.microstate import (
    ProbabilityState,
    canonical_init,
    entropy,
    equalize,
    moments,
    state_rows,
    uniform_init,
)
from adiabat.spectra import LinearEnsemble, TwoLadder, discrete_spectrum


def make_state(w, g=None):
    w = np.asarray(w, dtype=float)
    g = np.ones(len(w), dtype=np.int64) if g is None else np.asarray(g, dtype=np.int64)
    return ProbabilityState(w, g)


def random_states(n_states, rng, max_levels=8):
    for _ in range(n_states):
        k = rng.integers(2, max_levels + 1)
        g = rng.integers(1, 4, size=k)
        w = rng.random(k)
        w /= g @ w
        yield ProbabilityState(w, g)


class TestProbabilityState:
    def test_normalization_enforced(self):
        with pytest.raises(DomainError):
            make_state([0.5, 0.2])

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            make_state([1.5, -0.5])

    def test_degeneracy_weighting(self):
        state = make_state([0.25, 0.25], g=[1, 3])
        assert state.total() == pytest.approx(1.0)


class TestCanonicalInit:
    def test_equal_energies_split_equally(self):
        spec = discrete_spectrum(LinearEnsemble((0.0, 0.0), (0.0, 0.0)), (0.0, 1.0))
        state = canonical_init(spec, 0.5, T=3.7)
        assert state.w == pytest.approx([0.5, 0.5])

    def test_log2_gap(self):
        T = 1.7
        spec = discrete_spectrum(LinearEnsemble((0.0, T * math.log(2)), (0.0, 0.0)), (0.0, 1.0))
        state = canonical_init(spec, 0.0, T)
        assert state.w == pytest.approx([2.0 / 3.0, 1.0 / 3.0], rel=1e-14)

    def test_degenerate_level_shares_per_state_probability(self):
        spec = discrete_spectrum(
            LinearEnsemble((0.0, 0.0), (0.0, 0.0), (1, 3)), (0.0, 1.0))
        state = canonical_init(spec, 0.5, T=1.0)
        assert state.w == pytest.approx([0.25, 0.25])

    def test_all_weights_underflow(self):
        spec = discrete_spectrum(LinearEnsemble((1e6, 2e6), (0.0, 0.0)), (0.0, 1.0))
        with pytest.raises(DegenerateTemperatureError):
            canonical_init(spec, 0.5, T=1.0)

    def test_nonpositive_temperature(self):
        spec = discrete_spectrum(TwoLadder(1.0, 1.0, 2, 2), (0.5, 2.0))
        with pytest.raises(DomainError):
            canonical_init(spec, 1.0, T=0.0)


class TestEntropy:
    def test_pure_state(self):
        assert entropy(make_state([1.0])) == 0.0

    def test_microcanonical_ln_g(self):
        for levels in (2, 5, 11):
            state = make_state([1.0 / levels] * levels)
            assert entropy(state) == pytest.approx(math.log(levels), rel=1e-14)

    def test_uniform_over_degenerate_levels(self):
        state = make_state([0.2, 0.2], g=[2, 3])
        assert entropy(state) == pytest.approx(math.log(5), rel=1e-14)

    def test_two_level_value(self):
        assert entropy(make_state([0.7, 0.3])) == pytest.approx(0.6108643020548935, abs=1e-15)


class TestEqualize:
    def test_unweighted_mean(self):
        state = make_state([0.3, 0.1, 0.6])
        new, ev = equalize(state, {0, 1}, a_star=0.5)
        assert new.w == pytest.approx([0.2, 0.2, 0.6])
        assert ev.w_after == pytest.approx(0.2)

    def test_degeneracy_weighted_mean(self):
        state = make_state([0.2, 0.1, 0.5 / 3], g=[2, 1, 3])
        new, ev = equalize(state, {0, 1}, a_star=1.0)
        assert ev.w_after == pytest.approx(0.5 / 3.0, rel=1e-14)
        assert new.w[0] == new.w[1] == pytest.approx(0.16666666666666666, rel=1e-14)

    def test_entropy_step_value(self):
        state = make_state([0.3, 0.1, 0.6])
        _, ev = equalize(state, {0, 1}, a_star=0.0)
        assert ev.delta_s == pytest.approx(0.05232481437645481, rel=1e-12)

    def test_unknown_level(self):
        state = make_state([0.5, 0.5])
        with pytest.raises(DomainError):
            equalize(state, {0, 7}, a_star=0.0)

    def test_too_few_levels(self):
        state = make_state([0.5, 0.5])
        with pytest.raises(DomainError):
            equalize(state, {1}, a_star=0.0)

    def test_idempotent_bitwise(self):
        state = make_state([0.3, 0.1, 0.6])
        once, _ = equalize(state, {0, 1}, a_star=0.0)
        twice, ev = equalize(once, {0, 1}, a_star=0.0)
        assert ev.delta_s == 0.0
        assert np.array_equal(twice.w, once.w)

    def test_disjoint_sets_commute(self):
        state = make_state([0.1, 0.2, 0.3, 0.4])
        ab, _ = equalize(state, {0, 1}, 0.0)
        ab, _ = equalize(ab, {2, 3}, 0.0)
        ba, _ = equalize(state, {2, 3}, 0.0)
        ba, _ = equalize(ba, {0, 1}, 0.0)
        assert np.array_equal(ab.w, ba.w)

    def test_zero_probability_participates(self):
        state = make_state([0.0, 1.0])
        new, ev = equalize(state, {0, 1}, 0.0)
        assert new.w == pytest.approx([0.5, 0.5])
        assert ev.delta_s == pytest.approx(math.log(2), rel=1e-12)

    def test_conservation_exact_over_random_states(self):
        rng = np.random.default_rng(3)
        for state in random_states(500, rng):
            ids = rng.choice(len(state.w), size=2, replace=False)
            new, _ = equalize(state, set(int(i) for i in ids), 0.0)
            drift = abs(new.total() - state.total())
            assert drift < 1e-15

    def test_entropy_never_decreases_bulk(self):
        # 10^4 random states, vectorized two-level pools
        rng = np.random.default_rng(11)
        w = rng.random((10_000, 2))
        w /= w.sum(axis=1, keepdims=True)
        pooled = w.mean(axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(w > 0, w * np.log(w / pooled), 0.0)
        assert np.all(terms.sum(axis=1) >= -1e-15)

    @given(st.lists(st.floats(1e-6, 1.0), min_size=2, max_size=6))
    @settings(max_examples=200, deadline=None)
    def test_entropy_never_decreases_property(self, raw):
        w = np.asarray(raw)
        w /= w.sum()
        state = make_state(w)
        _, ev = equalize(state, set(range(len(w))), 0.0)
        assert ev.delta_s >= 0.0

    def test_second_order_law(self):
        delta = 1e-3
        for w in (0.05, 0.2, 0.37):
            rest = 1.0 - w - w * (1 + delta)
            state = make_state([w, w * (1 + delta), rest])
            _, ev = equalize(state, {0, 1}, 0.0)
            assert abs(ev.delta_s / delta ** 2 - w / 4.0) < 0.01 * w


class TestMoments:
    def test_point_mass(self):
        spec = discrete_spectrum(LinearEnsemble((2.0, 5.0), (0.0, 0.0)), (0.0, 1.0))
        state = make_state([1.0, 0.0])
        assert moments(state, spec, 0.5) == pytest.approx((2.0, 0.0))

    def test_bernoulli_energy(self):
        spec = discrete_spectrum(LinearEnsemble((0.0, 1.0), (0.0, 0.0)), (0.0, 1.0))
        state = make_state([0.5, 0.5])
        mean, var = moments(state, spec, 0.3)
        assert (mean, var) == pytest.approx((0.5, 0.25))

    def test_mean_unchanged_by_equalization_at_crossing(self):
        # two levels crossing at a* = 0.5 have equal energies there
        spec = discrete_spectrum(LinearEnsemble((0.0, 1.0), (1.0, -1.0)), (0.0, 1.0))
        state = make_state([0.7, 0.3])
        before, _ = moments(state, spec, 0.5)
        new, _ = equalize(state, {0, 1}, 0.5)
        after, _ = moments(new, spec, 0.5)
        assert after == pytest.approx(before, rel=1e-14)

    def test_length_mismatch(self):
        spec = discrete_spectrum(LinearEnsemble((0.0, 1.0), (0.0, 0.0)), (0.0, 1.0))
        with pytest.raises(DomainError):
            moments(make_state([1.0]), spec, 0.5)


class TestSerialization:
    def test_state_rows_shape(self):
        spec = discrete_spectrum(TwoLadder(1.0, 1.0, 2, 2), (0.5, 2.0))
        state = uniform_init(spec)
        rows = state_rows(state, spec, 1.0)
        assert len(rows) == 4
        for tid, eps, g, w in rows:
            assert eps > 0 and g == 1 and w == pytest.approx(0.25)
