import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from transduce_opt.stats import gaussian_kde, scott_bandwidth, summarize


def exact_moments(values):
    xs = [Fraction(v) for v in values]
    mean = sum(xs) / len(xs)
    var = sum((x - mean) ** 2 for x in xs) / len(xs)
    return float(mean), math.sqrt(float(var))


class TestSummarize:
    def test_small_example(self):
        s = summarize([1.0, 2.0, 3.0, 4.0])
        assert (s.mean, s.count, s.min, s.max) == (2.5, 4, 1.0, 4.0)
        assert s.std == pytest.approx(math.sqrt(1.25), rel=1e-15)

    def test_single_value(self):
        s = summarize([3.0])
        assert s.mean == 3.0 and s.std == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize([])

    def test_cancellation(self):
        values = [1e16, 1.0, -1e16, 1.0]
        assert summarize(values).mean == 0.5

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=50))
    def test_matches_exact_arithmetic(self, values):
        mean, std = exact_moments(values)
        s = summarize(values)
        assert s.mean == pytest.approx(mean, rel=1e-14, abs=1e-300)
        assert s.std == pytest.approx(std, rel=1e-10, abs=1e-9 * (max(map(abs, values)) + 1e-300))

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=30), st.randoms())
    def test_order_independent(self, values, rnd):
        shuffled = values[:]
        rnd.shuffle(shuffled)
        assert summarize(values).mean == summarize(shuffled).mean

    def test_to_dict(self):
        assert summarize([1.0, 3.0]).to_dict() == {"mean": 2.0, "std": 1.0, "count": 2, "min": 1.0, "max": 3.0}


class TestKDE:
    def test_matches_scipy(self, rng):
        x = rng.normal(size=200)
        grid = np.linspace(-4, 4, 81)
        ours = gaussian_kde(x, grid)
        ref = scipy.stats.gaussian_kde(x, bw_method="scott")(grid)
        np.testing.assert_allclose(ours.density, ref, rtol=1e-12)
        assert ours.bandwidth == pytest.approx(np.std(x, ddof=1) * 200 ** -0.2)

    def test_recovers_normal_density(self, rng):
        x = rng.normal(size=5000)
        grid = np.linspace(-6, 6, 1201)
        est = gaussian_kde(x, grid).density
        l1 = np.trapezoid(np.abs(est - scipy.stats.norm.pdf(grid)), grid)
        assert l1 < 0.05

    def test_integrates_to_one(self, rng):
        x = rng.exponential(size=300)
        grid = np.linspace(-5, 15, 4001)
        assert np.trapezoid(gaussian_kde(x, grid).density, grid) == pytest.approx(1.0, abs=1e-6)

    def test_translation_equivariance(self, rng):
        x = rng.normal(size=50)
        grid = np.linspace(-3, 3, 31)
        a = gaussian_kde(x, grid)
        b = gaussian_kde(x + 7.0, grid + 7.0)
        np.testing.assert_allclose(a.density, b.density, rtol=1e-9)

    def test_permutation_invariance(self, rng):
        x = rng.normal(size=40)
        grid = np.linspace(-3, 3, 31)
        a = gaussian_kde(x, grid).density
        b = gaussian_kde(rng.permutation(x), grid).density
        np.testing.assert_allclose(a, b, rtol=1e-13)

    @pytest.mark.parametrize("values", [[2.0], [0.5, 0.5, 0.5]])
    def test_degenerate(self, values):
        grid = np.linspace(-1, 3, 40001)
        est = gaussian_kde(values, grid)
        assert est.degenerate
        assert est.bandwidth == pytest.approx(1e-3 * max(abs(values[0]), 1.0))
        assert np.trapezoid(est.density, grid) == pytest.approx(1.0, abs=1e-6)

    def test_not_degenerate_for_spread(self):
        assert not gaussian_kde([0.0, 1.0], [0.0]).degenerate

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            gaussian_kde([], [0.0])

    def test_csv(self, tmp_path):
        est = gaussian_kde([0.0, 1.0, 2.0], np.linspace(-1, 3, 5))
        est.to_csv(tmp_path / "d.csv")
        lines = (tmp_path / "d.csv").read_text().splitlines()
        assert lines[0] == "x,density" and len(lines) == 6


def test_scott_bandwidth():
    x = np.arange(10.0)
    assert scott_bandwidth(x) == pytest.approx(np.std(x, ddof=1) * 10 ** -0.2)
