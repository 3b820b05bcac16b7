import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aligator.core import AligatorConfig, AligatorState, offline_eta, run_protocol
from aligator.errors import DomainError, ProtocolError
from aligator.signals import add_noise, make_signal
from aligator.variants import (HedgedAligator, HedgedConfig, HeuristicLoss, aligned_indices,
                               build_grid, data_driven_eta, expert_one_step_losses,
                               heuristic_loss, hedged_forecast, run_hedged_offline,
                               run_heuristic_offline)


class TestGrid:
    @pytest.mark.parametrize("eta,n,expected", [(1.0, 4, [1.0, 2.0]), (16.0, 4, [16.0]),
                                                (0.5, 2, [0.5, 1.0])])
    def test_examples(self, eta, n, expected):
        assert build_grid(eta, n) == expected

    def test_long_grid(self):
        grid = build_grid(0.04, 1024)
        assert len(grid) == 9
        assert grid[-1] == pytest.approx(10.24)
        assert grid[-2] < 10 <= grid[-1]

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1e-6, 100), st.integers(2, 10 ** 9))
    def test_properties(self, eta, n):
        grid = build_grid(eta, n)
        cap = max(eta, math.log2(n))
        assert grid[0] == eta and grid[-1] >= cap
        assert len(grid) == 1 or grid[-2] < cap
        assert all(b == 2 * a for a, b in zip(grid, grid[1:]))

    @pytest.mark.parametrize("eta,n", [(0.0, 8), (-1.0, 8), (1.0, 1)])
    def test_domain(self, eta, n):
        with pytest.raises(DomainError):
            build_grid(eta, n)


class TestHedged:
    def test_single_rate_matches_plain_instance(self):
        y = add_noise(make_signal("heavisine", 64), 0.3, 2)
        hedged = HedgedAligator.from_rates(64, 8.0, 0.1)
        assert hedged.config.grid == [8.0]
        plain = AligatorState(AligatorConfig(n=64, eta=8.0))
        a = run_protocol(hedged, range(1, 65), y)
        b = run_protocol(plain, range(1, 65), y)
        assert a.predictions == b.predictions

    def test_uniform_start(self):
        hedged = HedgedAligator.from_rates(16, 0.5)
        np.testing.assert_allclose(hedged.outer_weights, 0.25)

    def test_outer_weights_follow_losses(self):
        hedged = HedgedAligator.from_rates(16, 0.5, outer_eta=2.0)
        hedged.cumulative_losses[:] = [0.0, 1.0, 2.0, 3.0]
        w = hedged.outer_weights
        np.testing.assert_allclose(w, np.exp(-2.0 * np.arange(4)) / np.exp(-2.0 * np.arange(4)).sum())

    def test_protocol(self):
        hedged = HedgedAligator.from_rates(8, 1.0)
        with pytest.raises(ProtocolError):
            hedged.feed(1.0)
        hedged.step(1)
        with pytest.raises(ProtocolError):
            hedged.step(1)

    @pytest.mark.parametrize("seed", range(10))
    def test_certificate_holds(self, seed):
        n = 256
        y = add_noise(make_signal("doppler", n), 0.3, seed)
        eta = offline_eta(y)
        hedged = HedgedAligator.from_rates(n, eta, eta)
        run_protocol(hedged, range(1, n + 1), y)
        loss, bound = hedged.certificate()
        assert loss <= bound + 1e-9

    def test_config_validation(self):
        with pytest.raises(DomainError):
            HedgedConfig(1.0, [1.0, 2.0], 0.0)
        with pytest.raises(DomainError):
            HedgedConfig(1.0, [2.0, 1.0], 1.0)

    def test_touches_sum(self):
        hedged = HedgedAligator.from_rates(32, 0.25)
        run_protocol(hedged, range(1, 33), np.ones(32))
        assert hedged.touches == sum(i.touches for i in hedged.instances)

    def test_offline_determinism(self):
        y = add_noise(make_signal("doppler", 128), 0.3, 0)
        a, b = run_hedged_offline(y), run_hedged_offline(y)
        np.testing.assert_array_equal(a.estimates, b.estimates)


class TestHeuristic:
    @pytest.mark.parametrize("raw,sigma,m,expected", [
        (4.0, 1.0, 1, 1.0), (4.0, 1.0, 0, 1.0), (4.0, 1.0, 3, 1.5), (1.0, 0.5, 1, 1.0),
        (0.0, 2.0, 5, 0.0),
    ])
    def test_examples(self, raw, sigma, m, expected):
        assert heuristic_loss(raw, sigma, m) == pytest.approx(expected, rel=1e-15)
        assert HeuristicLoss(sigma)(raw, m) == pytest.approx(expected, rel=1e-15)

    def test_limit_large_m(self):
        assert heuristic_loss(4.0, 1.0, 10 ** 12) == pytest.approx(2.0, rel=1e-9)

    def test_monotone_in_count(self):
        values = [heuristic_loss(1.0, 0.7, m) for m in range(1, 50)]
        assert all(b > a for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("sigma", [0.0, -1.0])
    def test_domain(self, sigma):
        with pytest.raises(DomainError):
            heuristic_loss(1.0, sigma, 1)
        with pytest.raises(DomainError):
            HeuristicLoss(sigma)

    def test_offline_runs(self):
        sig = make_signal("heavisine", 256)
        y = add_noise(sig, 0.2, 1)
        res = run_heuristic_offline(y, 0.2, sig.values)
        assert np.all(np.isfinite(res.estimates))
        assert res.total_error < np.sum((y - sig.values) ** 2)


class TestDataDrivenRate:
    def test_mapping(self):
        assert data_driven_eta({"a": [1.0, 4.0], "b": [2.0], "c": []}) == 1 / 8

    def test_flat(self):
        assert data_driven_eta([0.5, 0.25]) == 1.0

    @pytest.mark.parametrize("losses", [[], {"a": [0.0]}, [0.0, 0.0]])
    def test_undefined(self, losses):
        with pytest.raises(DomainError):
            data_driven_eta(losses)

    def test_one_step_losses(self):
        losses = expert_one_step_losses([2.0, 4.0], "average", [2, 3], 3)
        keys = {repr(k): v for k, v in losses.items()}
        # [2,3] predicts 0 then 2; the singletons are fresh when queried
        assert keys == {"[2,2]": [4.0], "[2,3]": [4.0, 4.0], "[3,3]": [16.0]}


class TestAlignedIndices:
    @pytest.mark.parametrize("w,n,first", [(1, 1, 1), (2, 3, 2), (3, 3, 1), (60, 63, 4),
                                           (64, 127, 64)])
    def test_examples(self, w, n, first):
        got_n, idx = aligned_indices(w)
        assert got_n == n and idx[0] == first and idx[-1] == n and len(idx) == w

    def test_domain(self):
        with pytest.raises(DomainError):
            aligned_indices(0)


class TestHedgedForecast:
    def test_constant(self):
        np.testing.assert_allclose(hedged_forecast(np.full(40, 7.5), 5), 7.5, rtol=1e-15)

    @pytest.mark.parametrize("slope,intercept", [(1.0, 30.0), (-0.5, 2.0), (3.0, -100.0)])
    def test_line(self, slope, intercept):
        t = np.arange(60.0)
        y = intercept + slope * t
        f = hedged_forecast(y, 7)
        want = intercept + slope * np.arange(60.0, 67.0)
        assert np.sqrt(np.mean((f - want) ** 2)) <= 1e-3 * np.max(np.abs(y))

    def test_shape(self):
        assert hedged_forecast(np.arange(10.0), 3).shape == (3,)
