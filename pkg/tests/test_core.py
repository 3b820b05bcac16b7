import math

import numpy as np
import pytest

from aligator.core import (AligatorConfig, AligatorState, RunTrace, forward_backward,
                           offline_eta, run_offline, run_online, run_protocol,
                           theoretical_eta)
from aligator.errors import ConfigError, DomainError, ProtocolError
from aligator.geometric_cover import CoverIndex
from aligator.signals import add_noise, make_signal


def replay_oracle(n, eta, indices, ys):
    """Plain-float transcription of the driver over an explicit weight table."""
    cover = [(iv.start, iv.end) for iv in CoverIndex(n)]
    u = {I: 1.0 / len(cover) for I in cover}
    sums = {I: 0.0 for I in cover}
    counts = {I: 0 for I in cover}
    out = []
    for i, y in zip(indices, ys):
        awake = [I for I in cover if I[0] <= i <= I[1]]
        mass = sum(u[I] for I in awake)
        w = {I: u[I] / mass for I in awake}
        preds = {I: sums[I] / counts[I] if counts[I] else 0.0 for I in awake}
        yhat = sum(w[I] * preds[I] for I in awake)
        losses = {I: eta * (y - preds[I]) ** 2 for I in awake}
        norm = sum(u[I] * math.exp(-losses[I]) for I in awake)
        for I in awake:
            u[I] = u[I] * math.exp(-losses[I]) / norm * mass
            sums[I] += y
            counts[I] += 1
        out.append((yhat, w))
    return out


class TestRates:
    def test_theoretical_noiseless(self):
        assert theoretical_eta(1.0, 0.0, 123, 0.3) == 0.125
        assert theoretical_eta(2.0, 0.0, 5) == 1 / 32

    def test_theoretical_value(self):
        assert theoretical_eta(1.0, 0.25, 1000, 0.1) == pytest.approx(0.0391548, rel=1e-6)

    @pytest.mark.parametrize("args", [(0, 1, 10), (1, -1, 10), (1, 1, 0), (1, 1, 10, 1.0)])
    def test_theoretical_domain(self, args):
        with pytest.raises(DomainError):
            theoretical_eta(*args)

    @pytest.mark.parametrize("y,eta", [((1, -1, 0.5), 1 / 8), ((2, 2), 1 / 32), ((-3,), 1 / 72)])
    def test_offline(self, y, eta):
        assert offline_eta(y) == pytest.approx(eta, rel=1e-15)

    @pytest.mark.parametrize("y", [(), (0.0, 0.0)])
    def test_offline_domain(self, y):
        with pytest.raises(DomainError):
            offline_eta(y)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(n=0, eta=1.0), dict(n=4, eta=0.0),
                                    dict(n=4, eta=1.0, clip_bound=-1.0)])
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            AligatorConfig(**kw)

    def test_needs_rate_or_loss(self):
        with pytest.raises(ConfigError):
            AligatorState(AligatorConfig(n=4))


class TestStepFeed:
    def test_fresh_predicts_zero(self):
        for i in (1, 5, 8):
            assert AligatorState(AligatorConfig(n=8, eta=1.0)).step(i) == 0.0

    def test_repeat_query_single_point(self):
        s = AligatorState(AligatorConfig(n=1, eta=1.0))
        assert s.step(1) == 0.0
        s.feed(3.5)
        assert s.step(1) == 3.5

    def test_agreeing_experts(self):
        s = AligatorState(AligatorConfig(n=8, eta=0.7))
        for i in range(1, 9):
            s.step(i)
            s.feed(2.0)
        # every expert awake at 8 holds only 2.0
        assert s.step(8) == pytest.approx(2.0, rel=1e-15)

    def test_singleton_loss(self):
        s = AligatorState(AligatorConfig(n=1, eta=1.0), record=True)
        s.step(1)
        s.feed(2.0)
        assert s.rounds[0].losses == (4.0,)
        assert s.pool.total_mass() == pytest.approx(1.0)

    def test_two_expert_shift(self):
        s = AligatorState(AligatorConfig(n=3, eta=1.0), record=True)
        s.step(3)
        s.feed(2.0)  # [2,3] now averages 2, [2,2] is empty
        s.step(2)
        s.feed(2.0)
        rd = s.rounds[1]
        assert [repr(k) for k in rd.awake] == ["[2,2]", "[2,3]"]
        assert rd.expert_predictions == (0.0, 2.0)
        assert rd.losses == (4.0, 0.0)
        w = s.pool.weights(rd.awake)
        assert w[rd.awake[1]] > w[rd.awake[0]]
        # u_[2,3] * 1 / (0.5 e^-4 + 0.5) * mass, mass split evenly before
        assert w[rd.awake[0]] == pytest.approx(math.exp(-4) / (1 + math.exp(-4)), rel=1e-12)

    def test_protocol_errors(self):
        s = AligatorState(AligatorConfig(n=4, eta=1.0))
        with pytest.raises(ProtocolError):
            s.feed(1.0)
        s.step(1)
        with pytest.raises(ProtocolError):
            s.step(2)

    @pytest.mark.parametrize("i", [0, 5])
    def test_index_range(self, i):
        with pytest.raises(DomainError):
            AligatorState(AligatorConfig(n=4, eta=1.0)).step(i)

    def test_nonfinite_observation(self):
        s = AligatorState(AligatorConfig(n=4, eta=1.0))
        s.step(1)
        with pytest.raises(DomainError):
            s.feed(math.inf)

    def test_loss_hook_sees_counts(self):
        seen = []

        def loss(raw, m):
            seen.append(m)
            return raw

        s = AligatorState(AligatorConfig(n=2), loss_fn=loss)
        for i, y in [(1, 1.0), (2, 1.0), (2, 1.0)]:
            s.step(i)
            s.feed(y)
        # n=2 is covered by two singletons only
        assert seen == [0, 0, 1]


@pytest.mark.parametrize("seed", range(4))
def test_matches_plain_oracle(seed):
    rng = np.random.default_rng(seed)
    n = 37
    indices = rng.integers(1, n + 1, 120)
    ys = rng.normal(0, 1, 120) + np.sin(indices / 5)
    state = AligatorState(AligatorConfig(n=n, eta=0.3, clip_bound=1e9), record=True)
    trace = run_protocol(state, indices, ys)
    for rd, yhat, (want, w) in zip(trace.rounds, trace.predictions,
                                   replay_oracle(n, 0.3, indices, ys)):
        assert yhat == pytest.approx(want, rel=1e-9, abs=1e-12)
        got = {(k.start, k.end): v for k, v in rd.weight_map().items()}
        assert set(got) == set(w)
        for key in w:
            assert got[key] == pytest.approx(w[key], rel=1e-9)


class TestComplexity:
    @pytest.mark.parametrize("n", [1, 2, 3, 100, 1024])
    def test_touch_count(self, n):
        s = AligatorState(AligatorConfig(n=n, eta=0.1), record=True)
        run_protocol(s, range(1, n + 1), np.ones(n))
        assert s.touches == sum(len(r.awake) for r in s.rounds)
        assert s.touches <= n * (math.floor(math.log2(n)) + 1)

    def test_lazy_experts(self):
        s = AligatorState(AligatorConfig(n=1024, eta=0.1))
        run_protocol(s, [5, 5, 900], [1.0, 2.0, 3.0])
        assert len(s.experts) == len({k for i in (5, 900) for k in s._awake(i)[0]})


def test_determinism():
    sig = make_signal("doppler", 300)
    y = add_noise(sig, 0.25, 9)
    a = run_online(AligatorConfig(n=300, eta=0.05), range(1, 301), y, sig.values)
    b = run_online(AligatorConfig(n=300, eta=0.05), range(1, 301), y, sig.values)
    assert a.predictions == b.predictions


def test_predictions_bounded_by_running_max():
    rng = np.random.default_rng(1)
    y = rng.normal(0, 3, 400)
    state = AligatorState(AligatorConfig(n=400, eta=0.01, expert_kind=2))
    running = 0.0
    for i, v in enumerate(y, start=1):
        assert abs(state.step(i)) <= running + 1e-12
        state.feed(v)
        running = max(running, abs(v))


class TestTrace:
    def test_errors_against_truth(self):
        tr = RunTrace([1, 2], [0.0, 1.0], [1.0, 1.0], [0.5, 2.0])
        np.testing.assert_allclose(tr.squared_errors(), [0.25, 1.0])
        assert tr.total_error == 1.25
        assert np.all(np.diff(tr.cumulative_error()) >= 0)

    def test_without_truth_uses_observations(self):
        tr = RunTrace([1], [0.0], [2.0])
        assert tr.total_error == 4.0 == tr.observation_loss()


class TestOffline:
    def test_single_point(self):
        res = run_offline(None, [4.0])
        assert res.estimates.tolist() == [0.0]

    def test_default_rate_is_offline_eta(self):
        y = np.array([1.0, -2.0, 0.5, 0.25])
        a = run_offline(None, y)
        b = run_offline(AligatorConfig(n=4, eta=offline_eta(y)), y)
        np.testing.assert_array_equal(a.estimates, b.estimates)

    def test_all_zero_falls_back(self):
        assert run_offline(None, np.zeros(8)).estimates.tolist() == [0.0] * 8

    def test_horizon_mismatch(self):
        with pytest.raises(DomainError):
            run_offline(AligatorConfig(n=5, eta=1.0), [1.0, 2.0])

    def test_averaging_beats_forward_pass(self):
        sig = make_signal("doppler", 2048)
        wins = 0
        for seed in range(5):
            y = add_noise(sig, 0.25, seed)
            res = run_offline(None, y, sig.values)
            forward = np.sum((np.asarray(res.forward.predictions) - sig.values) ** 2)
            wins += res.total_error < forward
        assert wins >= 4

    def test_truth_required_for_error(self):
        with pytest.raises(DomainError):
            _ = run_offline(None, [1.0, 2.0]).total_error

    def test_generic_learner(self):
        res = forward_backward(lambda: AligatorState(AligatorConfig(n=3, eta=1.0)),
                               [1.0, 1.0, 1.0])
        # [2,3] is the only expert with data, sharing weight with a fresh singleton
        assert res.forward.predictions == pytest.approx([0.0, 0.0, 0.5])
        assert res.backward.predictions == pytest.approx([0.0, 0.5, 0.0])
        assert res.estimates.tolist() == pytest.approx([0.0, 0.25, 0.25])


class TestForecast:
    def test_fresh(self):
        s = AligatorState(AligatorConfig(n=4, eta=1.0))
        assert s.forecast(3).tolist() == [0.0, 0.0, 0.0]

    def test_horizon(self):
        with pytest.raises(DomainError):
            AligatorState(AligatorConfig(n=4, eta=1.0)).forecast(0)

    def test_running_average_is_flat(self):
        s = AligatorState(AligatorConfig(n=16, eta=0.5))
        run_protocol(s, range(1, 17), np.arange(16.0))
        f = s.forecast(5)
        assert np.all(f == f[0])

    def test_line_extrapolates(self):
        n = 31  # index 31 closes every block that contains it
        s = AligatorState(AligatorConfig(n=n, eta=0.5, expert_kind=1))
        t = np.arange(1, n + 1, dtype=float)
        run_protocol(s, range(1, n + 1), t)
        # the length-1 expert is pinned at 31; every other awake one is exact
        keys, experts = s._awake(n)
        w = dict(zip(keys, s.pool.weight_list(keys)))
        want = [sum(w[k] * (n if k.k == 0 else n + j) for k in keys) for j in range(1, 4)]
        np.testing.assert_allclose(s.forecast(3), want, rtol=1e-6)


def interval_bound_slack(B, sigma, n, delta):
    sigma_tilde = sigma * math.sqrt(2 * math.log(4 * n / delta))
    r = 16 * (B + sigma_tilde) ** 2
    nlogn = n * math.log(n)
    return (math.log(nlogn) * r + 2 * r * r * math.log(2 * nlogn / delta)) / (3 - math.e)


def test_interval_error_bound():
    n, sigma, delta = 512, 0.25, 0.1
    sig = make_signal("doppler", n)
    B = float(np.max(np.abs(sig.values)))
    lam = interval_bound_slack(B, sigma, n, delta)
    factor = (math.e - 1) / (3 - math.e)
    eta = theoretical_eta(B, sigma, n, delta)
    violations = 0
    for seed in range(200):
        y = add_noise(sig, sigma, seed)
        state = AligatorState(AligatorConfig(n=n, eta=eta), record=True)
        run_protocol(state, range(1, n + 1), y)
        learner = {}
        expert = {}
        for rd in state.rounds:
            theta = sig.values[rd.index - 1]
            for key, pred in zip(rd.awake, rd.expert_predictions):
                learner[key] = learner.get(key, 0.0) + (rd.prediction - theta) ** 2
                expert[key] = expert.get(key, 0.0) + (pred - theta) ** 2
        violations += any(learner[k] > factor * expert[k] + lam for k in learner)
    assert violations <= 0.02 * 200


def test_constant_truth_noiseless():
    n, c = 1024, 3.0
    eta = theoretical_eta(c, 0.0, n)
    tr = run_online(AligatorConfig(n=n, eta=eta), range(1, n + 1), np.full(n, c), np.full(n, c))
    assert tr.total_error <= c * c + math.log(n * math.log(n)) / eta
    assert tr.squared_errors()[0] == c * c
