import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssdlab import metrics as mx
from ssdlab import topology as tp


def star_profile():
    return tp.analyze(tp.build_named("star", 5))


def make_log(env_reward, apples=None, fire=None, clean=None, seed=0, episode=0, steps=1000):
    n = len(env_reward)
    return mx.EpisodeLog(
        seed=seed,
        episode=episode,
        steps=steps,
        apples=tuple(apples or [0] * n),
        env_reward=tuple(env_reward),
        socio_reward=tuple([0.0] * n),
        fire_count=tuple(fire or [0] * n),
        clean_count=tuple(clean or [0] * n),
    )


class TestBci:
    def test_complete_constant(self):
        prof = tp.analyze(tp.build_named("complete", 5))
        rng = np.random.default_rng(0)
        expect = 1.0 - 4.0 * (7.0 / 16.0) ** 2
        for _ in range(50):
            r = rng.uniform(0.1, 100, size=5)
            assert mx.bci(r, prof).value == pytest.approx(expect, abs=1e-12)

    def test_star_hub_only(self):
        s = mx.bci([100, 0, 0, 0, 0], star_profile())
        assert s.value == pytest.approx(0.75)
        assert s.tctr == (pytest.approx(0.0), pytest.approx(0.75))

    def test_cycle_equal_rewards(self):
        prof = tp.analyze(tp.build_named("cycle", 5))
        assert mx.bci([3, 3, 3, 3, 3], prof).value == pytest.approx(0.5)

    def test_zero_total_is_missing(self):
        s = mx.bci([0, 0, 0, 0, 0], star_profile())
        assert s.value is None

    def test_length_mismatch(self):
        with pytest.raises(mx.MetricsError, match="length"):
            mx.bci([1, 2, 3], star_profile())

    def test_scale_invariance(self):
        prof = star_profile()
        rng = np.random.default_rng(3)
        for _ in range(20):
            r = rng.uniform(0, 10, size=5)
            lam = float(rng.uniform(0.01, 1000))
            a = mx.bci(r, prof).value
            b = mx.bci(lam * r, prof).value
            assert abs(a - b) < 1e-12

    def test_within_tctr_random(self):
        for name in ("star", "house", "wheel", "bipartite23"):
            prof = tp.analyze(tp.build_named(name, 5))
            lo, hi = prof.bridging.min(), prof.bridging.max()
            rng = np.random.default_rng(hash(name) % 2**32)
            for _ in range(200):
                r = rng.uniform(0, 50, size=5)
                if r.sum() == 0:
                    continue
                v = mx.bci(r, prof).value
                assert lo - 1e-12 <= v <= hi + 1e-12

    def test_mass_shift_monotone(self):
        # moving reward from the min-bridging vertex to the max-bridging
        # vertex can only raise the index
        prof = tp.analyze(tp.build_named("house", 5))
        lo_v = int(np.argmin(prof.bridging))
        hi_v = int(np.argmax(prof.bridging))
        rng = np.random.default_rng(8)
        for _ in range(100):
            r = rng.uniform(1, 20, size=5)
            before = mx.bci(r, prof).value
            shift = float(rng.uniform(0, r[lo_v]))
            r2 = r.copy()
            r2[lo_v] -= shift
            r2[hi_v] += shift
            after = mx.bci(r2, prof).value
            assert after >= before - 1e-12


class TestSci:
    def test_pure_cleaner(self):
        assert mx.sci(500, 0) == pytest.approx(1.0 - 2e-9, abs=1e-12)

    def test_pure_harvester(self):
        assert mx.sci(0, 300) < 1e-8

    def test_degenerate_half(self):
        assert mx.sci(0, 0) == pytest.approx(0.5)

    def test_bad_epsilon(self):
        with pytest.raises(mx.MetricsError):
            mx.sci(1, 1, eps=0.0)

    @given(
        e=st.integers(min_value=0, max_value=10_000),
        a=st.integers(min_value=0, max_value=10_000),
    )
    @settings(max_examples=200, deadline=None)
    def test_bounds_and_complement(self, e, a):
        v = mx.sci(e, a)
        assert 0.0 < v < 1.0
        assert v + mx.sci(a, e) == pytest.approx(1.0, abs=1e-12)


class TestUtilitarian:
    def test_zero(self):
        assert mx.utilitarian(make_log([0, 0, 0])) == 0.0

    def test_sum(self):
        assert mx.utilitarian(make_log([1, 2, 3, 4, 5])) == 15.0

    def test_ignores_socio(self):
        log = mx.EpisodeLog(
            seed=0, episode=0, steps=10,
            apples=(0, 0), env_reward=(1.0, 2.0),
            socio_reward=(99.0, 99.0), fire_count=(0, 0), clean_count=(0, 0),
        )
        assert mx.utilitarian(log) == 3.0


class TestStages:
    def test_full_scale_defaults(self):
        w = mx.segment_stages(100_000_000)
        assert w.stage1 == (1_000_000, 10_000_000)
        assert w.stage2 == (10_000_000, 60_000_000)
        assert w.stage3 == (60_000_000, 100_000_000)

    def test_desk_scale_proportional(self):
        w = mx.segment_stages(1_000_000)
        assert w.stage3 == (600_000, 1_000_000)

    def test_non_monotone(self):
        with pytest.raises(mx.MetricsError, match="non-monotone"):
            mx.segment_stages(1000, exploration_end=700, transient_end=600)

    def test_windows_disjoint_ordered(self):
        w = mx.segment_stages(123_000)
        (a1, b1), (a2, b2), (a3, b3) = w.stage1, w.stage2, w.stage3
        assert a1 < b1 <= a2 < b2 <= a3 < b3


class TestStageAggregate:
    def test_single_episode_mean_summed(self):
        logs = [make_log([0, 0], fire=[7, 1], episode=900, steps=100)]
        w = mx.StageWindows((0, 100), (100, 200), (90_000, 100_000))
        got = mx.stage_aggregate(logs + [make_log([0, 0], fire=[3, 3], episode=0, steps=100),
                                         make_log([0, 0], fire=[5, 5], episode=1, steps=100)],
                                 w, "mean-summed")
        assert got["stage3"] == {0: 7.0, 1: 1.0}

    def test_constant_series_iqr_zero(self):
        logs = [make_log([0, 0], fire=[4, 4], episode=e, steps=10) for e in range(10)]
        w = mx.StageWindows((0, 30), (30, 60), (60, 100))
        got = mx.stage_aggregate(logs, w, "iqr")
        for stage in got.values():
            for q1, q3 in stage.values():
                assert q3 - q1 == 0.0

    def test_median_linear_interpolation(self):
        logs = [
            make_log([v, 0], episode=e, steps=10)
            for e, v in enumerate([0.520, 0.525, 0.529])
        ]
        w = mx.StageWindows((0, 10), (10, 20), (20, 30))
        got = mx.stage_aggregate(logs, w, "median", field="env_reward")
        assert got["stage2"][0] == pytest.approx(0.525)

    def test_mean_summed_across_seeds(self):
        logs = [
            make_log([0, 0], fire=[2, 0], seed=1, episode=0, steps=10),
            make_log([0, 0], fire=[4, 0], seed=1, episode=1, steps=10),
            make_log([0, 0], fire=[10, 0], seed=2, episode=0, steps=10),
            make_log([0, 0], fire=[0, 0], seed=2, episode=1, steps=10),
        ]
        w = mx.StageWindows((0, 5), (5, 10), (0, 20))
        with pytest.raises(mx.MetricsError, match="no episodes"):
            mx.stage_aggregate(logs, w, "mean-summed")
        w = mx.StageWindows((0, 10), (10, 20), (0, 20))
        got = mx.stage_aggregate(logs, w, "mean-summed")
        # per-seed sums 6 and 10 average to 8
        assert got["stage3"][0] == pytest.approx(8.0)

    def test_matches_naive_rescan(self):
        rng = np.random.default_rng(44)
        logs = [
            make_log([0, 0, 0], fire=list(rng.integers(0, 30, size=3)),
                     seed=s, episode=e, steps=100)
            for s in (1, 2, 3)
            for e in range(40)
        ]
        w = mx.segment_stages(4000)
        got = mx.stage_aggregate(logs, w, "median")
        for name, window in w.named():
            lo, hi = window
            pool = [
                lg.fire_count
                for lg in logs
                if lg.episode * 100 >= lo and (lg.episode + 1) * 100 <= hi
            ]
            want = np.percentile(np.array(pool, dtype=float), 50, axis=0)
            for a in range(3):
                assert got[name][a] == pytest.approx(want[a])


class TestBciSeries:
    def test_series_and_summary(self):
        prof = star_profile()
        logs = [
            make_log([0] * 5, apples=[10, 0, 0, 0, 0], episode=0),
            make_log([0] * 5, apples=[0, 10, 10, 10, 10], episode=1),
            make_log([0] * 5, apples=[0, 0, 0, 0, 0], episode=2),
        ]
        series = mx.bci_series(logs, prof)
        assert series[0].value == pytest.approx(0.75)
        assert series[1].value == pytest.approx(0.0)
        assert series[2].value is None
        summary = mx.bci_summary(series)
        assert summary["n"] == 2 and summary["dropped"] == 1
        assert summary["median"] == pytest.approx(0.375)

    def test_raw_env_basis_flagged(self):
        series = mx.bci_series([make_log([-5, 1, 1, 1, 1])], star_profile(), basis="raw_env")
        assert series[0].reward_basis == "raw_env"
