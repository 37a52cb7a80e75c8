import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssdlab import shaping as sh
from ssdlab import topology as tp


def star():
    return tp.build_named("star", 5)


def house():
    return tp.build_named("house", 5)


class TestProfile:
    def test_presets(self):
        p = sh.PreferenceProfile.preset("NN", 5)
        assert p.weights[0] == (1.0, 0.0, 0.0)
        assert p.is_one_hot and not p.is_baseline
        assert sh.PreferenceProfile.preset("baseline", 5).is_baseline

    def test_negative_rejected(self):
        with pytest.raises(sh.ShapingError, match="negative"):
            sh.PreferenceProfile.homogeneous(3, -1.0, 0.0, 0.0)

    def test_set_weights(self):
        p = sh.PreferenceProfile.baseline(5)
        q = sh.set_weights(p, 0, 1.0, 0.0, 0.0)
        assert q.weights[0] == (1.0, 0.0, 0.0)
        assert q.weights[1] == (0.0, 0.0, 0.0)
        assert p.is_baseline  # original untouched

    def test_set_weights_negative(self):
        p = sh.PreferenceProfile.baseline(3)
        with pytest.raises(sh.ShapingError):
            sh.set_weights(p, 0, -1.0, 0.0, 0.0)

    def test_set_weights_idempotent(self):
        t = house()
        p = sh.PreferenceProfile.preset("CN", 5)
        q = sh.set_weights(p, 1, *p.weights[1])
        assert sh.resolve_portfolio(t, p) == sh.resolve_portfolio(t, q)


class TestIdMapping:
    def test_identity(self):
        m = sh.IdMapping.identity(4)
        assert m.vertex_of(2) == 2 and m.agent_of(3) == 3

    def test_permutation(self):
        m = sh.IdMapping(agent_to_vertex=(2, 0, 1))
        assert m.vertex_of(0) == 2
        assert m.agent_of(2) == 0

    def test_non_bijection(self):
        with pytest.raises(sh.ShapingError):
            sh.IdMapping(agent_to_vertex=(0, 0, 1))


class TestResolvePortfolio:
    def test_star_hbn_one_hot(self):
        pf = sh.resolve_portfolio(star(), sh.PreferenceProfile.preset("HBN", 5))
        assert pf[0] == {}
        for leaf in range(1, 5):
            assert pf[leaf] == {0: 1.0}

    def test_house_clique_one_hot(self):
        pf = sh.resolve_portfolio(house(), sh.PreferenceProfile.preset("CN", 5))
        assert pf[1] == {2: 1.0, 4: 1.0}
        assert pf[0] == {}

    def test_baseline_empty(self):
        for name in ("star", "house", "complete"):
            t = tp.build_named(name, 5)
            pf = sh.resolve_portfolio(t, sh.PreferenceProfile.baseline(5))
            assert all(d == {} for d in pf)

    def test_overlapping_sets_accumulate(self):
        # house vertex 1: vertex 2 is nearest, clique, and hbn neighbor
        p = sh.PreferenceProfile.homogeneous(5, 1.0, 2.0, 4.0)
        pf = sh.resolve_portfolio(house(), p)
        assert pf[1][2] == pytest.approx(7.0)

    def test_mapping_permutes_ids(self):
        # agent 3 sits on the star hub vertex 0
        mapping = sh.IdMapping(agent_to_vertex=(1, 2, 3, 0, 4))
        pf = sh.resolve_portfolio(star(), sh.PreferenceProfile.preset("HBN", 5), mapping)
        assert pf[3] == {}
        assert pf[0] == {3: 1.0}

    def test_size_mismatch(self):
        with pytest.raises(sh.ShapingError):
            sh.resolve_portfolio(star(), sh.PreferenceProfile.baseline(4))


class TestShape:
    def test_star_nearest_example(self):
        pf = sh.resolve_portfolio(star(), sh.PreferenceProfile.preset("NN", 5))
        shaped = sh.shape([1.0, 2.0, 3.0, 4.0, 5.0], pf)
        assert shaped.r_tot[0] == pytest.approx(15.0)
        assert shaped.r_tot[1] == pytest.approx(3.0)

    def test_all_zero(self):
        pf = sh.resolve_portfolio(house(), sh.PreferenceProfile.preset("NN", 5))
        shaped = sh.shape([0.0] * 5, pf)
        assert shaped.r_socio == (0.0,) * 5

    def test_house_clique_spread(self):
        pf = sh.resolve_portfolio(house(), sh.PreferenceProfile.preset("CN", 5))
        shaped = sh.shape([0.0, 10.0, 0.0, 0.0, 0.0], pf)
        assert shaped.r_socio == (0.0, 0.0, 10.0, 0.0, 10.0)

    def test_exact_decomposition(self):
        # r_tot - (r_env + r_socio) must be exactly zero, bit for bit
        pf = sh.resolve_portfolio(house(), sh.PreferenceProfile.homogeneous(5, 0.3, 0.7, 0.1))
        rng = np.random.default_rng(0)
        for _ in range(100):
            r = rng.normal(0, 10, size=5)
            shaped = sh.shape(r, pf)
            for e, s, t in zip(shaped.r_env, shaped.r_socio, shaped.r_tot):
                assert t - (e + s) == 0.0

    @given(lam=st.floats(min_value=0.01, max_value=100))
    @settings(max_examples=50, deadline=None)
    def test_linearity(self, lam):
        pf = sh.resolve_portfolio(house(), sh.PreferenceProfile.preset("NN", 5))
        base = np.array([1.0, -2.0, 3.0, 0.5, -0.25])
        a = sh.shape(base, pf)
        b = sh.shape(lam * base, pf)
        for x, y in zip(a.r_socio, b.r_socio):
            assert y == pytest.approx(lam * x, rel=1e-12, abs=1e-12)

    def test_regular_graph_symmetric_care(self):
        # on a d-regular graph with homogeneous alpha,
        # sum_i r_socio = alpha * d * sum_i r_env
        for name, d in (("cycle", 2), ("complete", 4)):
            t = tp.build_named(name, 5)
            alpha = 0.6
            pf = sh.resolve_portfolio(t, sh.PreferenceProfile.homogeneous(5, alpha, 0, 0))
            rng = np.random.default_rng(11)
            r = rng.uniform(0, 5, size=5)
            shaped = sh.shape(r, pf)
            assert sum(shaped.r_socio) == pytest.approx(alpha * d * r.sum())

    def test_duck_typed_step(self):
        class Step:
            rewards = (1.0, 0.0, 0.0, 0.0, 0.0)

        pf = sh.resolve_portfolio(star(), sh.PreferenceProfile.preset("NN", 5))
        shaped = sh.shape(Step(), pf)
        assert shaped.r_socio[1] == pytest.approx(1.0)
