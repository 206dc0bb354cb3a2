import numpy as np
import pytest

from macrostab.cluster import (
    CpClass,
    cluster_report,
    cp_verdict,
    normalized_correlation,
    omega_region,
    ring_distance,
)
from macrostab.fluctuation import ScalingClass, classify_scaling, max_fluctuation
from macrostab.models import ModelSpec, StateFamily, build_state, cat_state, neel_plus
from macrostab.statecore import SpinState


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    vec = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return SpinState.from_vector(vec, normalize=True)


class TestNormalizedCorrelation:
    def test_product_state_uncorrelated(self):
        for seed in range(3):
            state = build_state(ModelSpec(StateFamily.RANDOM_PRODUCT, 5, seed))
            for x, y in [(0, 1), (1, 4), (2, 3)]:
                assert normalized_correlation(state, x, y) < 1e-9

    def test_cat_saturates_cauchy_schwarz(self):
        cat = cat_state(6)
        for x, y in [(0, 1), (0, 3), (2, 5)]:
            assert normalized_correlation(cat, x, y) == pytest.approx(1.0, abs=1e-9)

    def test_singlet_pair_localized(self):
        state = build_state(ModelSpec(StateFamily.SINGLET_PAIR_PRODUCT, 5))
        assert normalized_correlation(state, 0, 1) == pytest.approx(1.0, abs=1e-9)
        assert normalized_correlation(state, 0, 2) < 1e-9
        assert normalized_correlation(state, 0, 4) < 1e-9

    def test_deterministic_site_returns_zero(self):
        # Neel sites have zero variance only in z; transverse variance is
        # finite, but a fully polarized pair with no correlations gives 0
        neel = neel_plus(4)
        assert normalized_correlation(neel, 0, 2) < 1e-9

    @pytest.mark.parametrize("seed", range(4))
    def test_symmetric_and_bounded(self, seed):
        state = random_state(5, seed)
        for x, y in [(0, 2), (1, 4), (3, 0)]:
            c_xy = normalized_correlation(state, x, y)
            c_yx = normalized_correlation(state, y, x)
            assert c_xy == pytest.approx(c_yx, abs=1e-9)
            assert 0.0 <= c_xy <= 1.0 + 1e-9

    def test_distinct_sites_required(self):
        with pytest.raises(ValueError, match="distinct"):
            normalized_correlation(cat_state(4), 2, 2)


class TestOmegaRegion:
    def test_product_state_empty(self):
        state = build_state(ModelSpec(StateFamily.RANDOM_PRODUCT, 6, 1))
        assert omega_region(state, 0, 0.1) == 0

    def test_cat_fills_the_ring(self):
        cat = cat_state(8)
        for x in range(8):
            assert omega_region(cat, x, 0.5) == 7

    def test_singlet_pair_counts_one(self):
        state = build_state(ModelSpec(StateFamily.SINGLET_PAIR_PRODUCT, 5))
        assert omega_region(state, 0, 0.5) == 1
        assert omega_region(state, 3, 0.5) == 0

    def test_epsilon_bounds(self):
        with pytest.raises(ValueError, match="epsilon"):
            omega_region(cat_state(4), 0, 0.0)

    def test_omega_non_increasing_in_epsilon(self):
        state = random_state(6, 8)
        values = [cluster_report(state, eps).omega for eps in (0.05, 0.1, 0.25, 0.5)]
        assert values == sorted(values, reverse=True)


class TestClusterReport:
    def test_report_takes_max(self):
        state = build_state(ModelSpec(StateFamily.SINGLET_PAIR_PRODUCT, 5))
        report = cluster_report(state, 0.5)
        assert report.omega == 1
        assert dict(report.per_x)[0] == 1
        assert dict(report.per_x)[4] == 0


class TestCpVerdict:
    def test_constant_zero_has_cp(self):
        assert cp_verdict([(4, 0), (6, 0), (8, 0)]).verdict is CpClass.HAS_CP

    def test_cat_growth_has_no_cp(self):
        result = cp_verdict([(4, 3), (6, 5), (8, 7)])
        assert result.verdict is CpClass.NO_CP
        assert not result.ambiguous

    def test_single_bell_pair_keeps_cp(self):
        assert cp_verdict([(4, 1), (6, 1), (8, 1)]).verdict is CpClass.HAS_CP

    def test_ambiguous_growth_flagged(self):
        result = cp_verdict([(4, 0), (6, 1), (8, 1), (10, 2)])
        assert result.verdict is CpClass.NO_CP
        assert result.ambiguous

    def test_requires_three_volumes(self):
        with pytest.raises(ValueError, match="3"):
            cp_verdict([(4, 0), (8, 0)])


def test_afs_families_lack_cp():
    # any AFS detected by the fluctuation module must come out NO_CP
    volumes = (4, 6, 8)
    series = [(n, max_fluctuation(cat_state(n)).peak.max_fluct) for n in volumes]
    assert classify_scaling(series).scaling_class is ScalingClass.AFS
    omegas = [(n, cluster_report(cat_state(n), 0.1).omega) for n in volumes]
    assert cp_verdict(omegas).verdict is CpClass.NO_CP


def test_ring_distance():
    assert ring_distance(8, 0, 7) == 1
    assert ring_distance(8, 1, 5) == 4
    assert ring_distance(8, 3, 3) == 0
