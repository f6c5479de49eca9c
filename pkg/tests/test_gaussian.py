import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wzsr import gaussian as g

SYM = dict(var_x=1.0, var_n1=1.0, var_n2=1.0)


def gp(D1, D2, **kw):
    return g.GaussParams(**{**SYM, **kw}, D1=D1, D2=D2)


def mmse_oracle(params, vz1, vz2):
    """Brute-force linear MMSE from the covariance of (X, Y1, Y2, W1, W2)."""
    sx, s1, s2 = params.var_x, params.var_n1, params.var_n2
    # latent independent components: X, N1, N2, Z1, Z2
    A = np.array([
        [1, 0, 0, 0, 0],  # X
        [1, 1, 1, 0, 0],  # Y1
        [1, 0, 1, 0, 0],  # Y2
        [1, 0, 0, 1, 1],  # W1
        [1, 0, 0, 0, 1],  # W2
    ], dtype=float)
    K = A @ np.diag([sx, s1, s2, vz1, vz2]) @ A.T

    def err(obs):
        Koo = K[np.ix_(obs, obs)]
        kxo = K[0, obs]
        return K[0, 0] - kxo @ np.linalg.solve(Koo, kxo)

    return err([1, 3]), err([2, 3, 4])


class TestDerived:
    def test_symmetric(self):
        dv = g.derived(gp(0.5, 0.25))
        assert dv.d1_star == pytest.approx(2 / 3)
        assert dv.d2_star == pytest.approx(0.5)
        assert dv.gamma == pytest.approx(0.5)

    def test_curve_hits_floor(self):
        params = gp(0.5, 0.25)
        dv = g.derived(params)
        assert g.boundary_curve(params, dv.d2_star) == pytest.approx(dv.d1_star, rel=1e-12)


class TestRegions:
    def test_labels(self):
        assert g.classify_region_gauss(gp(0.5, 0.25)) == "I"
        assert g.classify_region_gauss(gp(0.8, 0.25)) == "II"
        assert g.classify_region_gauss(gp(0.3, 0.45)) == "III"
        assert g.classify_region_gauss(gp(0.8, 0.6)) == "IV"


class TestRates:
    def test_symmetric_value(self):
        # 0.5 log2(1 / (0.25 * 3 * (0.125 + 0.5)))
        expected = 0.5 * math.log2(1 / (0.25 * 3 * 0.625))
        assert g.hb_rate_gauss(gp(0.5, 0.25)) == pytest.approx(expected, abs=1e-12)

    def test_floor_reduces_to_wz2(self):
        params = gp(2 / 3, 0.2)
        assert g.hb_rate_gauss(params) == pytest.approx(g.wz_rate_gauss_stage2(params), abs=1e-12)

    def test_region1_strictly_above_wz2(self):
        params = gp(0.5, 0.25)
        assert g.hb_rate_gauss(params) > g.wz_rate_gauss_stage2(params) + 1e-3

    def test_region3_boundary_continuity(self):
        params = gp(0.5, 0.25)
        curve = g.boundary_curve(params)
        on = gp(curve * (1 + 1e-12), 0.25)
        assert g.classify_region_gauss(on) == "I"
        assert g.hb_rate_gauss(on) == pytest.approx(g.wz_rate_gauss_stage1(on), abs=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0.1, 5), st.sampled_from([0.5, 2.0, 10.0]))
    def test_scale_invariance(self, sx, s1, s2, c):
        base = g.GaussParams(sx, s1, s2, 1.0, 1.0)
        dv = g.derived(base)
        params = g.GaussParams(sx, s1, s2, 0.9 * dv.d1_star, 0.6 * dv.d2_star)
        assert g.hb_rate_gauss(params.scaled(c)) == pytest.approx(g.hb_rate_gauss(params), abs=1e-12)


class TestTestChannel:
    def test_against_mmse_oracle(self):
        params = gp(0.5, 0.25)
        vz1, vz2 = g.solve_test_channel_gauss(params)
        assert (vz1, vz2) == pytest.approx((1.5, 0.5))
        np.testing.assert_allclose(mmse_oracle(params, vz1, vz2), [0.5, 0.25], atol=1e-12)

    def test_rates_hit_targets(self):
        params = gp(0.55, 0.2, var_x=2.0, var_n1=0.7, var_n2=1.3)
        assert g.classify_region_gauss(params) == "I"
        ach = g.channel_rates(params, *g.solve_test_channel_gauss(params))
        assert ach.d1 == pytest.approx(0.55, abs=1e-12)
        assert ach.d2 == pytest.approx(0.2, abs=1e-12)
        assert ach.r1 == pytest.approx(g.wz_rate_gauss_stage1(params), abs=1e-12)
        assert ach.sumrate == pytest.approx(g.hb_rate_gauss(params), abs=1e-12)

    def test_outside_region1_rejected(self):
        with pytest.raises(ValueError):
            g.solve_test_channel_gauss(gp(0.8, 0.25))

    @pytest.mark.parametrize("D1,D2", [(0.8, 0.25), (0.3, 0.45), (0.8, 0.6)])
    def test_other_regions_meet_targets(self, D1, D2):
        params = gp(D1, D2)
        ach = g.channel_rates(params, *g.region_test_channel(params))
        assert ach.d1 <= D1 + 1e-12 and ach.d2 <= D2 + 1e-12
        assert ach.sumrate == pytest.approx(g.hb_rate_gauss(params), abs=1e-12)


class TestVerdict:
    def test_labels(self):
        assert g.check_sr_gauss(gp(0.5, 0.25)).verdict == "generalized-only"
        assert g.check_sr_gauss(gp(0.8, 0.25)).verdict == "strict"
        rep = g.check_sr_gauss(gp(0.5, 0.25)).to_dict()
        assert set(rep) == {"params", "region", "r1_min_bits", "sumrate_bits", "var_z1", "var_z2", "sr_verdict"}
