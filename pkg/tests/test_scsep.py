import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wzsr import dsbs
from wzsr.probkit import binary_entropy
from wzsr.scsep import Dmc, ScInstance, channel_capacity, check_sc_achievable


class TestCapacity:
    @pytest.mark.parametrize("q", np.linspace(0.01, 0.49, 9))
    def test_bsc(self, q):
        assert channel_capacity(Dmc.bsc(q)) == pytest.approx(1 - binary_entropy(q), abs=1e-6)

    @pytest.mark.parametrize("e", [0.0, 0.2, 0.5, 0.9])
    def test_bec(self, e):
        assert channel_capacity(Dmc.bec(e)) == pytest.approx(1 - e, abs=1e-6)

    def test_noiseless_and_useless(self):
        assert channel_capacity(Dmc(np.eye(2))) == pytest.approx(1.0, abs=1e-9)
        assert channel_capacity(Dmc(np.full((3, 2), 0.5))) == pytest.approx(0.0, abs=1e-12)

    def test_asymmetric_z_channel(self):
        # Z-channel with crossover 0.5: C = log2(1 + 2^(-2)) = log2(5/4)
        assert channel_capacity(Dmc(np.array([[1.0, 0.0], [0.5, 0.5]]))) == pytest.approx(
            np.log2(1.25), abs=1e-8
        )

    def test_invalid_rows(self):
        with pytest.raises(ValueError):
            Dmc(np.array([[0.6, 0.6], [0.5, 0.5]]))


class TestAchievable:
    def test_zero_requirements(self):
        v = check_sc_achievable(ScInstance([0.0, 0.0], [1, 1], [0, 0]))
        assert v.overall_ok

    def test_just_above_capacity_fails(self):
        c = channel_capacity(Dmc.bsc(0.1))
        v = check_sc_achievable(ScInstance([c], [1.0], [c + 1e-6]))
        assert not v.per_stage_ok[0]

    def test_zero_margin(self):
        rate = dsbs.hb_rate(dsbs.DsbsParams(0.25, 0.3, 0.1)).rate
        v = check_sc_achievable(ScInstance([1.0, 1.0], [0.0, rate], [0.0, rate]))
        assert v.overall_ok

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ScInstance([1.0], [1.0, 2.0], [0.5])

    def test_json_keys(self):
        d = check_sc_achievable(ScInstance([1.0], [1.0], [0.5])).to_dict()
        assert set(d) == {"capacities_bits", "rhos", "cum_budget_bits", "cum_required_bits", "per_stage_ok", "overall_ok"}

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 100_000))
    def test_monotone(self, seed):
        rng = np.random.default_rng(seed)
        caps, rhos, req = rng.random(3), rng.random(3) * 2, np.cumsum(rng.random(3))
        base = check_sc_achievable(ScInstance(caps, rhos, req))
        caps2 = caps + rng.random(3) * 0.3
        rhos2 = rhos + rng.random(3) * 0.3
        more = check_sc_achievable(ScInstance(caps2, rhos2, req))
        assert np.all(more.per_stage_ok >= base.per_stage_ok)
