import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accpair.timing import (
    ProtocolParams,
    acc_add,
    acc_sub,
    hamming,
    jitter_index,
    lead_time,
    nominal_interval,
    slot_bounds,
)

PARAMS = ProtocolParams()

accs = st.integers(min_value=0, max_value=255)


class TestProtocolParams:
    def test_defaults(self):
        assert PARAMS.L == 256
        assert PARAMS.t == 16.0
        assert PARAMS.delta(64) == 0.0
        assert PARAMS.delta(0) == pytest.approx(-0.5)
        assert PARAMS.delta(128) == pytest.approx(0.5)

    def test_delta_spacing(self):
        # one jitter step moves the nominal instant by 7.8125 ms
        assert PARAMS.delta(65) - PARAMS.delta(64) == pytest.approx(16.0 / 2048)

    def test_rejects_non_power_of_two_modulus(self):
        with pytest.raises(ValueError, match="power of two"):
            ProtocolParams(L=100)

    def test_rejects_negative_tolerance(self):
        with pytest.raises(ValueError):
            ProtocolParams(nu_a=-1e-6)

    def test_rejects_biased_delta_map(self):
        with pytest.raises(ValueError, match="zero-mean"):
            ProtocolParams(delta_map=lambda s: 1.0)

    def test_table_delta_map(self):
        table = tuple(16.0 * (s - 64) / 2048.0 for s in range(129))
        p = ProtocolParams(delta_map=table)
        assert p.delta(10) == PARAMS.delta(10)

    def test_delta_map_length_checked(self):
        with pytest.raises(ValueError, match="cover jitter"):
            ProtocolParams(delta_map=[0.0] * 10)


class TestAccArithmetic:
    def test_add_examples(self):
        assert acc_add(0x40, 1) == 0x41
        assert acc_add(0xFF, 1) == 0x00
        assert acc_add(0x13, 0) == 0x13

    def test_sub_wraps(self):
        assert acc_sub(0x00, 1) == 0xFF

    def test_rejects_negative_step(self):
        with pytest.raises(ValueError):
            acc_add(0x00, -1)

    @given(accs, st.integers(0, 2**15), st.integers(0, 2**15))
    def test_add_associative(self, x, a, b):
        assert acc_add(acc_add(x, a), b) == acc_add(x, a + b)


class TestJitterIndex:
    def test_examples(self):
        assert jitter_index(0x80, PARAMS) == 0
        assert jitter_index(0x40, PARAMS) == 64
        assert jitter_index(0xC0, PARAMS) == 64
        assert jitter_index(0x00, PARAMS) == 128

    @given(accs.filter(lambda x: x != 0))
    def test_symmetry(self, x):
        assert jitter_index(x, PARAMS) == jitter_index((256 - x) % 256, PARAMS)


class TestHamming:
    def test_examples(self):
        assert hamming(0x40, 0x41) == 1
        assert hamming(0x37, 0x37) == 0
        assert hamming(0x00, 0xFF) == 8


class TestNominalInterval:
    def test_single_step(self):
        assert nominal_interval(0x40, 1, PARAMS) == pytest.approx(16.0, abs=0)
        assert nominal_interval(0x80, 1, PARAMS) == pytest.approx(15.5)

    def test_zero_steps(self):
        assert nominal_interval(0x13, 0, PARAMS) == 0.0

    def test_two_steps(self):
        assert nominal_interval(0x40, 2, PARAMS) == pytest.approx(31.9921875)

    @given(accs, st.integers(0, 20))
    def test_prefix_sum(self, x, j):
        nxt = acc_add(x, j)
        expected = nominal_interval(x, j, PARAMS) + PARAMS.t + PARAMS.delta(
            jitter_index(nxt, PARAMS)
        )
        assert nominal_interval(x, j + 1, PARAMS) == pytest.approx(expected, rel=1e-12)


class TestSlotBounds:
    def test_step_one_defaults(self):
        start, width = slot_bounds(0x40, 1, 0.0, PARAMS)
        assert start == pytest.approx(15.99752, abs=1e-12)
        assert width == pytest.approx(6.24e-3, abs=1e-12)

    def test_step_two(self):
        start, width = slot_bounds(0x40, 2, 0.0, PARAMS)
        tnom = 31.9921875
        assert start == pytest.approx(tnom - (tnom * 30e-6 + 2e-3))
        assert width == pytest.approx(tnom * 140e-6 + 4e-3)

    def test_degenerate_tolerances(self):
        p = ProtocolParams(nu_a=0.0, nu_b=0.0, gamma_a=0.0, gamma_b=0.0)
        start, width = slot_bounds(0x37, 1, 0.0, p)
        assert width == 0.0
        assert start == pytest.approx(nominal_interval(0x37, 1, p))

    def test_rejects_step_zero(self):
        with pytest.raises(ValueError):
            slot_bounds(0x40, 0, 0.0, PARAMS)

    @given(accs, st.integers(1, 10))
    @settings(max_examples=200)
    def test_nominal_sits_lead_time_into_slot(self, x, j):
        start, width = slot_bounds(x, j, 0.0, PARAMS)
        tnom = nominal_interval(x, j, PARAMS)
        theta = lead_time(x, j, PARAMS)
        assert start + theta == pytest.approx(tnom, rel=1e-12)
        assert theta < width

    @given(
        accs,
        st.integers(1, 10),
        st.floats(-30e-6, 110e-6),
        st.floats(-2e-3, 2e-3),
    )
    @settings(max_examples=300)
    def test_drift_coverage(self, x, j, drift, jitter):
        start, width = slot_bounds(x, j, 0.0, PARAMS)
        arrival = nominal_interval(x, j, PARAMS) * (1.0 + drift) + jitter
        slack = 1e-9
        assert start - slack <= arrival <= start + width + slack

    def test_adjacent_jitter_slots_disjoint(self):
        # step-1 slots for neighbouring jitter indices never overlap under
        # default parameters (offset spacing 7.8125 ms > width 6.24 ms)
        for s in range(128):
            lo_start, lo_width = slot_bounds(128 + s, 1, 0.0, PARAMS)
            hi_start, _ = slot_bounds(128 + s + 1 if s < 127 else 0, 1, 0.0, PARAMS)
            assert lo_start + lo_width < hi_start
