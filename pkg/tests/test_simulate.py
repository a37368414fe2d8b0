import pytest

from accpair.engine import DEPLOYMENT
from accpair.simulate import (
    SimConfig,
    generate_trace,
    replay,
    simulate_false_detection,
    simulate_memory,
    transmission_times,
)
from accpair.slots import PacketArrival
from accpair.timing import ProtocolParams, jitter_index

PARAMS = ProtocolParams()


class TestSimConfig:
    def test_rejects_bad_probabilities(self):
        with pytest.raises(ValueError):
            SimConfig(epsilon=1.5)
        with pytest.raises(ValueError):
            SimConfig(p=-0.1)

    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError):
            SimConfig(trials=0)

    def test_body_error_prob_default(self):
        cfg = SimConfig(epsilon=1 / 32)
        assert cfg.effective_body_error_prob == pytest.approx(1 - (1 - 1 / 32) ** 232)
        assert SimConfig(epsilon=0.0).effective_body_error_prob == 0.0

    def test_body_error_prob_override(self):
        assert SimConfig(epsilon=0.5, body_error_prob=0.0).effective_body_error_prob == 0.0


class TestTransmissionTimes:
    def test_interval_law(self):
        sched = list(transmission_times(0x40, 0.0, 40.0, PARAMS))
        assert [(t, a) for t, a in sched] == [
            (0.0, 0x40),
            (16.0, 0x41),
            (31.9921875, 0x42),
        ]


class TestGenerateTrace:
    def test_all_erased(self):
        assert generate_trace(SimConfig(n=5, p=1.0, horizon=100.0)) == []

    def test_deterministic(self):
        cfg = SimConfig(n=2, epsilon=0.1, p=0.2, horizon=120.0, rng_seed=42)
        assert generate_trace(cfg) == generate_trace(cfg)

    def test_follows_interval_law(self):
        cfg = SimConfig(n=1, horizon=100.0, rng_seed=9)
        trace = generate_trace(cfg)
        assert len(trace) >= 3
        for prev, cur in zip(trace, trace[1:]):
            expected = PARAMS.t + PARAMS.delta(jitter_index(prev.true_acc, PARAMS))
            assert cur.time - prev.time == pytest.approx(expected, rel=1e-12)
            assert cur.true_acc == (prev.true_acc + 1) % 256

    def test_zero_noise_packets_correct(self):
        trace = generate_trace(SimConfig(n=3, horizon=100.0, rng_seed=1))
        assert all(not a.erroneous and a.acc == a.true_acc for a in trace)

    def test_time_sorted_with_ground_truth(self):
        trace = generate_trace(SimConfig(n=4, horizon=100.0, rng_seed=2))
        assert all(a.time <= b.time for a, b in zip(trace, trace[1:]))
        assert all(a.meter_id is not None and a.true_acc is not None for a in trace)


class TestReplay:
    def test_single_meter_chain(self):
        trace = [
            PacketArrival(time=0.0, acc=0x40, erroneous=False, meter_id="m", true_acc=0x40),
            PacketArrival(time=16.0, acc=0x41, erroneous=False, meter_id="m", true_acc=0x41),
            PacketArrival(time=31.9921875, acc=0x42, erroneous=False, meter_id="m", true_acc=0x42),
        ]
        report = replay(trace, SimConfig(n=1, slot_policy=DEPLOYMENT))
        assert report.arrivals == 3
        assert report.per_step[0].cc == 2
        assert report.total_pairings == 2
        assert report.truth_available
        assert report.per_step[0].false_pairs == 0

    def test_empty_trace(self):
        report = replay([], SimConfig(n=1))
        assert report.arrivals == 0
        assert report.total_pairings == 0
        assert not report.truth_available

    def test_colliding_meters_yield_false_detection(self):
        # a second meter's packet lands in the slot set up by the first
        trace = [
            PacketArrival(time=0.0, acc=0x40, erroneous=True, meter_id="a", true_acc=0x40),
            PacketArrival(time=16.0, acc=0x41, erroneous=True, meter_id="b", true_acc=0x41),
        ]
        report = replay(trace, SimConfig(n=2, slot_policy=DEPLOYMENT))
        sc = report.per_step[0]
        assert sc.ee == 1
        assert sc.false_pairs == 1
        assert sc.ee_false == 1
        assert sc.fd_percent == 100.0

    def test_counts_are_consistent(self):
        cfg = SimConfig(n=10, epsilon=1 / 32, horizon=300.0, rng_seed=3, slot_policy=DEPLOYMENT)
        report = replay(generate_trace(cfg), cfg)
        for sc in report.per_step:
            assert sc.pairings == sc.cc + sc.ce + sc.ec + sc.ee
            assert sc.false_pairs <= sc.pairings
            assert sc.ee_false <= sc.ee


class TestSimulateFalseDetection:
    def test_no_interferers(self):
        report = simulate_false_detection(SimConfig(n=0, trials=200, rng_seed=1))
        assert report.fd_rate == 0.0

    def test_rate_sane_and_deterministic(self):
        cfg = SimConfig(n=400, M=1, trials=3000, rng_seed=5)
        first = simulate_false_detection(cfg)
        second = simulate_false_detection(cfg)
        assert first == second
        assert 0.0 < first.fd_rate < 0.05
        assert first.fd_std_error == pytest.approx(
            (first.fd_rate * (1 - first.fd_rate) / cfg.trials) ** 0.5
        )


class TestSimulateMemory:
    def test_exact_slot_counts_without_noise(self):
        for m, expected in ((0, 1.0), (1, 9.0)):
            cfg = SimConfig(n=5, M=m, trials=2, horizon=120.0, rng_seed=3)
            assert simulate_memory(cfg).memory_per_meter == expected

    def test_bit_errors_inflate_memory(self):
        cfg = SimConfig(n=5, M=1, epsilon=2 / 32, trials=2, horizon=120.0, rng_seed=3)
        assert simulate_memory(cfg).memory_per_meter > 9.0
