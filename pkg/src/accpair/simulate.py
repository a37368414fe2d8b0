"""Monte-Carlo machinery: false-detection trials, memory footprint,
synthetic trace generation and trace replay.

All randomness flows through per-trial substreams derived from a single
seed, so trials are reproducible independently of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .engine import ANALYSIS, DEPLOYMENT, PairingEngine
from .slots import PacketArrival
from .timing import ProtocolParams, jitter_index, nominal_interval

#: Bit count of the modeled non-ACC packet remainder; a CRC failure can be
#: caused by any of these bits even when the ACC itself survives.
BODY_BITS = 232


@dataclass
class SimConfig:
    """Configuration shared by all simulation entry points."""

    params: ProtocolParams = field(default_factory=ProtocolParams)
    n: int = 200                  # meters in range of the receiver
    M: int = 0                    # pairing threshold, total tolerated bit errors
    epsilon: float = 0.0          # per-bit error probability on received ACCs
    p: float = 0.0                # packet erasure probability
    trials: int = 1000
    horizon: float = 600.0        # seconds of trace to generate / replay
    timeout: int = 10             # maximum virtual-slot step count
    repeats_per_payload: int = 6  # transmissions carrying identical payload
    slot_policy: str = ANALYSIS
    expire_on_arrival: bool = True
    emission_jitter: float = 0.0  # half-range of per-packet send-time jitter
    rng_seed: int = 0
    body_error_prob: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.n < 0:
            raise ValueError(f"meter count must be nonnegative, got {self.n}")
        if not 0 <= self.M <= 8:
            raise ValueError(f"threshold M must be in 0..8, got {self.M}")
        if self.timeout < 1:
            raise ValueError(f"timeout must be >= 1, got {self.timeout}")
        if self.emission_jitter < 0:
            raise ValueError("emission_jitter must be nonnegative")
        if self.slot_policy not in (ANALYSIS, DEPLOYMENT):
            raise ValueError(f"unknown slot policy {self.slot_policy!r}")

    @property
    def effective_body_error_prob(self) -> float:
        if self.body_error_prob is not None:
            return self.body_error_prob
        return -np.expm1(BODY_BITS * np.log1p(-self.epsilon)) if self.epsilon > 0 else 0.0


@dataclass
class StepCounts:
    """Pairing tallies for one step value, Correct/Erroneous by class."""

    step: int
    cc: int = 0
    ce: int = 0
    ec: int = 0
    ee: int = 0
    ee_false: int = 0
    false_pairs: int = 0

    @property
    def pairings(self) -> int:
        return self.cc + self.ce + self.ec + self.ee

    @property
    def fd_percent(self) -> float:
        """False pairings as a percentage of all pairings at this step."""
        return 100.0 * self.false_pairs / self.pairings if self.pairings else 0.0


@dataclass
class SimReport:
    """Aggregated result of a simulation or replay run."""

    trials: int = 1
    fd_rate: Optional[float] = None
    fd_std_error: Optional[float] = None
    memory_per_meter: Optional[float] = None
    memory_std_error: Optional[float] = None
    per_step: Optional[List[StepCounts]] = None
    arrivals: int = 0
    truth_available: bool = False

    @property
    def total_pairings(self) -> int:
        return sum(s.pairings for s in self.per_step) if self.per_step else 0


def _trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _flip_mask(rng: np.random.Generator, epsilon: float) -> int:
    """Random 8-bit error pattern with independent per-bit probability."""
    if epsilon <= 0.0:
        return 0
    bits = rng.random(8) < epsilon
    return int(sum(1 << i for i in range(8) if bits[i]))


def _union(intervals: Sequence[Tuple[float, float]]) -> List[Tuple[float, float]]:
    """Merge possibly overlapping half-open intervals."""
    merged: List[List[float]] = []
    for a, b in sorted(intervals):
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


# ---------------------------------------------------------------------------
# trace generation and replay


def transmission_times(acc0: int, start: float, horizon: float, params: ProtocolParams):
    """Yield (time, acc) of scheduled transmissions up to ``horizon``.

    Follows the interval law exactly: each interval is the mean interval
    plus the jitter offset selected by the current ACC.
    """
    time, acc = start, acc0
    while time <= horizon:
        yield time, acc
        time += params.t + params.delta(jitter_index(acc, params))
        acc = (acc + 1) % params.L


def generate_trace(cfg: SimConfig, rng: Optional[np.random.Generator] = None) -> List[PacketArrival]:
    """Synthesize a ground-truth trace of ``cfg.n`` meters.

    Meters start with independent uniform ACCs and phases; per packet an
    erasure drops it entirely, otherwise the observed ACC gets independent
    bit flips and the CRC flag reflects ACC damage or a body error.
    """
    if rng is None:
        rng = _trial_rng(cfg.rng_seed, 0)
    params = cfg.params
    body_p = cfg.effective_body_error_prob
    arrivals: List[PacketArrival] = []
    for m in range(cfg.n):
        meter = f"m{m:03d}"
        acc0 = int(rng.integers(params.L))
        phase = float(rng.uniform(0.0, params.t))
        for scheduled, acc in transmission_times(acc0, phase, cfg.horizon, params):
            if cfg.p > 0 and rng.random() < cfg.p:
                continue  # erased
            time = scheduled
            if cfg.emission_jitter > 0:
                time += float(rng.uniform(-cfg.emission_jitter, cfg.emission_jitter))
            mask = _flip_mask(rng, cfg.epsilon)
            body_error = body_p > 0 and rng.random() < body_p
            arrivals.append(
                PacketArrival(
                    time=time,
                    acc=acc ^ mask,
                    erroneous=mask != 0 or body_error,
                    meter_id=meter,
                    true_acc=acc,
                )
            )
    arrivals.sort(key=lambda a: (a.time, a.meter_id))
    return arrivals


def replay(trace: Sequence[PacketArrival], cfg: SimConfig) -> SimReport:
    """Run a time-sorted trace through the pairing engine and tabulate.

    Produces per-step class counts plus false-detection statistics when
    every pairing carried ground truth.
    """
    engine = PairingEngine(
        cfg.params,
        M=cfg.M,
        policy=cfg.slot_policy,
        expire_on_arrival=cfg.expire_on_arrival,
        timeout=cfg.timeout,
    )
    steps = [StepCounts(step=k) for k in range(1, cfg.timeout + 1)]
    arrivals = 0
    pairs = 0
    pairs_with_truth = 0
    for pkt in trace:
        out = engine.on_arrival(pkt)
        arrivals += 1
        if out.kind != "pair":
            continue
        pairs += 1
        sc = steps[out.step - 1]
        if out.pair_class == "CC":
            sc.cc += 1
        elif out.pair_class == "CE":
            sc.ce += 1
        elif out.pair_class == "EC":
            sc.ec += 1
        else:
            sc.ee += 1
        if out.is_false is not None:
            pairs_with_truth += 1
            if out.is_false:
                sc.false_pairs += 1
                if out.pair_class == "EE":
                    sc.ee_false += 1
    return SimReport(
        trials=1,
        per_step=steps,
        arrivals=arrivals,
        truth_available=pairs > 0 and pairs_with_truth == pairs,
    )


# ---------------------------------------------------------------------------
# false-detection trials


def _false_detection_trial(cfg: SimConfig, base_true_acc: int, rng: np.random.Generator) -> bool:
    """One trial: does an interferer pair with the base packet's slots?

    The base packet is received erroneously at time zero; interference is a
    Poisson stream of rate n/t with uniform ACCs, sampled on the live slot
    windows (arrivals elsewhere cannot interact with the store).  The
    genuine next packets follow the true ACC path, subject to erasure and
    ACC bit errors.
    """
    params = cfg.params
    lam = cfg.n / params.t
    jit = cfg.emission_jitter
    engine = PairingEngine(
        params,
        M=cfg.M,
        policy=ANALYSIS,
        expire_on_arrival=cfg.expire_on_arrival,
        timeout=cfg.timeout,
    )
    y = base_true_acc ^ _flip_mask(rng, cfg.epsilon)
    engine.on_arrival(PacketArrival(time=0.0, acc=y, erroneous=True, meter_id="base"))
    base_jit = float(rng.uniform(-jit, jit)) if jit > 0 else 0.0

    while engine.live_slots:
        slots = engine.store.iter_slots()
        step = slots[0].step  # slots from one base advance in lockstep
        segments = _union([(s.start, s.end) for s in slots])
        durations = np.array([b - a for a, b in segments])
        counts = rng.poisson(lam * durations) if lam > 0 else np.zeros(len(segments), int)

        events: List[Tuple[float, int, bool]] = []
        for (a, b), k in zip(segments, counts):
            if k:
                times = a + rng.random(k) * (b - a)
                accs = rng.integers(0, params.L, k)
                for tt, aa in zip(times, accs):
                    events.append((float(tt), int(aa), False))
        if cfg.p == 0 or rng.random() >= cfg.p:
            t_true = nominal_interval(base_true_acc, step, params)
            if jit > 0:
                t_true += float(rng.uniform(-jit, jit)) - base_jit
            acc_true = ((base_true_acc + step) % params.L) ^ _flip_mask(rng, cfg.epsilon)
            if any(a <= t_true < b for a, b in segments):
                events.append((t_true, acc_true, True))
        events.sort(key=lambda e: e[0])

        for time, acc, genuine in events:
            out = engine.on_arrival(
                PacketArrival(time=time, acc=acc, erroneous=False,
                              meter_id="base" if genuine else "bg")
            )
            if out.kind == "pair":
                return bool(out.is_false)
        engine.store.advance_expired(max(b for _, b in segments))
    return False


def simulate_false_detection(cfg: SimConfig) -> SimReport:
    """Estimate the false-detection rate by independent trials.

    Base ACCs are swept uniformly over the full range so the estimate is
    the mean over ACC values, matching how the analytic curves are
    reported.
    """
    false_count = 0
    for i in range(cfg.trials):
        rng = _trial_rng(cfg.rng_seed, i)
        if _false_detection_trial(cfg, i % cfg.params.L, rng):
            false_count += 1
    rate = false_count / cfg.trials
    return SimReport(
        trials=cfg.trials,
        fd_rate=rate,
        fd_std_error=float(np.sqrt(rate * (1.0 - rate) / cfg.trials)),
    )


# ---------------------------------------------------------------------------
# memory footprint


def simulate_memory(cfg: SimConfig) -> SimReport:
    """Average maximum number of simultaneously live slots per meter.

    Full transmission schedules of all meters are replayed through the
    engine; every arrival creates slots, mirroring how receiver memory is
    provisioned in the field.
    """
    per_trial: List[float] = []
    for trial in range(cfg.trials):
        rng = _trial_rng(cfg.rng_seed, trial)
        trace = generate_trace(cfg, rng)
        engine = PairingEngine(
            cfg.params,
            M=cfg.M,
            policy=DEPLOYMENT,
            expire_on_arrival=cfg.expire_on_arrival,
            timeout=cfg.timeout,
        )
        peak = 0
        for pkt in trace:
            engine.on_arrival(pkt)
            if engine.live_slots > peak:
                peak = engine.live_slots
        per_trial.append(peak / cfg.n if cfg.n else 0.0)
    mean = float(np.mean(per_trial))
    se = float(np.std(per_trial, ddof=1) / np.sqrt(len(per_trial))) if len(per_trial) > 1 else 0.0
    return SimReport(
        trials=cfg.trials,
        memory_per_meter=mean,
        memory_std_error=se,
    )
