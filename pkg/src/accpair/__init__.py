"""Receiver-side pairing of broadcast meter packets via deterministic
ACC-coded transmission intervals, with the analytic and Monte-Carlo
machinery to quantify false pairing probability and receiver memory cost.
"""

from .analytic import (
    SaturationError,
    Timebin,
    TimebinLayout,
    allowed_combinations,
    bin_combination_count,
    build_timebins,
    max_distinguishable_meters,
    mean_qM,
    q0,
    qM,
)
from .engine import ANALYSIS, DEPLOYMENT, PairingEngine, PairingOutcome, classify, pair_distance
from .slots import (
    PacketArrival,
    SlotStore,
    StoreFullError,
    TraceOrderError,
    VirtualSlot,
    candidate_accs,
)
from .simulate import (
    SimConfig,
    SimReport,
    StepCounts,
    generate_trace,
    replay,
    simulate_false_detection,
    simulate_memory,
    transmission_times,
)
from .timing import (
    ProtocolParams,
    acc_add,
    acc_sub,
    hamming,
    jitter_index,
    lead_time,
    nominal_interval,
    slot_bounds,
    slot_width,
)

__all__ = [
    "ANALYSIS",
    "DEPLOYMENT",
    "PacketArrival",
    "PairingEngine",
    "PairingOutcome",
    "ProtocolParams",
    "SaturationError",
    "SimConfig",
    "SimReport",
    "SlotStore",
    "StepCounts",
    "StoreFullError",
    "Timebin",
    "TimebinLayout",
    "TraceOrderError",
    "VirtualSlot",
    "acc_add",
    "acc_sub",
    "allowed_combinations",
    "bin_combination_count",
    "build_timebins",
    "candidate_accs",
    "classify",
    "generate_trace",
    "hamming",
    "jitter_index",
    "lead_time",
    "max_distinguishable_meters",
    "mean_qM",
    "nominal_interval",
    "pair_distance",
    "q0",
    "qM",
    "replay",
    "simulate_false_detection",
    "simulate_memory",
    "slot_bounds",
    "slot_width",
    "transmission_times",
]

__version__ = "0.1.0"
