"""ACC arithmetic and transmission-interval geometry.

The broadcast scheme ties the interval between consecutive packets from a
meter to the packet's one-byte access counter (ACC): the interval from the
packet carrying ACC ``x`` to the next one is ``t + delta(pi(x))``, where
``pi(x) = |x - L/2|`` is the jitter index selecting a deterministic offset
from the mean interval ``t``.  Everything in this module is a pure function
of plain ints and floats and is safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

DeltaMap = Union[Callable[[int], float], Tuple[float, ...]]

#: Divisor of the built-in jitter offset formula; for t=16 s and L=256 it
#: yields 7.8125 ms per jitter step and a +-0.5 s total swing, zero-mean
#: over a full ACC cycle.
DEFAULT_DELTA_DIVISOR = 2048.0


@dataclass(frozen=True)
class ProtocolParams:
    """Timing constants of the periodic broadcast scheme.

    Attributes:
        L: ACC modulus (power of two).
        t: mean transmission interval in seconds.
        nu_a: cumulative relative clock tolerance (dimensionless).
        nu_b: second cumulative relative clock tolerance.
        gamma_a: non-cumulative jitter allowance in seconds.
        gamma_b: second non-cumulative jitter allowance in seconds.
        delta_map: optional jitter-index -> offset-seconds mapping, either a
            callable or a sequence of length ``L//2 + 1``.  ``None`` selects
            the built-in zero-mean, monotone offset formula.
    """

    L: int = 256
    t: float = 16.0
    nu_a: float = 30e-6
    nu_b: float = 110e-6
    gamma_a: float = 2e-3
    gamma_b: float = 2e-3
    delta_map: Optional[DeltaMap] = None

    def __post_init__(self) -> None:
        if self.L < 2 or self.L & (self.L - 1):
            raise ValueError(f"L must be a power of two, got {self.L}")
        if self.t <= 0:
            raise ValueError(f"t must be positive, got {self.t}")
        for name in ("nu_a", "nu_b", "gamma_a", "gamma_b"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.delta_map is not None and not callable(self.delta_map):
            # normalize to a tuple so the instance stays hashable
            object.__setattr__(self, "delta_map", tuple(float(v) for v in self.delta_map))
            if len(self.delta_map) != self.L // 2 + 1:
                raise ValueError(
                    f"delta_map must cover jitter indices 0..{self.L // 2}, "
                    f"got length {len(self.delta_map)}"
                )
        # t must be the average interval: delta averaged over one full ACC
        # cycle has to vanish (within 1e-3 * t).
        mean = sum(self.delta(jitter_index(x, self)) for x in range(self.L)) / self.L
        if abs(mean) > 1e-3 * self.t:
            raise ValueError(f"delta_map is not zero-mean over an ACC cycle (mean {mean:g} s)")

    def delta(self, s: int) -> float:
        """Jitter offset in seconds for jitter index ``s``."""
        if not 0 <= s <= self.L // 2:
            raise ValueError(f"jitter index {s} outside 0..{self.L // 2}")
        if self.delta_map is None:
            return self.t * (s - self.L // 4) / DEFAULT_DELTA_DIVISOR
        if callable(self.delta_map):
            return float(self.delta_map(s))
        return self.delta_map[s]


def check_acc(x: int, L: int = 256) -> int:
    """Validate that ``x`` is a legal ACC value and return it."""
    if not 0 <= x < L:
        raise ValueError(f"ACC value {x!r} outside 0..{L - 1}")
    return x


def acc_add(x: int, j: int, L: int = 256) -> int:
    """ACC ``j`` transmissions after ``x``: (x + j) mod L."""
    if j < 0:
        raise ValueError(f"step count must be nonnegative, got {j}")
    return (check_acc(x, L) + j) % L


def acc_sub(x: int, j: int, L: int = 256) -> int:
    """ACC ``j`` transmissions before ``x``: (x - j) mod L."""
    if j < 0:
        raise ValueError(f"step count must be nonnegative, got {j}")
    return (check_acc(x, L) - j) % L


def jitter_index(x: int, params: ProtocolParams) -> int:
    """Distance of ``x`` from L/2; selects the next interval's offset."""
    return abs(check_acc(x, params.L) - params.L // 2)


def hamming(a: int, b: int) -> int:
    """Number of differing bits between two byte values."""
    return (a ^ b).bit_count()


def nominal_interval(x: int, j: int, params: ProtocolParams) -> float:
    """Cumulative nominal time from ACC ``x`` to the packet ``j`` steps later.

    Sums ``t + delta(pi(acc))`` along the ACC path ``x, x+1, ..., x+j-1``.
    """
    if j < 0:
        raise ValueError(f"step count must be nonnegative, got {j}")
    acc = check_acc(x, params.L)
    total = 0.0
    for _ in range(j):
        total += params.t + params.delta(jitter_index(acc, params))
        acc = (acc + 1) % params.L
    return total


def lead_time(x: int, j: int, params: ProtocolParams) -> float:
    """Lead of the slot start before the nominal arrival (theta)."""
    return nominal_interval(x, j, params) * params.nu_a + params.gamma_a


def slot_width(x: int, j: int, params: ProtocolParams) -> float:
    """Width of the reception slot for step ``j`` from base ACC ``x`` (tau)."""
    tnom = nominal_interval(x, j, params)
    return tnom * (params.nu_a + params.nu_b) + params.gamma_a + params.gamma_b


def slot_bounds(x: int, j: int, t_base: float, params: ProtocolParams) -> Tuple[float, float]:
    """Reception slot for the packet ``j`` steps after a base packet.

    The base packet carried ACC ``x`` and arrived at ``t_base``.  Returns
    ``(start, width)``; the nominal arrival instant sits ``theta`` into the
    slot, and the slot absorbs relative clock error in [-nu_a, +nu_b] plus
    pairwise jitter in [-gamma_a, +gamma_b].
    """
    if j < 1:
        raise ValueError(f"slot step must be >= 1, got {j}")
    tnom = nominal_interval(x, j, params)
    theta = tnom * params.nu_a + params.gamma_a
    tau = tnom * (params.nu_a + params.nu_b) + params.gamma_a + params.gamma_b
    return t_base + tnom - theta, tau
