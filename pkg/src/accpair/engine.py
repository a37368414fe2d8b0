"""On-arrival pairing: match against live slots, advance/expire, create.

Each arrival is processed in three steps: the store is first brought up to
date (windows whose end time has passed are advanced or dropped), then the
arrival is matched against the slots containing its time using the total
Hamming distance threshold, and finally new slots are created according to
the configured policy.  One engine processes one trace serially; distinct
engine instances are fully independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .slots import PacketArrival, SlotStore, TraceOrderError, VirtualSlot
from .timing import ProtocolParams, hamming

#: Slot-creation policies.  ANALYSIS creates slots only for erroneous
#: packets; DEPLOYMENT creates slots for every arrival.
ANALYSIS = "analysis"
DEPLOYMENT = "deployment"


@dataclass
class PairingOutcome:
    """Decision for one processed arrival."""

    kind: str                       # "pair" | "no-pair"
    arrival_ref: int
    base_ref: Optional[int] = None
    step: Optional[int] = None
    distance: Optional[int] = None
    pair_class: Optional[str] = None  # "CC", "CE", "EC" or "EE" (base -> arrival)
    is_false: Optional[bool] = None   # set only when ground truth is available


def pair_distance(slot: VirtualSlot, y_arrival: int) -> int:
    """Total bit errors implied by pairing an arrival with a slot.

    The slot already accounts for ``b`` errors in the base ACC; the arrival
    adds the distance between its observed ACC and the slot's expected one.
    """
    return slot.b + hamming(slot.xi, y_arrival)


def classify(base: PacketArrival, arrival: PacketArrival) -> Tuple[str, Optional[bool]]:
    """Correct/Erroneous class of a pairing, plus ground-truth validity.

    Returns ``(pair_class, is_false)`` where ``is_false`` is None unless
    both packets carry a meter id.
    """
    cls = ("E" if base.erroneous else "C") + ("E" if arrival.erroneous else "C")
    if base.meter_id is None or arrival.meter_id is None:
        return cls, None
    return cls, base.meter_id != arrival.meter_id


class PairingEngine:
    """Serial pairing of a time-sorted arrival stream.

    Args:
        params: protocol timing constants.
        M: maximum tolerated total Hamming distance for a pairing.
        policy: ``ANALYSIS`` or ``DEPLOYMENT`` slot-creation policy.
        expire_on_arrival: drop (instead of advance) slots whose window
            contained an arrival that did not pair.
        timeout: maximum step count a slot may reach.
        create_after_pair: also create slots for arrivals that just paired.
        capacity: optional bound on simultaneously live slots.
    """

    def __init__(
        self,
        params: Optional[ProtocolParams] = None,
        M: int = 0,
        policy: str = ANALYSIS,
        expire_on_arrival: bool = True,
        timeout: int = 10,
        create_after_pair: bool = True,
        capacity: Optional[int] = None,
    ) -> None:
        if policy not in (ANALYSIS, DEPLOYMENT):
            raise ValueError(f"unknown slot-creation policy {policy!r}")
        if not 0 <= M <= 8:
            raise ValueError(f"threshold M must be in 0..8, got {M}")
        self.params = params if params is not None else ProtocolParams()
        self.M = M
        self.policy = policy
        self.create_after_pair = create_after_pair
        self.store = SlotStore(
            self.params,
            timeout=timeout,
            expire_on_arrival=expire_on_arrival,
            capacity=capacity,
            on_base_empty=self._forget_base,
        )
        self._bases: Dict[int, PacketArrival] = {}
        self._last_time: Optional[float] = None
        self._next_ref = 0

    def _forget_base(self, base_ref: int) -> None:
        self._bases.pop(base_ref, None)

    def on_arrival(self, pkt: PacketArrival) -> PairingOutcome:
        """Process one arrival and decide pair / no-pair."""
        if self._last_time is not None and pkt.time < self._last_time:
            raise TraceOrderError(
                f"arrival at {pkt.time} precedes previous arrival at {self._last_time}"
            )
        self._last_time = pkt.time
        if pkt.ref is None:
            pkt.ref = self._next_ref
        self._next_ref = max(self._next_ref, pkt.ref) + 1

        self.store.advance_expired(pkt.time)

        candidates = self.store.slots_containing(pkt.time)
        best: Optional[VirtualSlot] = None
        best_key = None
        for slot in candidates:
            slot.saw_arrival = True
            d = pair_distance(slot, pkt.acc)
            if d > self.M:
                continue
            key = (d, slot.step, slot.seq)
            if best_key is None or key < best_key:
                best, best_key = slot, key

        if best is not None:
            base_pkt = self._bases[best.base_ref]
            cls, is_false = classify(base_pkt, pkt)
            outcome = PairingOutcome(
                kind="pair",
                arrival_ref=pkt.ref,
                base_ref=best.base_ref,
                step=best.step,
                distance=best_key[0],
                pair_class=cls,
                is_false=is_false,
            )
            self.store.remove_base(best.base_ref)
        else:
            outcome = PairingOutcome(kind="no-pair", arrival_ref=pkt.ref)

        wants_slots = self.policy == DEPLOYMENT or pkt.erroneous
        if wants_slots and (best is None or self.create_after_pair):
            if self.store.create_slots(pkt, self.M):
                self._bases[pkt.ref] = pkt

        return outcome

    @property
    def live_slots(self) -> int:
        return len(self.store)
