"""Baseline protocols the reservation scheme is compared against.

Framed slotted ALOHA (FSA) spends a full data slot on every slot of the
frame, collisions included.  Enhanced dynamic FSA (EDFSA) adds backlog
estimation, frame-size selection from a small menu, and modulo grouping
of tags when the backlog exceeds the largest frame.  Neither has a
reservation phase, so their rounds never suffer undetected collisions:
two tags sending full distinct payloads always garble each other
detectably.
"""
from __future__ import annotations

import math
from typing import List, NamedTuple, Optional, Sequence

from .afsa import BetweenRounds, InventoryResult, RoundParams
from .estimator import estimate_backlog
from .model import (
    PhaseDurations,
    RoundTrace,
    SlotKind,
    SlotObservation,
    Tag,
    TimingModel,
    active_count,
)
from .rng import RandomSource

# Frame sizes EDFSA may announce; backlog beyond the largest is split
# into EDFSA_MAX_FRAME-sized groups instead.
EDFSA_FRAME_CHOICES = (16, 32, 64, 128, 256)
EDFSA_MAX_FRAME = EDFSA_FRAME_CHOICES[-1]


def run_fsa_round(
    tags: Sequence[Tag],
    slots: int,
    timing: TimingModel,
    rng: RandomSource,
) -> RoundTrace:
    """One framed-ALOHA round: every responder transmits its payload directly.

    Each present, unidentified tag consumes one draw (its slot).  Every
    slot of the frame costs a full data slot whether idle, reserved, or
    collided; there is no reservation or acknowledgement traffic beyond
    the frame advertisement.  Single-occupant slots identify their tag in
    place.  The sequence recorded for a reserved slot is 0: these slots
    carry payloads, not reservation sequences.
    """
    if slots < 1:
        raise ValueError("slots must be >= 1")
    slot_tags: List[List[Tag]] = [[] for _ in range(slots)]
    for tag in tags:
        if not tag.present or tag.identified:
            continue
        slot_tags[rng.randbelow(slots)].append(tag)

    observations: List[SlotObservation] = []
    bitmap: List[bool] = []
    identified: List[int] = []
    idle = reserved = detected = 0
    for occupants in slot_tags:
        if not occupants:
            observations.append(SlotObservation(SlotKind.IDLE, 0))
            bitmap.append(False)
            idle += 1
        elif len(occupants) == 1:
            observations.append(SlotObservation(SlotKind.RESERVED_APPARENT, 1, 0))
            bitmap.append(True)
            reserved += 1
            winner = occupants[0]
            winner.identified = True
            identified.append(winner.epc)
        else:
            observations.append(SlotObservation(SlotKind.DETECTED_COLLISION, len(occupants)))
            bitmap.append(False)
            detected += 1

    phases = PhaseDurations(
        t_ad=timing.advert_us,
        t_r=0.0,
        t_su=0.0,
        t_d=timing.data_slot_us * slots,
        t_ack=0.0,
    )
    return RoundTrace(
        observations=tuple(observations),
        bitmap=tuple(bitmap),
        idle_count=idle,
        reserved_true_count=reserved,
        detected_collision_count=detected,
        undetected_collision_count=0,
        identified_epcs=tuple(identified),
        phase_durations_us=phases,
        total_us=phases.total,
    )


def run_fsa_inventory(
    tags: List[Tag],
    slots: int,
    timing: TimingModel,
    rng: RandomSource,
    max_rounds: int = 1000,
    between_rounds: Optional[BetweenRounds] = None,
) -> InventoryResult:
    """Repeat fixed-size FSA rounds until done or out of budget.

    Plain FSA does not adapt; the frame size stays at `slots` throughout.
    At least one round always runs.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    traces: List[RoundTrace] = []
    params: List[RoundParams] = []
    identified_total = 0
    completed = False
    while True:
        params.append(RoundParams(
            slots=slots, seq_bits=0, participation_divisor=1,
            k_active=active_count(tags)))
        trace = run_fsa_round(tags, slots, timing, rng)
        traces.append(trace)
        identified_total += len(trace.identified_epcs)
        if active_count(tags) == 0:
            completed = True
            break
        if len(traces) >= max_rounds:
            break
        if between_rounds is not None:
            between_rounds(len(traces), trace)
    return InventoryResult(
        traces=traces,
        params=params,
        total_time_us=sum(t.total_us for t in traces),
        tags_identified=identified_total,
        completed=completed,
    )


class EdfsaPlan(NamedTuple):
    """Frame size and group count EDFSA runs the next cycle with."""

    slots: int
    groups: int


def edfsa_plan(k_est: float) -> EdfsaPlan:
    """EDFSA cycle plan for an estimated backlog.

    The frame is the menu size nearest to the estimate (ties toward the
    larger frame).  When the estimate exceeds the largest frame, tags are
    split into ceil(k_est / max_frame) groups that respond in separate
    rounds, one group per round within the cycle.
    """
    if k_est < 0:
        raise ValueError("k_est must be >= 0")
    slots = min(EDFSA_FRAME_CHOICES, key=lambda c: (abs(c - k_est), -c))
    if k_est > EDFSA_MAX_FRAME:
        groups = math.ceil(k_est / EDFSA_MAX_FRAME)
    else:
        groups = 1
    return EdfsaPlan(slots=slots, groups=groups)


def run_edfsa_inventory(
    tags: List[Tag],
    timing: TimingModel,
    rng: RandomSource,
    max_rounds: int = 1000,
    initial_estimate: float = 128.0,
    between_rounds: Optional[BetweenRounds] = None,
) -> InventoryResult:
    """EDFSA inventory: estimate, plan, run one FSA round per group, repeat.

    Group membership for a cycle with G groups is epc mod G, recomputed
    each round so population churn is picked up immediately.  The next
    cycle's backlog estimate is the sum of the per-round estimates of the
    cycle just finished.  `initial_estimate` seeds planning before any
    observation exists, in the same role as the initial frame size of the
    reservation protocol.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    if initial_estimate < 0:
        raise ValueError("initial_estimate must be >= 0")
    traces: List[RoundTrace] = []
    params: List[RoundParams] = []
    identified_total = 0
    completed = False
    k_est = initial_estimate
    done = False
    while not done:
        plan = edfsa_plan(k_est)
        cycle_estimate = 0.0
        for group in range(plan.groups):
            responders = [
                t for t in tags
                if t.present and not t.identified and t.epc % plan.groups == group
            ]
            params.append(RoundParams(
                slots=plan.slots, seq_bits=0, participation_divisor=1,
                k_active=active_count(tags)))
            trace = run_fsa_round(responders, plan.slots, timing, rng)
            traces.append(trace)
            identified_total += len(trace.identified_epcs)
            cycle_estimate += estimate_backlog(trace, plan.slots).k_est
            if active_count(tags) == 0:
                completed = True
                done = True
                break
            if len(traces) >= max_rounds:
                done = True
                break
            if between_rounds is not None:
                between_rounds(len(traces), trace)
        k_est = cycle_estimate
    return InventoryResult(
        traces=traces,
        params=params,
        total_time_us=sum(t.total_us for t in traces),
        tags_identified=identified_total,
        completed=completed,
    )
