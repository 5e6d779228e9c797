"""Relay-suppression state machine kept per (node, origin validator).

Each node counts, per remote validator, how many message copies every peer
delivers. The first peers to accumulate enough copies become the selected
relayers; everyone else who relayed gets a timed squelch request and stops
forwarding that validator's messages to us. Expiry, or the loss of a
selected uplink, returns the slot to a fresh counting round.

This module is a pure state-transition library: it performs no I/O and owns
no timers. Callers inject the current simulated time. State objects are
mutated in place and owned by exactly one simulated node.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from enum import Enum

from .messages import MessageKind


class SlotState(Enum):
    COUNTING = "counting"
    SELECTED = "selected"


class ControlKind(Enum):
    SQUELCH = "squelch"
    UNSQUELCH = "unsquelch"


class ContractViolationError(RuntimeError):
    """An operation was invoked outside its stated precondition."""


@dataclass(frozen=True)
class ControlMessage:
    """Peer-to-peer request to stop (squelch) or resume (unsquelch) relaying
    one validator's messages. Never itself relayed."""

    kind: ControlKind
    origin_validator: int
    duration_ms: int = 0

    def __post_init__(self) -> None:
        if self.kind is ControlKind.SQUELCH and self.duration_ms <= 0:
            raise ValueError("squelch duration must be positive")
        if self.kind is ControlKind.UNSQUELCH and self.duration_ms != 0:
            raise ValueError("unsquelch carries no duration")


@dataclass(frozen=True)
class ProtocolConfig:
    count_threshold: int = 10
    max_selected: int = 3
    squelch_base_ms: int = 300_000
    squelch_jitter_ms: int = 150_000
    squelch_kinds: frozenset[MessageKind] = frozenset(
        {MessageKind.PROPOSAL, MessageKind.VALIDATION}
    )

    def __post_init__(self) -> None:
        if self.count_threshold < 1:
            raise ValueError("count_threshold must be at least 1")
        if self.max_selected < 1:
            raise ValueError("max_selected must be at least 1")
        if self.squelch_base_ms < 1:
            raise ValueError("squelch_base_ms must be positive")
        if self.squelch_jitter_ms < 0:
            raise ValueError("squelch_jitter_ms must be non-negative")


@dataclass
class Slot:
    """Relay state one node keeps for one origin validator."""

    owner: int
    origin_validator: int
    per_peer_count: dict[int, int] = field(default_factory=dict)
    selected: set[int] = field(default_factory=set)
    squelched: dict[int, float] = field(default_factory=dict)
    state: SlotState = SlotState.COUNTING
    round_index: int = 0


@dataclass
class PeerLinkState:
    """What one peer asked of us: validators we must not relay to it."""

    peer: int
    downlink_squelches: dict[int, float] = field(default_factory=dict)


def squelch_duration_ms(config: ProtocolConfig, owner: int, peer: int, round_index: int) -> int:
    """Base duration plus deterministic per-(node, peer, round) jitter."""
    if config.squelch_jitter_ms == 0:
        return config.squelch_base_ms
    packed = struct.pack("<qqq", owner, peer, round_index)
    digest = hashlib.blake2b(packed, digest_size=8).digest()
    jitter = int.from_bytes(digest, "little") % config.squelch_jitter_ms
    return config.squelch_base_ms + jitter


def on_validator_message(
    slot: Slot,
    from_peer: int,
    now: float,
    config: ProtocolConfig,
) -> tuple[Slot, list[tuple[int, ControlMessage]]]:
    """Count one delivered copy and drive the selection automaton.

    While counting, a peer that reaches the copy threshold joins the selected
    set; once the set is full, every other peer that relayed this round gets
    exactly one squelch. Once selected, stragglers that keep relaying are
    squelched as they show up; copies from already-squelched peers are late
    in-flight traffic and trigger nothing.

    Returns the (mutated) slot and the control messages to send, ordered by
    peer id for determinism.
    """
    actions: list[tuple[int, ControlMessage]] = []
    count = slot.per_peer_count.get(from_peer, 0) + 1
    slot.per_peer_count[from_peer] = count

    if slot.state is SlotState.COUNTING:
        if count >= config.count_threshold and from_peer not in slot.selected:
            slot.selected.add(from_peer)
            # A stale squelch entry may linger if the peer raced its expiry.
            slot.squelched.pop(from_peer, None)
            if len(slot.selected) >= config.max_selected:
                slot.state = SlotState.SELECTED
                for peer in sorted(slot.per_peer_count):
                    if peer in slot.selected:
                        continue
                    if peer in slot.squelched and slot.squelched[peer] > now:
                        continue
                    actions.append(_squelch_peer(slot, peer, now, config))
    else:
        if from_peer not in slot.selected:
            expiry = slot.squelched.get(from_peer)
            if expiry is None or expiry <= now:
                actions.append(_squelch_peer(slot, from_peer, now, config))
    return slot, actions


def _squelch_peer(
    slot: Slot, peer: int, now: float, config: ProtocolConfig
) -> tuple[int, ControlMessage]:
    duration = squelch_duration_ms(config, slot.owner, peer, slot.round_index)
    slot.squelched[peer] = now + duration
    return (
        peer,
        ControlMessage(ControlKind.SQUELCH, slot.origin_validator, duration),
    )


def on_squelch_expired(slot: Slot, peer: int, now: float) -> Slot:
    """Drop an elapsed squelch and open a fresh counting round.

    The whole slot resets: counts zeroed, selection cleared, so a previously
    squelched peer can win the new round. Other peers' squelches keep their
    own expiry times.
    """
    expiry = slot.squelched.get(peer)
    if expiry is None:
        raise ContractViolationError(
            f"peer {peer} has no active squelch on slot for validator {slot.origin_validator}"
        )
    if expiry > now:
        raise ContractViolationError(
            f"squelch for peer {peer} expires at {expiry}, not yet elapsed at {now}"
        )
    del slot.squelched[peer]
    _reset_to_counting(slot)
    return slot


def on_squelch_received(link: PeerLinkState, msg: ControlMessage, now: float) -> PeerLinkState:
    """Record that this peer must not receive the validator's messages until
    now + duration. A repeat squelch overwrites the previous expiry."""
    if msg.kind is not ControlKind.SQUELCH:
        raise ContractViolationError("on_squelch_received requires a squelch message")
    link.downlink_squelches[msg.origin_validator] = now + msg.duration_ms
    return link


def on_unsquelch_received(link: PeerLinkState, msg: ControlMessage) -> PeerLinkState:
    """Resume relaying the validator's messages to this peer. Idempotent."""
    if msg.kind is not ControlKind.UNSQUELCH:
        raise ContractViolationError("on_unsquelch_received requires an unsquelch message")
    link.downlink_squelches.pop(msg.origin_validator, None)
    return link


def on_uplink_lost(
    slots: dict[int, Slot],
    lost_peer: int,
    now: float,
) -> tuple[dict[int, Slot], list[tuple[int, ControlMessage]]]:
    """React to a disconnected peer across all of a node's slots.

    Slots that had the peer selected unsquelch everyone and restart counting
    so replacement uplinks can be chosen; other slots merely forget the
    peer's counter. Actions are emitted per slot in validator order.
    """
    actions: list[tuple[int, ControlMessage]] = []
    for validator in sorted(slots):
        slot = slots[validator]
        if lost_peer in slot.selected:
            for peer in sorted(slot.squelched):
                actions.append(
                    (peer, ControlMessage(ControlKind.UNSQUELCH, validator, 0))
                )
            slot.squelched.clear()
            _reset_to_counting(slot)
        else:
            slot.per_peer_count.pop(lost_peer, None)
    return slots, actions


def should_relay(link: PeerLinkState, origin_validator: int, now: float) -> bool:
    """False only while an unexpired downlink squelch exists for the
    validator. An expiry exactly equal to now counts as expired."""
    expiry = link.downlink_squelches.get(origin_validator)
    return expiry is None or expiry <= now


def _reset_to_counting(slot: Slot) -> None:
    slot.state = SlotState.COUNTING
    slot.per_peer_count.clear()
    slot.selected.clear()
    slot.round_index += 1
