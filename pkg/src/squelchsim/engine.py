"""Deterministic discrete-event execution of one dissemination scenario.

Validators emit proposals and validations on a fixed cadence, trackers
submit transaction bursts per plan, and every delivery is a timed event on
a single priority queue ordered by (time, insertion sequence). Nodes relay
only the first copy of each message; later copies are counted as duplicates
and dropped. Under the squelch policy the per-validator slot machinery from
`squelch` governs which peers keep relaying, and its control messages
travel the same links (one hop, never relayed).

Identical config and seed produce a bit-identical metrics log: the loop is
single-threaded, all tie-breaks go through the insertion sequence, and the
only randomness is the seeded topology generation upstream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from heapq import heappop, heappush

from .messages import DEFAULT_MESSAGE_SIZES, MessageKind, SimMessage
from .metrics import MetricsLog
from .squelch import (
    ControlKind,
    PeerLinkState,
    ProtocolConfig,
    Slot,
    on_squelch_expired,
    on_squelch_received,
    on_unsquelch_received,
    on_uplink_lost,
    on_validator_message,
    should_relay,
)
from .topology import TopologyGraph

logger = logging.getLogger(__name__)

# Event codes; payloads are plain tuples for speed. Ordering in the heap is
# (at, seq) only, seq is unique, so payloads are never compared.
_DELIVER_APP = 0
_DELIVER_CTRL = 1
_EMIT_ROUND = 2
_SUBMIT_TX = 3
_SQUELCH_EXPIRY = 4
_DISCONNECT = 5


class RelayPolicy(Enum):
    FLOOD = "flood"
    SQUELCH = "squelch"


class ScenarioSetupError(ValueError):
    """The scenario cannot start (disconnected topology, bad plan ids)."""


@dataclass(frozen=True)
class TxBurst:
    """A group of trackers submitting `count` transactions round-robin,
    spaced by the group-level rate (0 means all at start_ms)."""

    start_ms: float
    trackers: tuple[int, ...]
    count: int
    rate_per_s: float = 0.0

    def __post_init__(self) -> None:
        if self.start_ms < 0 or self.count < 0 or self.rate_per_s < 0:
            raise ValueError("burst fields must be non-negative")


@dataclass(frozen=True)
class Disconnect:
    at_ms: float
    node: int


@dataclass(frozen=True)
class ScenarioConfig:
    topology: TopologyGraph
    duration_ms: int
    relay_policy: RelayPolicy
    ledger_round_ms: int = 1000
    proposals_per_round: int = 1
    tx_plan: tuple[TxBurst, ...] = ()
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    seed: int = 0
    warmup_ms: int = 10_000
    message_sizes: dict[MessageKind, int] = field(
        default_factory=lambda: dict(DEFAULT_MESSAGE_SIZES)
    )
    disconnects: tuple[Disconnect, ...] = ()
    config_hash: str = ""

    def __post_init__(self) -> None:
        if self.warmup_ms < 0 or self.duration_ms <= self.warmup_ms:
            raise ValueError("need duration_ms > warmup_ms >= 0")
        if self.ledger_round_ms <= 0:
            raise ValueError("ledger_round_ms must be positive")
        if self.proposals_per_round < 0:
            raise ValueError("proposals_per_round must be non-negative")


class NodeState:
    """Mutable per-node simulation state."""

    __slots__ = ("node_id", "neighbors", "latency", "links", "slots", "seen",
                 "protocol", "live", "unknown_peer_msgs")

    def __init__(self, node_id: int, neighbors: tuple[int, ...],
                 latency: dict[int, float], protocol: ProtocolConfig):
        self.node_id = node_id
        self.neighbors = neighbors
        self.latency = latency
        self.links = {p: PeerLinkState(p) for p in neighbors}
        self.slots: dict[int, Slot] = {}
        self.seen: set[tuple[MessageKind, int, int]] = set()
        self.protocol = protocol
        self.live = True
        self.unknown_peer_msgs = 0


def relay_decision_flood(node: NodeState, message: SimMessage,
                         arrived_from: int | None) -> list[int]:
    """All live neighbors except the sender; the origin passes None and
    forwards to everyone."""
    return [p for p in node.neighbors if p != arrived_from]


def relay_decision_squelch(node: NodeState, message: SimMessage,
                           arrived_from: int | None, now: float) -> list[int]:
    """Flood set minus peers that squelched us for this origin. Kinds outside
    the configured squelch set (transactions by default) always flood."""
    if message.kind not in node.protocol.squelch_kinds:
        return relay_decision_flood(node, message, arrived_from)
    links = node.links
    origin = message.origin
    return [
        p
        for p in node.neighbors
        if p != arrived_from and should_relay(links[p], origin, now)
    ]


def run_scenario(cfg: ScenarioConfig) -> MetricsLog:
    """Execute the event loop until duration_ms and return the metrics log."""
    graph = cfg.topology
    if not graph.is_connected():
        raise ScenarioSetupError("topology is disconnected")

    protocol = cfg.protocol
    squelching = cfg.relay_policy is RelayPolicy.SQUELCH
    squelch_kinds = protocol.squelch_kinds
    duration = float(cfg.duration_ms)
    sizes = dict(DEFAULT_MESSAGE_SIZES)
    sizes.update(cfg.message_sizes)

    nodes: dict[int, NodeState] = {}
    for node_id in graph.nodes:
        nbrs = graph.neighbors(node_id)
        lat = {p: graph.edge_latency(node_id, p) for p in nbrs}
        nodes[node_id] = NodeState(node_id, nbrs, lat, protocol)

    log = MetricsLog(
        policy=cfg.relay_policy.value,
        seed=cfg.seed,
        config_hash=cfg.config_hash,
        warmup_ms=cfg.warmup_ms,
        duration_ms=cfg.duration_ms,
        message_sizes=sizes,
    )
    counts = log.counts
    dups = log.duplicates

    heap: list[tuple] = []
    seq = 0

    def push(at: float, code: int, data) -> None:
        nonlocal seq
        if at < duration:
            heappush(heap, (at, seq, code, data))
            seq += 1

    validators = sorted(graph.validator_set)
    for v in validators:
        push(0.0, _EMIT_ROUND, v)

    all_trackers = sorted(graph.tracker_set)
    for burst in cfg.tx_plan:
        group = burst.trackers or tuple(all_trackers)
        if burst.count > 0 and not group:
            raise ScenarioSetupError("transaction burst has no trackers to submit from")
        for origin in group:
            if origin not in nodes:
                raise ScenarioSetupError(f"burst tracker {origin} is not a topology node")
        gap = 1000.0 / burst.rate_per_s if burst.rate_per_s > 0 else 0.0
        for i in range(burst.count):
            push(burst.start_ms + i * gap, _SUBMIT_TX, group[i % len(group)])

    for disc in cfg.disconnects:
        if disc.node not in nodes:
            raise ScenarioSetupError(f"disconnect names unknown node {disc.node}")
        push(disc.at_ms, _DISCONNECT, disc.node)

    sequence_counters: dict[tuple[int, MessageKind], int] = {}

    def next_sequence(origin: int, kind: MessageKind) -> int:
        key = (origin, kind)
        n = sequence_counters.get(key, 0)
        sequence_counters[key] = n + 1
        return n

    emitted_app_msgs = 0

    def broadcast_from_origin(origin_node: NodeState, msg: SimMessage, at: float) -> None:
        """The origin sends to every neighbor, honoring downlink squelches
        for squelchable kinds under the squelch policy."""
        nonlocal emitted_app_msgs, seq
        emitted_app_msgs += 1
        origin_node.seen.add(msg.dedup_key)
        if squelching:
            targets = relay_decision_squelch(origin_node, msg, None, at)
        else:
            targets = relay_decision_flood(origin_node, msg, None)
        src = origin_node.node_id
        lat = origin_node.latency
        for p in targets:
            if nodes[p].live:
                t = at + lat[p]
                if t < duration:
                    heappush(heap, (t, seq, _DELIVER_APP, (msg, src, p)))
                    seq += 1

    def feed_slot(node: NodeState, origin: int, from_peer: int, at: float) -> None:
        slot = node.slots.get(origin)
        if slot is None:
            slot = Slot(owner=node.node_id, origin_validator=origin)
            node.slots[origin] = slot
        _, actions = on_validator_message(slot, from_peer, at, protocol)
        src = node.node_id
        lat = node.latency
        for peer, ctrl in actions:
            if not nodes[peer].live:
                continue
            push(at + lat[peer], _DELIVER_CTRL, (ctrl, src, peer))
            if ctrl.kind is ControlKind.SQUELCH:
                push(slot.squelched[peer], _SQUELCH_EXPIRY,
                     (src, origin, peer, slot.squelched[peer]))

    while heap:
        at, _, code, data = heappop(heap)

        if code == _DELIVER_APP:
            msg, src, dst = data
            node = nodes[dst]
            if not node.live:
                continue
            second = int(at // 1000)
            kind = msg.kind
            counts[(src, second, kind, "out")] += 1
            counts[(dst, second, kind, "in")] += 1
            from_live_neighbor = src in node.latency and nodes[src].live
            if not from_live_neighbor:
                node.unknown_peer_msgs += 1
            key = msg.dedup_key
            if key in node.seen:
                dups[(dst, second, kind)] += 1
                if squelching and kind in squelch_kinds and from_live_neighbor:
                    feed_slot(node, msg.origin, src, at)
                continue
            node.seen.add(key)
            if squelching:
                if kind in squelch_kinds and from_live_neighbor:
                    feed_slot(node, msg.origin, src, at)
                targets = relay_decision_squelch(node, msg, src, at)
            else:
                targets = relay_decision_flood(node, msg, src)
            lat = node.latency
            for p in targets:
                if nodes[p].live:
                    t = at + lat[p]
                    if t < duration:
                        heappush(heap, (t, seq, _DELIVER_APP, (msg, dst, p)))
                        seq += 1

        elif code == _DELIVER_CTRL:
            ctrl, src, dst = data
            node = nodes[dst]
            if not node.live:
                continue
            second = int(at // 1000)
            kind = (MessageKind.SQUELCH if ctrl.kind is ControlKind.SQUELCH
                    else MessageKind.UNSQUELCH)
            counts[(src, second, kind, "out")] += 1
            counts[(dst, second, kind, "in")] += 1
            link = node.links.get(src)
            if link is None:
                node.unknown_peer_msgs += 1
                continue
            if ctrl.kind is ControlKind.SQUELCH:
                on_squelch_received(link, ctrl, at)
            else:
                on_unsquelch_received(link, ctrl)

        elif code == _EMIT_ROUND:
            v = data
            node = nodes[v]
            if not node.live:
                continue
            for _ in range(cfg.proposals_per_round):
                msg = SimMessage(MessageKind.PROPOSAL, v,
                                 next_sequence(v, MessageKind.PROPOSAL),
                                 sizes[MessageKind.PROPOSAL])
                broadcast_from_origin(node, msg, at)
            msg = SimMessage(MessageKind.VALIDATION, v,
                             next_sequence(v, MessageKind.VALIDATION),
                             sizes[MessageKind.VALIDATION])
            broadcast_from_origin(node, msg, at)
            push(at + cfg.ledger_round_ms, _EMIT_ROUND, v)

        elif code == _SUBMIT_TX:
            origin = data
            node = nodes[origin]
            if not node.live:
                continue
            msg = SimMessage(MessageKind.TRANSACTION, origin,
                             next_sequence(origin, MessageKind.TRANSACTION),
                             sizes[MessageKind.TRANSACTION])
            broadcast_from_origin(node, msg, at)

        elif code == _SQUELCH_EXPIRY:
            owner, validator, peer, expiry = data
            node = nodes[owner]
            if not node.live:
                continue
            slot = node.slots.get(validator)
            # Stale expiries (slot reset or re-squelch meanwhile) are skipped.
            if slot is not None and slot.squelched.get(peer) == expiry:
                on_squelch_expired(slot, peer, at)

        else:  # _DISCONNECT
            gone = data
            node = nodes[gone]
            if not node.live:
                continue
            node.live = False
            for nb_id in node.neighbors:
                nb = nodes[nb_id]
                if not nb.live:
                    continue
                nb.neighbors = tuple(p for p in nb.neighbors if p != gone)
                nb.latency.pop(gone, None)
                _, actions = on_uplink_lost(nb.slots, gone, at)
                for peer, ctrl in actions:
                    if peer != gone and nodes[peer].live:
                        push(at + nb.latency[peer], _DELIVER_CTRL, (ctrl, nb_id, peer))

    if emitted_app_msgs == 0:
        logger.warning(
            "scenario produced no application traffic (no validators or transactions); "
            "metrics log is empty"
        )
    return log
