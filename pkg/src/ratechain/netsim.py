"""Deterministic in-process network simulator for a cluster of rating nodes.

Models gossip of transactions and blocks over a discrete-tick event loop
with seeded randomness for latency, message drops, and mining timing.
Partitions are declared as tick intervals that split the nodes into two
groups; messages crossing an active split are discarded at both the send
and the delivery tick.

Fork resolution is longest-chain; equal lengths are broken by the
lexicographically smaller head digest so every replica picks the same
winner. Nodes re-announce their head on a heartbeat whenever they have no
confirmation that a peer has seen it, which lets partitions heal and the
event queue drain to quiescence without wall-clock timeouts.

Everything observable — per-node head digests, state digests, and event
logs — is a pure function of (config, workload).
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .chain import (
    Chain,
    ChainError,
    Mempool,
    Transaction,
    block_from_record,
    block_to_record,
    mine_block,
)

__all__ = [
    "EventKind",
    "NodeResult",
    "Partition",
    "SimConfig",
    "SimEvent",
    "SimNode",
    "SimResult",
    "WorkloadTx",
    "dump_event_log",
    "fork_choice",
    "load_scenario",
    "make_workload",
    "run_sim",
]


class EventKind(Enum):
    TX_GOSSIP = "tx_gossip"
    BLOCK_ANNOUNCE = "block_announce"
    CHAIN_REQUEST = "chain_request"
    CHAIN_RESPONSE = "chain_response"


@dataclass(frozen=True)
class Partition:
    """Bipartition active on ticks in [start, end): ``group`` vs everyone else."""

    start: int
    end: int
    group: frozenset[int]

    def blocks_link(self, a: int, b: int, tick: int) -> bool:
        return self.start <= tick < self.end and (a in self.group) != (b in self.group)


@dataclass(frozen=True)
class SimConfig:
    node_count: int = 5
    seed: int = 0
    latency_ticks: tuple[int, int] = (1, 3)
    drop_probability: float = 0.0
    partition_schedule: tuple[Partition, ...] = ()
    difficulty: int = 8
    max_txs_per_block: int = 25
    mine_probability: float = 0.2
    heartbeat_interval: int = 20
    max_ticks: int = 50_000

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ValueError("node_count must be at least 1")
        lo, hi = self.latency_ticks
        if not 1 <= lo <= hi:
            raise ValueError("latency_ticks must satisfy 1 <= min <= max")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop_probability must be within [0, 1]")
        if not 0.0 < self.mine_probability <= 1.0:
            raise ValueError("mine_probability must be within (0, 1]")
        if self.heartbeat_interval < 1:
            raise ValueError("heartbeat_interval must be positive")

    def link_blocked(self, a: int, b: int, tick: int) -> bool:
        return any(p.blocks_link(a, b, tick) for p in self.partition_schedule)


@dataclass(frozen=True)
class SimEvent:
    tick: int
    kind: EventKind
    frm: int
    to: int
    digest: str
    payload: dict = field(compare=False)

    def sort_key(self, seq: int) -> tuple:
        return (self.tick, self.frm, self.to, self.digest, self.kind.value, seq)


@dataclass(frozen=True)
class WorkloadTx:
    """One externally submitted rating: deliver ``tx`` to ``node`` at ``tick``."""

    tick: int
    node: int
    tx: Transaction


def _preferred(a: tuple[int, str], b: tuple[int, str]) -> bool:
    """True when head ``a`` beats head ``b``: higher, or equal with smaller digest."""
    if a[0] != b[0]:
        return a[0] > b[0]
    return a[1] < b[1]


def fork_choice(local: Chain, remote_head: tuple[int, str]) -> bool:
    """True when the remote chain should replace the local one.

    Switch only for a strictly longer chain, or an equal-length chain whose
    head digest sorts lexicographically smaller — the stable tiebreak that
    makes all replicas land on the same branch. Node heads are therefore
    monotone under this preference order, which the gossip layer relies on
    to discard stale reordered announcements.
    """
    return _preferred(remote_head, (local.height, local.head_hash()))


class SimNode:
    """One simulated miner/validator; touches the world only through events."""

    def __init__(self, node_id: int, sim: "_Simulation") -> None:
        self.node_id = node_id
        self.sim = sim
        self.chain = Chain(difficulty=sim.config.difficulty)
        self.mempool = Mempool()
        self.seen_txs: set[str] = set()
        # best (height, head digest) seen from each peer; never regresses
        genesis = (0, self.chain.head_hash())
        self.peer_head: dict[int, tuple[int, str]] = {
            p: genesis for p in sim.node_ids if p != node_id
        }
        self.log: list[dict] = []

    # -- helpers -----------------------------------------------------------

    def _note(self, tick: int, action: str, **details) -> None:
        self.log.append({"tick": tick, "action": action, **details})

    def head(self) -> tuple[int, str]:
        return self.chain.height, self.chain.head_hash()

    def _learn(self, frm: int, height: int, head: str) -> None:
        if _preferred((height, head), self.peer_head[frm]):
            self.peer_head[frm] = (height, head)

    def announce_head(self, tick: int, peers: list[int] | None = None,
                      reply: bool = False) -> None:
        height, head = self.head()
        payload = {"height": height, "head": head, "reply": reply}
        for peer in peers if peers is not None else self.peer_head:
            self.sim.send(tick, EventKind.BLOCK_ANNOUNCE, self.node_id, peer,
                          head, payload)

    def heartbeat(self, tick: int) -> None:
        stale = [p for p, h in self.peer_head.items() if h != self.head()]
        if stale:
            self.announce_head(tick, peers=stale)

    # -- ingest ------------------------------------------------------------

    def inject_tx(self, tick: int, tx: Transaction) -> None:
        self._accept_tx(tick, tx, source=None)

    def _accept_tx(self, tick: int, tx: Transaction, source: int | None) -> None:
        if tx.tx_id in self.seen_txs:
            return
        self.seen_txs.add(tx.tx_id)
        try:
            self.mempool.submit(tx, self.chain)
        except ChainError:
            pass        # already mined or superseded; still forward below
        for peer in self.peer_head:
            if peer != source:
                self.sim.send(tick, EventKind.TX_GOSSIP, self.node_id, peer,
                              tx.tx_id, tx.to_dict())

    def maybe_mine(self, tick: int) -> None:
        if not self.mempool.has_ready(self.chain):
            return
        if self.sim.rng.random() >= self.sim.config.mine_probability:
            return
        block = mine_block(self.chain, self.mempool,
                           max_txs=self.sim.config.max_txs_per_block,
                           mined_at=tick)
        self._note(tick, "mine", height=block.height,
                   head=block.block_hash(), txs=len(block.txs))
        self.announce_head(tick)

    # -- event handling ----------------------------------------------------

    def handle(self, event: SimEvent) -> None:
        tick = event.tick
        self._note(tick, "recv", kind=event.kind.value, frm=event.frm,
                   digest=event.digest)
        if event.kind is EventKind.TX_GOSSIP:
            self._accept_tx(tick, Transaction.from_dict(event.payload),
                            source=event.frm)
        elif event.kind is EventKind.BLOCK_ANNOUNCE:
            self._on_announce(tick, event.frm, event.payload)
        elif event.kind is EventKind.CHAIN_REQUEST:
            blocks = [block_to_record(b) for b in self.chain.blocks]
            height, head = self.head()
            self.sim.send(tick, EventKind.CHAIN_RESPONSE, self.node_id,
                          event.frm, head,
                          {"height": height, "head": head, "blocks": blocks})
        elif event.kind is EventKind.CHAIN_RESPONSE:
            self._learn(event.frm, event.payload["height"],
                        event.payload["head"])
            claimed = (event.payload["height"], event.payload["head"])
            if fork_choice(self.chain, claimed):
                self._consider_chain(tick, event.frm, event.payload["blocks"])

    def _on_announce(self, tick: int, frm: int, payload: dict) -> None:
        theirs = (payload["height"], payload["head"])
        self._learn(frm, *theirs)
        if fork_choice(self.chain, theirs):
            self.sim.send(tick, EventKind.CHAIN_REQUEST, self.node_id, frm,
                          theirs[1], {"head": theirs[1]})
        elif theirs == self.head():
            # same head: acknowledge so their heartbeat stops retrying;
            # replies are never themselves acknowledged, so no ping-pong
            if not payload.get("reply"):
                self.announce_head(tick, peers=[frm], reply=True)
        else:
            # they are behind; teach, heartbeat covers a lost reply
            self.announce_head(tick, peers=[frm], reply=True)

    def _consider_chain(self, tick: int, frm: int, records: list[dict]) -> None:
        try:
            candidate = Chain.from_blocks(
                [block_from_record(r) for r in records],
                difficulty=self.sim.config.difficulty)
        except (ChainError, KeyError, ValueError):
            self._note(tick, "reject_chain", frm=frm)
            return
        if not fork_choice(self.chain, (candidate.height, candidate.head_hash())):
            return
        abandoned = [tx for tx in self.chain.all_txs()
                     if not candidate.contains_tx(tx.tx_id)]
        self.chain = candidate
        self.mempool.resync(self.chain)
        reinjected = self.mempool.reinject(abandoned, self.chain)
        self._note(tick, "adopt", height=candidate.height,
                   head=candidate.head_hash(), reinjected=reinjected)
        self.announce_head(tick)


@dataclass
class NodeResult:
    node_id: int
    head_hash: str
    state_digest: str
    chain_length: int
    tx_count: int
    event_log: list[dict]


@dataclass
class SimResult:
    config: SimConfig
    nodes: list[SimNode]
    ticks_run: int
    quiesced: bool
    delivered: int
    dropped: int

    @property
    def node_results(self) -> list[NodeResult]:
        return [
            NodeResult(
                node_id=n.node_id,
                head_hash=n.chain.head_hash(),
                state_digest=n.chain.tip_digest.hex(),
                chain_length=n.chain.height,
                tx_count=sum(len(b.txs) for b in n.chain.blocks),
                event_log=n.log,
            )
            for n in self.nodes
        ]

    @property
    def converged(self) -> bool:
        heads = {n.chain.head_hash() for n in self.nodes}
        digests = {n.chain.tip_digest for n in self.nodes}
        return len(heads) == 1 and len(digests) == 1


class _Simulation:
    def __init__(self, config: SimConfig, workload: list[WorkloadTx]) -> None:
        self.config = config
        self.node_ids = list(range(config.node_count))
        self.rng = random.Random(config.seed)
        self.queue: list[tuple[tuple, SimEvent]] = []
        self.seq = 0
        self.delivered = 0
        self.dropped = 0
        self.nodes = [SimNode(i, self) for i in self.node_ids]
        self.workload = sorted(workload, key=lambda w: (w.tick, w.node,
                                                        w.tx.tx_id))

    def send(self, tick: int, kind: EventKind, frm: int, to: int,
             digest: str, payload: dict) -> None:
        if self.config.link_blocked(frm, to, tick):
            self.dropped += 1
            return
        if self.config.drop_probability and \
                self.rng.random() < self.config.drop_probability:
            self.dropped += 1
            return
        lo, hi = self.config.latency_ticks
        event = SimEvent(tick=tick + self.rng.randint(lo, hi), kind=kind,
                         frm=frm, to=to, digest=digest, payload=payload)
        heapq.heappush(self.queue, (event.sort_key(self.seq), event))
        self.seq += 1

    def _pending_work(self, next_workload: int) -> bool:
        if self.queue or next_workload < len(self.workload):
            return True
        for node in self.nodes:
            if node.mempool.has_ready(node.chain):
                return True
            if any(h != node.head() for h in node.peer_head.values()):
                return True
        return False

    def run(self) -> SimResult:
        next_workload = 0
        tick = 0
        while tick < self.config.max_ticks:
            while (next_workload < len(self.workload)
                   and self.workload[next_workload].tick <= tick):
                item = self.workload[next_workload]
                self.nodes[item.node].inject_tx(tick, item.tx)
                next_workload += 1
            while self.queue and self.queue[0][1].tick <= tick:
                event = heapq.heappop(self.queue)[1]
                if self.config.link_blocked(event.frm, event.to, tick):
                    self.dropped += 1
                    continue
                self.delivered += 1
                self.nodes[event.to].handle(event)
            for node in self.nodes:
                node.maybe_mine(tick)
            if tick % self.config.heartbeat_interval == 0:
                for node in self.nodes:
                    node.heartbeat(tick)
            if not self._pending_work(next_workload):
                return SimResult(self.config, self.nodes, tick, True,
                                 self.delivered, self.dropped)
            tick += 1
        return SimResult(self.config, self.nodes, tick, False,
                         self.delivered, self.dropped)


def run_sim(config: SimConfig, workload: list[WorkloadTx]) -> SimResult:
    """Run to quiescence (or the tick cap) and report per-node outcomes."""
    return _Simulation(config, workload).run()


# ---------------------------------------------------------------------------
# workload and scenario plumbing
# ---------------------------------------------------------------------------

def make_workload(
    seed: int,
    tx_count: int,
    user_count: int = 8,
    resource_count: int = 8,
    node_count: int = 5,
    start_tick: int = 1,
    max_gap: int = 3,
) -> list[WorkloadTx]:
    """Deterministic rating schedule with consecutive per-user nonces."""
    rng = random.Random(seed)
    nonces = [0] * user_count
    tick = start_tick
    items = []
    for _ in range(tx_count):
        user = rng.randrange(user_count)
        tx = Transaction(
            cred=f"{user:032x}",
            res=f"https://example.com/items/{rng.randrange(resource_count)}",
            vote=rng.random() < 0.5,
            nonce=nonces[user],
            submitted_at=tick,
        )
        nonces[user] += 1
        items.append(WorkloadTx(tick=tick, node=rng.randrange(node_count), tx=tx))
        tick += rng.randint(0, max_gap)
    return items


def load_scenario(path: str | Path) -> tuple[SimConfig, list[WorkloadTx]]:
    """Read a scenario file: {"config": {...}, "workload": [...]} as JSON."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    raw = dict(data.get("config", {}))
    if "latency_ticks" in raw:
        raw["latency_ticks"] = tuple(raw["latency_ticks"])
    raw["partition_schedule"] = tuple(
        Partition(start=p["start"], end=p["end"], group=frozenset(p["group"]))
        for p in raw.get("partition_schedule", ())
    )
    config = SimConfig(**raw)
    workload = [
        WorkloadTx(
            tick=w["tick"],
            node=w["node"],
            tx=Transaction(cred=w["cred"], res=w["res"], vote=w["vote"],
                           nonce=w["nonce"],
                           submitted_at=w.get("submitted_at", w["tick"])),
        )
        for w in data.get("workload", [])
    ]
    return config, workload


def dump_event_log(result: SimResult, path: str | Path) -> None:
    """Write per-node event logs as JSON lines for offline debugging."""
    with Path(path).open("w", encoding="utf-8") as f:
        for node in result.nodes:
            for entry in node.log:
                f.write(json.dumps({"node": node.node_id, **entry},
                                   sort_keys=True, separators=(",", ":")))
                f.write("\n")
