"""Miniature blockchain that carries rating transactions.

Blocks are linked by SHA-256 header digests and secured by a leading-zero
proof of work sized for desk-scale runs. The chain folds every mined
transaction through the rating ledger, so a chain's tip state (and its
digest) is a pure function of its block sequence. Per-user transaction
nonces must be consecutive, which gives replay protection and makes
"every submitted rating appears exactly once" checkable.

Transactions deliberately carry no signatures and no provider account
data: only hashed 32-hex user ids ever touch the chain, so inspecting the
block file reveals ratings but not identities.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .gas import CostModel, GasReceipt, meter_rate
from .ledger import (
    LedgerState,
    RateOutcome,
    is_valid_resource_id,
    is_valid_user_id,
    rate,
    state_digest,
    storage_touches_for,
)

__all__ = [
    "BadLinkageError",
    "BadNonceOrderError",
    "BadPowError",
    "BadTxRootError",
    "Block",
    "Chain",
    "ChainError",
    "ChainStore",
    "DuplicateTxError",
    "Mempool",
    "StaleNonceError",
    "SubmitStatus",
    "Transaction",
    "block_from_record",
    "block_to_record",
    "genesis_block",
    "leading_zero_bits",
    "merkle_root",
    "mine_block",
    "replay",
]

ZERO_HASH = "0" * 64
DEFAULT_DIFFICULTY = 12
DEFAULT_MAX_TXS = 100


class ChainError(Exception):
    """Base class for chain and mempool rejections."""


class DuplicateTxError(ChainError):
    """Transaction id already pending or already mined."""


class StaleNonceError(ChainError):
    """Transaction nonce already consumed or its slot already claimed."""


class BadPowError(ChainError):
    """Header digest does not meet the required difficulty."""


class BadLinkageError(ChainError):
    """Block does not extend the current tip."""


class BadTxRootError(ChainError):
    """Transaction list does not match the committed tx root."""


class BadNonceOrderError(ChainError):
    """A transaction's nonce is not the next expected one for its user."""


def _sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _canonical_json(payload) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def leading_zero_bits(hex_digest: str) -> int:
    """Number of leading zero bits in a 256-bit hex digest."""
    return 256 - int(hex_digest, 16).bit_length()


def merkle_root(tx_ids: list[str]) -> str:
    """Binary Merkle root over transaction ids (hex); empty list hashes empty bytes."""
    if not tx_ids:
        return _sha256_hex(b"")
    level = [bytes.fromhex(tx_id) for tx_id in tx_ids]
    while len(level) > 1:
        if len(level) % 2 == 1:
            level.append(level[-1])
        level = [
            hashlib.sha256(level[i] + level[i + 1]).digest()
            for i in range(0, len(level), 2)
        ]
    return level[0].hex()


# ---------------------------------------------------------------------------
# transactions and blocks
# ---------------------------------------------------------------------------

@dataclass
class Transaction:
    """One rating call in flight: (hashed user, resource, vote) plus ordering."""

    cred: str
    res: str
    vote: bool
    nonce: int
    submitted_at: int
    tx_id: str = ""

    def __post_init__(self) -> None:
        if not is_valid_user_id(self.cred):
            raise ValueError(f"malformed user id: {self.cred!r}")
        if not is_valid_resource_id(self.res):
            raise ValueError(f"malformed resource id: {self.res!r}")
        if self.nonce < 0:
            raise ValueError("nonce must be non-negative")
        if not self.tx_id:
            self.tx_id = self.compute_tx_id()

    def canonical_body(self) -> bytes:
        return _canonical_json(
            [self.cred, self.res, self.vote, self.nonce, self.submitted_at]
        )

    def compute_tx_id(self) -> str:
        return _sha256_hex(self.canonical_body())

    def to_dict(self) -> dict:
        return {
            "tx_id": self.tx_id,
            "cred": self.cred,
            "res": self.res,
            "vote": self.vote,
            "nonce": self.nonce,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Transaction":
        return cls(
            cred=data["cred"],
            res=data["res"],
            vote=data["vote"],
            nonce=data["nonce"],
            submitted_at=data["submitted_at"],
            tx_id=data["tx_id"],
        )


@dataclass
class Block:
    """A proof-of-work block of rating transactions."""

    height: int
    prev_hash: str
    tx_root: str
    pow_nonce: int
    difficulty: int
    mined_at: int
    txs: list[Transaction] = field(default_factory=list)

    def header_dict(self) -> dict:
        return {
            "height": self.height,
            "prev_hash": self.prev_hash,
            "tx_root": self.tx_root,
            "pow_nonce": self.pow_nonce,
            "difficulty": self.difficulty,
            "mined_at": self.mined_at,
        }

    def block_hash(self) -> str:
        return _sha256_hex(_canonical_json(self.header_dict()))

    def meets_pow(self) -> bool:
        return leading_zero_bits(self.block_hash()) >= self.difficulty


def genesis_block() -> Block:
    """The fixed first block: height 0, all-zero parent, no transactions."""
    return Block(
        height=0,
        prev_hash=ZERO_HASH,
        tx_root=merkle_root([]),
        pow_nonce=0,
        difficulty=0,
        mined_at=0,
        txs=[],
    )


def block_to_record(block: Block) -> dict:
    record = block.header_dict()
    record["block_hash"] = block.block_hash()
    record["txs"] = [tx.to_dict() for tx in block.txs]
    return record


def block_from_record(record: dict) -> Block:
    block = Block(
        height=record["height"],
        prev_hash=record["prev_hash"],
        tx_root=record["tx_root"],
        pow_nonce=record["pow_nonce"],
        difficulty=record["difficulty"],
        mined_at=record["mined_at"],
        txs=[Transaction.from_dict(tx) for tx in record["txs"]],
    )
    if record.get("block_hash") and record["block_hash"] != block.block_hash():
        raise BadTxRootError("stored block hash does not match header contents")
    return block


# ---------------------------------------------------------------------------
# the chain
# ---------------------------------------------------------------------------

class Chain:
    """Single-writer chain with an incrementally maintained tip state.

    Appends go through full validation (proof of work, linkage, tx root,
    per-user nonce order) and then fold each transaction through the
    rating ledger. Concurrent readers are fine between writes; writers
    must be serialized by the caller.
    """

    def __init__(
        self,
        difficulty: int = DEFAULT_DIFFICULTY,
        cost_model: CostModel | None = None,
    ) -> None:
        self.difficulty = difficulty
        self.cost_model = cost_model
        self.blocks: list[Block] = [genesis_block()]
        self.tip_state: LedgerState = LedgerState()
        self.receipts: dict[str, GasReceipt] = {}
        self.outcomes: dict[str, RateOutcome] = {}
        self._tip_hash: str = self.blocks[0].block_hash()
        self._tip_digest: bytes | None = None
        self._block_hashes: set[str] = {self._tip_hash}
        self._tx_heights: dict[str, int] = {}
        self._next_nonce: dict[str, int] = {}

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    @property
    def height(self) -> int:
        return self.tip.height

    @property
    def tip_digest(self) -> bytes:
        if self._tip_digest is None:
            self._tip_digest = state_digest(self.tip_state)
        return self._tip_digest

    def head_hash(self) -> str:
        return self._tip_hash

    def contains_tx(self, tx_id: str) -> bool:
        return tx_id in self._tx_heights

    def tx_height(self, tx_id: str) -> int | None:
        return self._tx_heights.get(tx_id)

    def contains_block(self, block_hash: str) -> bool:
        return block_hash in self._block_hashes

    def next_nonce(self, cred: str) -> int:
        return self._next_nonce.get(cred, 0)

    def all_txs(self) -> list[Transaction]:
        return [tx for block in self.blocks for tx in block.txs]

    def _validate(self, block: Block) -> None:
        if block.prev_hash != self._tip_hash or block.height != self.height + 1:
            raise BadLinkageError(
                f"block at height {block.height} does not extend tip "
                f"{self.height} ({self._tip_hash[:12]})"
            )
        if block.difficulty != self.difficulty:
            raise BadPowError(
                f"block difficulty {block.difficulty} != required {self.difficulty}"
            )
        if not block.meets_pow():
            raise BadPowError("header digest misses the difficulty target")
        recomputed = []
        for tx in block.txs:
            if tx.compute_tx_id() != tx.tx_id:
                raise BadTxRootError("transaction id does not match its body")
            recomputed.append(tx.tx_id)
        if merkle_root(recomputed) != block.tx_root:
            raise BadTxRootError("tx root does not cover the transaction list")
        expected = dict(self._next_nonce)
        for tx in block.txs:
            want = expected.get(tx.cred, 0)
            if tx.nonce != want:
                raise BadNonceOrderError(
                    f"tx nonce {tx.nonce} for {tx.cred[:8]} expected {want}"
                )
            expected[tx.cred] = want + 1

    def validate_and_append(self, block: Block) -> None:
        """Verify ``block`` against the tip and apply its transactions."""
        self._validate(block)
        for tx in block.txs:
            self.tip_state, outcome = rate(self.tip_state, tx.cred, tx.res, tx.vote)
            self.outcomes[tx.tx_id] = outcome
            if self.cost_model is not None:
                self.receipts[tx.tx_id] = meter_rate(
                    self.cost_model, outcome, storage_touches_for(outcome)
                )
            self._tx_heights[tx.tx_id] = block.height
            self._next_nonce[tx.cred] = tx.nonce + 1
        self.blocks.append(block)
        self._tip_hash = block.block_hash()
        self._block_hashes.add(self._tip_hash)
        self._tip_digest = None     # recomputed lazily from tip_state

    # validate_and_append is the canonical name; append reads better at call sites
    append = validate_and_append

    @classmethod
    def from_blocks(
        cls,
        blocks: list[Block],
        difficulty: int = DEFAULT_DIFFICULTY,
        cost_model: CostModel | None = None,
    ) -> "Chain":
        """Rebuild a chain by replaying ``blocks`` (genesis first) with full validation."""
        if not blocks:
            raise BadLinkageError("a chain needs at least the genesis block")
        expected_genesis = genesis_block()
        if block_to_record(blocks[0]) != block_to_record(expected_genesis):
            raise BadLinkageError("first block is not the canonical genesis block")
        chain = cls(difficulty=difficulty, cost_model=cost_model)
        for block in blocks[1:]:
            chain.validate_and_append(block)
        return chain


def replay(
    blocks: list[Block],
    difficulty: int = DEFAULT_DIFFICULTY,
    cost_model: CostModel | None = None,
) -> tuple[LedgerState, bytes]:
    """Fold a block sequence into (final ledger state, state digest)."""
    chain = Chain.from_blocks(blocks, difficulty=difficulty, cost_model=cost_model)
    return chain.tip_state, chain.tip_digest


# ---------------------------------------------------------------------------
# mempool
# ---------------------------------------------------------------------------

class SubmitStatus(Enum):
    READY = "ready"      # minable now: nonce chains from the confirmed count
    QUEUED = "queued"    # waiting for earlier nonces to arrive


class Mempool:
    """Pending transactions with per-user nonce gating.

    A transaction is minable only when its nonce chains consecutively from
    the user's confirmed count on the chain passed to each query, so the
    mempool stays correct across fork switches without holding a chain
    reference of its own.
    """

    def __init__(self) -> None:
        self.pending: dict[str, Transaction] = {}
        self._by_user: dict[str, dict[int, str]] = {}

    def __len__(self) -> int:
        return len(self.pending)

    def pending_nonces(self, cred: str) -> dict[int, str]:
        return self._by_user.get(cred, {})

    def next_submit_nonce(self, chain: Chain, cred: str) -> int:
        """First nonce not yet confirmed or pending for ``cred``."""
        nonce = chain.next_nonce(cred)
        taken = self._by_user.get(cred, {})
        while nonce in taken:
            nonce += 1
        return nonce

    def submit(self, tx: Transaction, chain: Chain) -> SubmitStatus:
        if tx.tx_id in self.pending or chain.contains_tx(tx.tx_id):
            raise DuplicateTxError(f"transaction {tx.tx_id[:12]} already known")
        base = chain.next_nonce(tx.cred)
        if tx.nonce < base:
            raise StaleNonceError(
                f"nonce {tx.nonce} already consumed for {tx.cred[:8]} (next {base})"
            )
        slots = self._by_user.setdefault(tx.cred, {})
        if tx.nonce in slots:
            raise StaleNonceError(
                f"nonce {tx.nonce} already claimed by a pending transaction"
            )
        slots[tx.nonce] = tx.tx_id
        self.pending[tx.tx_id] = tx
        ready = all(n in slots for n in range(base, tx.nonce + 1))
        return SubmitStatus.READY if ready else SubmitStatus.QUEUED

    def _ready_runs(self, chain: Chain) -> list[list[Transaction]]:
        runs = []
        for cred in sorted(self._by_user):
            slots = self._by_user[cred]
            nonce = chain.next_nonce(cred)
            run = []
            while nonce in slots:
                run.append(self.pending[slots[nonce]])
                nonce += 1
            if run:
                runs.append(run)
        return runs

    def has_ready(self, chain: Chain) -> bool:
        return bool(self._ready_runs(chain))

    def ready_txs(self, chain: Chain, max_txs: int) -> list[Transaction]:
        """Minable transactions, deterministic order, per-user nonces intact."""
        runs = self._ready_runs(chain)
        runs.sort(key=lambda run: (run[0].submitted_at, run[0].cred))
        selected: list[Transaction] = []
        for run in runs:
            take = min(len(run), max_txs - len(selected))
            selected.extend(run[:take])
            if len(selected) >= max_txs:
                break
        return selected

    def _drop(self, tx: Transaction) -> None:
        self.pending.pop(tx.tx_id, None)
        slots = self._by_user.get(tx.cred)
        if slots is not None:
            slots.pop(tx.nonce, None)
            if not slots:
                del self._by_user[tx.cred]

    def remove_included(self, block: Block) -> None:
        for tx in block.txs:
            known = self.pending.get(tx.tx_id)
            if known is not None:
                self._drop(known)

    def resync(self, chain: Chain) -> None:
        """Drop pending transactions the (possibly new) chain made moot."""
        for tx in list(self.pending.values()):
            if chain.contains_tx(tx.tx_id) or tx.nonce < chain.next_nonce(tx.cred):
                self._drop(tx)

    def reinject(self, txs: list[Transaction], chain: Chain) -> int:
        """Return abandoned-branch transactions to the pool; count re-added."""
        count = 0
        for tx in sorted(txs, key=lambda t: (t.cred, t.nonce)):
            try:
                self.submit(tx, chain)
            except ChainError:
                continue
            count += 1
        return count


# ---------------------------------------------------------------------------
# mining
# ---------------------------------------------------------------------------

def mine_block(
    chain: Chain,
    mempool: Mempool,
    max_txs: int = DEFAULT_MAX_TXS,
    mined_at: int | None = None,
    allow_empty: bool = False,
) -> Block | None:
    """Assemble, solve, and append one block; None when nothing is minable.

    Fully deterministic for fixed inputs: transaction selection is ordered
    and the proof-of-work search starts at nonce zero.
    """
    txs = mempool.ready_txs(chain, max_txs)
    if not txs and not allow_empty:
        return None
    block = Block(
        height=chain.height + 1,
        prev_hash=chain.head_hash(),
        tx_root=merkle_root([tx.tx_id for tx in txs]),
        pow_nonce=0,
        difficulty=chain.difficulty,
        mined_at=int(time.time()) if mined_at is None else mined_at,
        txs=txs,
    )
    for nonce in itertools.count():
        block.pow_nonce = nonce
        if block.meets_pow():
            break
    chain.validate_and_append(block)
    mempool.remove_included(block)
    return block


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

class ChainStore:
    """Append-only block file: one canonical JSON record per line."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)

    def exists(self) -> bool:
        return self.path.exists()

    def append(self, block: Block) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as f:
            f.write(json.dumps(block_to_record(block), sort_keys=True,
                               separators=(",", ":")))
            f.write("\n")

    def write_all(self, blocks: list[Block]) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", encoding="utf-8") as f:
            for block in blocks:
                f.write(json.dumps(block_to_record(block), sort_keys=True,
                                   separators=(",", ":")))
                f.write("\n")

    def load(self) -> list[Block]:
        if not self.path.exists():
            return []
        blocks = []
        with self.path.open("r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    blocks.append(block_from_record(json.loads(line)))
        return blocks
