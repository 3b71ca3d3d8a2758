"""Single rating node: wires validation, mempool, mining, and persistence.

This is the component a gateway process owns. All writes (submit, mine)
are serialized behind one lock; reads take whatever tip is current, which
is exactly the consistency the ledger's no-op branch tolerates.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .chain import Chain, ChainStore, Mempool, Transaction, mine_block
from .gas import CostModel, GasReceipt, OracleMode, default_calibration, meter_rate
from .ledger import (
    RateOutcome,
    get_number_of_rated_resources,
    get_rated_resource,
    get_resource_information,
    rate,
    storage_touches_for,
)
from .validation import (
    ProviderRegistry,
    ResourceProbe,
    canonicalize_url,
    check_history,
    load_registry,
    validate_resource,
)

__all__ = ["NodeConfig", "RateResult", "RatingNode"]

# low enough that auto-mining answers interactively, high enough to be a
# real proof-of-work search
DEV_DIFFICULTY = 12


@dataclass(frozen=True)
class NodeConfig:
    difficulty: int = DEV_DIFFICULTY
    max_txs_per_block: int = 100
    auto_mine: bool = True
    chain_path: Path | None = None
    oracle_mode: OracleMode = OracleMode.NONE


@dataclass(frozen=True)
class RateResult:
    resource: str
    outcome: RateOutcome
    receipt: GasReceipt
    tx_id: str | None = None            # None for estimate-only runs
    mined_height: int | None = None

    def to_dict(self) -> dict:
        body = {
            "resource": self.resource,
            "outcome": self.outcome.value,
            "gas_receipt": self.receipt.to_dict(),
        }
        if self.tx_id is not None:
            body["tx_id"] = self.tx_id
            body["status"] = "mined" if self.mined_height is not None else "pending"
            if self.mined_height is not None:
                body["mined_height"] = self.mined_height
        return body


class RatingNode:
    def __init__(
        self,
        config: NodeConfig | None = None,
        registry: ProviderRegistry | None = None,
        probe: ResourceProbe | None = None,
        cost_model: CostModel | None = None,
        clock: Callable[[], float] = time.time,
    ) -> None:
        self.config = config or NodeConfig()
        self.registry = registry if registry is not None else load_registry()
        self.probe = probe
        self.cost_model = cost_model if cost_model is not None else \
            default_calibration().model_for(self.config.oracle_mode)
        self.clock = clock
        self.mempool = Mempool()
        self._write_lock = threading.Lock()
        self._store: ChainStore | None = None
        if self.config.chain_path is not None:
            self._store = ChainStore(self.config.chain_path)
            blocks = self._store.load()
            if blocks:
                self.chain = Chain.from_blocks(
                    blocks, difficulty=self.config.difficulty,
                    cost_model=self.cost_model)
                return
        self.chain = Chain(difficulty=self.config.difficulty,
                           cost_model=self.cost_model)
        if self._store is not None:
            self._store.write_all(self.chain.blocks)

    # -- writes --------------------------------------------------------------

    def rate(self, user_id: str, raw_url: str, vote: bool,
             estimate: bool = False) -> RateResult:
        """Validate, screen, and (unless estimating) submit one rating.

        Raises InvalidResourceError / DuplicateRatingError from the checks;
        the returned receipt prices the branch the rating would take at the
        current tip.
        """
        canonical = validate_resource(self.registry, raw_url, self.probe)
        check_history(self.chain.tip_state, user_id, canonical, vote)
        _, outcome = rate(self.chain.tip_state, user_id, canonical, vote)
        receipt = meter_rate(self.cost_model, outcome,
                             storage_touches_for(outcome))
        if estimate:
            return RateResult(resource=canonical, outcome=outcome,
                              receipt=receipt)

        with self._write_lock:
            tx = Transaction(
                cred=user_id,
                res=canonical,
                vote=vote,
                nonce=self.mempool.next_submit_nonce(self.chain, user_id),
                submitted_at=int(self.clock()),
            )
            self.mempool.submit(tx, self.chain)
            mined_height = None
            if self.config.auto_mine:
                block = self._mine_locked()
                if block is not None and self.chain.contains_tx(tx.tx_id):
                    mined_height = self.chain.tx_height(tx.tx_id)
                    receipt = self.chain.receipts[tx.tx_id]
                    outcome = self.chain.outcomes[tx.tx_id]
        return RateResult(resource=canonical, outcome=outcome,
                          receipt=receipt, tx_id=tx.tx_id,
                          mined_height=mined_height)

    def _mine_locked(self):
        block = mine_block(self.chain, self.mempool,
                           max_txs=self.config.max_txs_per_block,
                           mined_at=int(self.clock()))
        if block is not None and self._store is not None:
            self._store.append(block)
        return block

    def mine(self) -> dict | None:
        """Mine one block from the mempool (admin/batch mode)."""
        with self._write_lock:
            block = self._mine_locked()
        return None if block is None else self._block_summary(block)

    # -- reads ---------------------------------------------------------------

    def resources_table(self) -> list[dict]:
        state = self.chain.tip_state
        rows = []
        for index in range(get_number_of_rated_resources(state)):
            res = get_rated_resource(state, index)
            rating = get_resource_information(state, res)
            rows.append({"resource": res, "likes": rating.likes,
                         "dislikes": rating.dislikes})
        return rows

    def resource_rating(self, raw_url: str) -> dict:
        canonical = canonicalize_url(raw_url)
        rating = get_resource_information(self.chain.tip_state, canonical)
        return {"resource": canonical, "likes": rating.likes,
                "dislikes": rating.dislikes}

    def user_history(self, user_id: str) -> list[dict]:
        state = self.chain.tip_state
        return [
            {"resource": res,
             "vote": (user_id, res) in state.ratings_information}
            for res in state.resources
            if (user_id, res) in state.users_to_resources
        ]

    def _block_summary(self, block) -> dict:
        return {
            "height": block.height,
            "hash": block.block_hash(),
            "prev_hash": block.prev_hash,
            "tx_count": len(block.txs),
            "mined_at": block.mined_at,
            "difficulty": block.difficulty,
        }

    def chain_summary(self, limit: int | None = None,
                      offset: int = 0) -> list[dict]:
        blocks = self.chain.blocks[offset:]
        if limit is not None:
            blocks = blocks[:limit]
        return [self._block_summary(b) for b in blocks]

    def state_digest_hex(self) -> str:
        return self.chain.tip_digest.hex()
