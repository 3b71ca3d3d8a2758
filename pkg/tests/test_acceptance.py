"""Acceptance gate: one test per published claim, strict thresholds.

Each test wraps its checks in `criterion(...)` so the run ends with a
PASS/FAIL line per criterion in the terminal summary.
"""

from __future__ import annotations

import json
import random
import re
import time

from fastapi.testclient import TestClient

from conftest import criterion
from naive_model import NaiveRatingModel

from ratechain import cli
from ratechain.chain import Chain, Mempool, Transaction, mine_block, replay
from ratechain.gas import OracleMode, default_calibration
from ratechain.gateway import create_app
from ratechain.identity import build_stub_auth_service, load_stub_accounts
from ratechain.ledger import (
    LedgerState,
    RateOutcome,
    rate,
    state_digest,
)
from ratechain.netsim import Partition, SimConfig, make_workload, run_sim
from ratechain.node import NodeConfig, RatingNode

USERS = [f"{n:032x}" for n in range(8)]
RESOURCES = [f"https://example.com/items/{n}" for n in range(8)]


def test_acceptance_oracle_equivalence():
    with criterion("oracle equivalence: 10,000 ops match the latest-vote "
                   "reference model, < 5 s") as entry:
        rng = random.Random(0xACCE97)
        started = time.perf_counter()
        state = LedgerState()
        model = NaiveRatingModel()
        for _ in range(10_000):
            user = rng.choice(USERS)
            res = rng.choice(RESOURCES)
            vote = rng.random() < 0.5
            state, _ = rate(state, user, res, vote)
            model.rate(user, res, vote)
        elapsed = time.perf_counter() - started
        assert state == model.expected_state()
        assert state_digest(state) == state_digest(model.expected_state())
        assert elapsed < 5.0
        entry["detail"] = f"10000 ops in {elapsed:.2f}s, digests equal"


def test_acceptance_conservation_and_non_negativity():
    with criterion("conservation: likes+dislikes == distinct raters and all "
                   "counters >= 0 after every step, 1,000 sequences") as entry:
        rng = random.Random(0x5EED)
        checked_steps = 0
        for _ in range(1_000):
            state = LedgerState()
            raters: dict[str, set[str]] = {}
            # bias toward repeats so flips and the first-dislike-then-like
            # branch occur constantly
            for _ in range(rng.randint(1, 20)):
                user = rng.choice(USERS[:3])
                res = rng.choice(RESOURCES[:3])
                state, _ = rate(state, user, res, rng.random() < 0.5)
                raters.setdefault(res, set()).add(user)
                for r, who in raters.items():
                    rating = state.resources_information[r]
                    assert rating.likes >= 0 and rating.dislikes >= 0
                    assert rating.likes + rating.dislikes == len(who)
                checked_steps += 1
        entry["detail"] = f"1000 sequences, {checked_steps} steps checked"


def test_acceptance_use_case_rate_positively_or_negatively():
    with criterion("use case: resources can be rated positively or "
                   "negatively") as entry:
        state = LedgerState()
        state, _ = rate(state, USERS[0], RESOURCES[0], True)
        state, _ = rate(state, USERS[1], RESOURCES[1], False)
        assert state.resources_information[RESOURCES[0]].likes == 1
        assert state.resources_information[RESOURCES[1]].dislikes == 1
        entry["detail"] = "like -> (1,0); dislike -> (0,1)"


def test_acceptance_use_case_change_rating_moves_exactly_one_unit():
    with criterion("use case: changing a rating yields exactly "
                   "(likes-1, dislikes+1)") as entry:
        state = LedgerState()
        for user in USERS[:3]:
            state, _ = rate(state, user, RESOURCES[0], True)
        before = state.resources_information[RESOURCES[0]]
        state, outcome = rate(state, USERS[0], RESOURCES[0], False)
        after = state.resources_information[RESOURCES[0]]
        assert outcome is RateOutcome.FLIPPED
        assert after.likes == before.likes - 1
        assert after.dislikes == before.dislikes + 1
        entry["detail"] = f"(3,0) -> ({after.likes},{after.dislikes})"


def test_acceptance_use_case_new_resource_counter_updates_to_one():
    with criterion("use case: first rating records the resource and its "
                   "counter updates 0 -> 1") as entry:
        state = LedgerState()
        assert RESOURCES[0] not in state.rated_resources
        state, outcome = rate(state, USERS[0], RESOURCES[0], True)
        assert outcome is RateOutcome.NEW_RESOURCE
        assert state.resources == [RESOURCES[0]]
        assert state.resources_information[RESOURCES[0]].likes == 1

        state2 = LedgerState()
        state2, _ = rate(state2, USERS[0], RESOURCES[0], False)
        assert state2.resources_information[RESOURCES[0]].dislikes == 1
        entry["detail"] = "recorded + counter 0 -> 1 for both votes"


def test_acceptance_use_case_known_resource_increments_by_one():
    with criterion("use case: rating a known resource increments the chosen "
                   "counter by one") as entry:
        state = LedgerState()
        state, _ = rate(state, USERS[0], RESOURCES[0], True)
        state, outcome = rate(state, USERS[1], RESOURCES[0], True)
        assert outcome is RateOutcome.NEW_RATER
        assert state.resources_information[RESOURCES[0]].likes == 2
        state, _ = rate(state, USERS[2], RESOURCES[0], False)
        rating = state.resources_information[RESOURCES[0]]
        assert (rating.likes, rating.dislikes) == (2, 1)
        entry["detail"] = "like: 1->2; dislike: 0->1"


def _grow_chain(n_txs: int, seed: int, cost_model=None) -> Chain:
    rng = random.Random(seed)
    chain = Chain(difficulty=4, cost_model=cost_model)
    pool = Mempool()
    nonces: dict[str, int] = {}
    for i in range(n_txs):
        user = rng.choice(USERS)
        tx = Transaction(cred=user, res=rng.choice(RESOURCES),
                         vote=rng.random() < 0.5,
                         nonce=nonces.get(user, 0), submitted_at=i)
        nonces[user] = tx.nonce + 1
        pool.submit(tx, chain)
        if rng.random() < 0.1:
            mine_block(chain, pool, mined_at=i)
    mine_block(chain, pool, mined_at=n_txs)
    return chain


def test_acceptance_replay_determinism():
    with criterion("replay determinism: two replicas of a 1,000-tx chain "
                   "agree with the incremental tip") as entry:
        chain = _grow_chain(1_000, seed=0xD1CE)
        assert sum(len(b.txs) for b in chain.blocks) == 1_000
        state_a, digest_a = replay(chain.blocks, difficulty=4)
        state_b, digest_b = replay(chain.blocks, difficulty=4)
        assert digest_a == digest_b == chain.tip_digest
        assert state_a == state_b == chain.tip_state
        entry["detail"] = (f"{chain.height} blocks, digest "
                           f"{digest_a.hex()[:16]}… on both replicas")


def test_acceptance_partition_convergence():
    with criterion("convergence: 5 nodes, 200 txs, 300-tick partition heals "
                   "to one chain with every tx exactly once, < 30 s") as entry:
        started = time.perf_counter()
        workload = make_workload(seed=2024, tx_count=200)
        config = SimConfig(
            node_count=5, seed=2024, latency_ticks=(1, 3),
            drop_probability=0.0,
            partition_schedule=(Partition(50, 350, frozenset({0, 1})),),
            difficulty=4, max_txs_per_block=25, mine_probability=0.25,
            heartbeat_interval=10, max_ticks=50_000,
        )
        result = run_sim(config, workload)
        elapsed = time.perf_counter() - started
        assert result.quiesced
        assert result.converged
        heads = {n.chain.head_hash() for n in result.nodes}
        digests = {n.chain.tip_digest for n in result.nodes}
        assert len(heads) == 1 and len(digests) == 1
        mined = [tx.tx_id for b in result.nodes[0].chain.blocks for tx in b.txs]
        assert sorted(mined) == sorted(w.tx.tx_id for w in workload)
        assert len(set(mined)) == 200
        assert elapsed < 30.0
        entry["detail"] = (f"quiesced at tick {result.ticks_run} in "
                           f"{elapsed:.2f}s, one head, 200/200 txs")


def test_acceptance_gas_constancy():
    with criterion("gas constancy: across 1,000 txs each branch costs one "
                   "fixed amount, independent of ledger size") as entry:
        model = default_calibration().model_for(OracleMode.NONE)
        chain = _grow_chain(1_000, seed=0x6A5, cost_model=model)
        txs = [tx for b in chain.blocks for tx in b.txs]
        by_branch: dict[RateOutcome, set[int]] = {}
        positions: dict[RateOutcome, list[int]] = {}
        for i, tx in enumerate(txs):
            outcome = chain.outcomes[tx.tx_id]
            by_branch.setdefault(outcome, set()).add(
                chain.receipts[tx.tx_id].gas_used)
            positions.setdefault(outcome, []).append(i)
        assert set(by_branch) == set(RateOutcome)   # workload hit every branch
        assert all(len(values) == 1 for values in by_branch.values())

        # first and last occurrence of every branch cost the same even
        # though the ledger grew in between, and at least one branch
        # spans nearly the whole run
        for outcome, idxs in positions.items():
            first, last = txs[idxs[0]], txs[idxs[-1]]
            assert chain.receipts[first.tx_id].gas_used == \
                chain.receipts[last.tx_id].gas_used
        assert max(idxs[-1] - idxs[0] for idxs in positions.values()) > 900

        per_branch = {o.value: values.pop() for o, values in by_branch.items()}
        assert per_branch == {"new_resource": 20000, "new_rater": 8150,
                              "flipped": 3700, "no_op": 1300}
        entry["detail"] = f"branch costs {per_branch}"


def test_acceptance_cost_table_reproduction(capsys):
    with criterion("cost table: shipped calibration prints deploy 10, "
                   "rating 0.2 / 2 / 2-8") as entry:
        assert cli.main(["cost-report", "--json"]) == 0
        rows = [json.loads(line)
                for line in capsys.readouterr().out.strip().splitlines()]
        by_mode = {row["mode"]: row for row in rows}
        assert by_mode["simple"]["deploy_cost"] == "10"
        assert by_mode["simple"]["rating_cost"] == "0.2"
        assert by_mode["provable"]["deploy_cost"] == "10"
        assert by_mode["provable"]["rating_cost"] == "2"
        assert by_mode["chainlink"]["rating_cost"] == "2-8"
        entry["detail"] = "deploy 10; ratings 0.2, 2, 2-8 (calibrated)"


def _e2e_client(tmp_path):
    node = RatingNode(NodeConfig(difficulty=8,
                                 chain_path=tmp_path / "chain.jsonl"))
    return node, TestClient(create_app(node, build_stub_auth_service()))


def test_acceptance_error_strings_are_byte_exact(tmp_path):
    with criterion("error strings: API returns the two published messages "
                   "byte-for-byte") as entry:
        _, client = _e2e_client(tmp_path)
        token = client.post("/auth", json={
            "provider": "github", "credential": "alice-github-secret",
        }).json()["session_token"]
        headers = {"Authorization": f"Bearer {token}"}

        bad = client.post("/rate", json={"url": "notaurl", "vote": True},
                          headers=headers)
        assert bad.status_code == 400
        assert bad.json()["message"].encode() == b"Invalid resource."

        client.post("/rate", json={"url": RESOURCES[0], "vote": True},
                    headers=headers)
        dup = client.post("/rate", json={"url": RESOURCES[0], "vote": True},
                          headers=headers)
        assert dup.status_code == 409
        assert dup.json()["message"].encode() == \
            b"Multiple ratings for the same resource are not allowed."
        entry["detail"] = "both messages byte-exact"


def test_acceptance_anonymity_of_persisted_chain(tmp_path):
    with criterion("anonymity: 50-rating end-to-end run leaves no account "
                   "ids, credentials, or tokens in the chain file") as entry:
        node, client = _e2e_client(tmp_path)
        fixtures = load_stub_accounts()
        sessions = []
        for provider, table in fixtures.items():
            for credential in table:
                response = client.post("/auth", json={
                    "provider": provider, "credential": credential})
                sessions.append(response.json())

        rng = random.Random(50)
        submitted = 0
        while submitted < 50:
            session = rng.choice(sessions)
            response = client.post(
                "/rate",
                json={"url": rng.choice(RESOURCES),
                      "vote": rng.random() < 0.5},
                headers={"Authorization":
                         f"Bearer {session['session_token']}"})
            if response.status_code == 202:
                submitted += 1
        assert sum(len(b.txs) for b in node.chain.blocks) == 50

        raw = (tmp_path / "chain.jsonl").read_text(encoding="utf-8")
        account_ids = {acct for table in fixtures.values()
                       for acct in table.values()}
        for account in account_ids:
            assert account not in raw
        for table in fixtures.values():
            for credential in table:
                assert credential not in raw
        for session in sessions:
            assert session["session_token"] not in raw

        creds_on_chain = {tx["cred"] for line in raw.splitlines()
                          for tx in json.loads(line)["txs"]}
        assert creds_on_chain
        assert all(re.fullmatch(r"[0-9a-f]{32}", c) for c in creds_on_chain)
        expected_ids = {s["user_id"] for s in sessions}
        assert creds_on_chain <= expected_ids
        entry["detail"] = (f"50 txs, {len(creds_on_chain)} hashed ids, "
                           "no leaks found")
