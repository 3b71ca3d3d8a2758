"""CLI tests; network calls are routed to an in-process test app."""

from __future__ import annotations

import json

import pytest
import requests as real_requests
from fastapi.testclient import TestClient

from ratechain import cli
from ratechain.gateway import create_app
from ratechain.identity import build_stub_auth_service, hash_identity
from ratechain.node import NodeConfig, RatingNode

RES = "https://example.com/items/1"


class RequestsShim:
    """Quacks like the requests module but talks to a TestClient."""

    RequestException = real_requests.RequestException

    def __init__(self, client: TestClient) -> None:
        self.client = client

    def request(self, method, url, json=None, params=None, headers=None,
                timeout=None):
        path = url.split("://", 1)[1].split("/", 1)[1]
        return self.client.request(method, "/" + path, json=json,
                                   params=params, headers=headers or {})


@pytest.fixture()
def wired(monkeypatch, tmp_path):
    node = RatingNode(NodeConfig(difficulty=8,
                                 chain_path=tmp_path / "chain.jsonl"))
    client = TestClient(create_app(node, build_stub_auth_service()))
    monkeypatch.setattr(cli, "requests", RequestsShim(client))
    monkeypatch.delenv("RATECHAIN_TOKEN", raising=False)
    return node


def run_cli(*argv: str) -> int:
    return cli.main(list(argv))


def get_token(capsys) -> str:
    assert run_cli("auth", "github", "alice-github-secret") == 0
    out = capsys.readouterr().out
    return next(line.split(": ", 1)[1] for line in out.splitlines()
                if line.startswith("session_token: "))


def test_auth_prints_identity_and_token(wired, capsys):
    assert run_cli("auth", "github", "alice-github-secret") == 0
    out = capsys.readouterr().out
    assert f"user_id: {hash_identity('github', 'alice')}" in out
    assert "session_token: " in out
    assert "export RATECHAIN_TOKEN=" in out


def test_auth_failure_exits_nonzero(wired, capsys):
    assert run_cli("auth", "github", "wrong") == 1
    assert "error:" in capsys.readouterr().err


def test_rate_without_session_fails(wired, capsys):
    assert run_cli("rate", RES, "--like") == 1
    assert "Authentication required." in capsys.readouterr().err


def test_rate_like_then_resources_table(wired, capsys):
    token = get_token(capsys)
    assert run_cli("--token", token, "rate", RES, "--like") == 0
    out = capsys.readouterr().out
    assert "mined" in out and "new_resource" in out
    assert "cost: 0.2" in out

    assert run_cli("resources") == 0
    table = capsys.readouterr().out
    assert RES in table and "likes" in table


def test_rate_estimate_flag(wired, capsys):
    token = get_token(capsys)
    assert run_cli("--token", token, "rate", RES, "--dislike",
                   "--estimate") == 0
    out = capsys.readouterr().out
    assert "estimated branch: new_resource" in out
    assert wired.chain.height == 0


def test_rate_invalid_resource_message_passthrough(wired, capsys):
    token = get_token(capsys)
    assert run_cli("--token", token, "rate", "notaurl", "--like") == 1
    assert "Invalid resource." in capsys.readouterr().err


def test_history_command(wired, capsys):
    token = get_token(capsys)
    run_cli("--token", token, "rate", RES, "--dislike")
    capsys.readouterr()
    assert run_cli("history", hash_identity("github", "alice")) == 0
    out = capsys.readouterr().out
    assert out.startswith("dislike ")
    assert RES in out


def test_chain_inspect_fresh_node_shows_genesis_only(wired, capsys):
    assert run_cli("chain", "inspect") == 0
    out = capsys.readouterr().out
    assert "height 0" in out
    assert out.count("#") == 1 and "#0" in out


def test_chain_inspect_after_ratings(wired, capsys):
    token = get_token(capsys)
    run_cli("--token", token, "rate", RES, "--like")
    capsys.readouterr()
    assert run_cli("chain", "inspect", "--offset", "1") == 0
    out = capsys.readouterr().out
    assert "height 1" in out and "#1" in out and "txs=1" in out


def test_cost_report_matches_published_price_points(capsys):
    assert run_cli("cost-report") == 0
    out = capsys.readouterr().out
    for fragment in ("simple", "provable", "chainlink", "10", "0.2", "2-8"):
        assert fragment in out


def test_cost_report_single_mode_json(capsys):
    assert run_cli("cost-report", "--mode", "provable", "--json") == 0
    row = json.loads(capsys.readouterr().out.strip())
    assert row["mode"] == "provable"
    assert row["deploy_cost"] == "10"
    assert row["rating_cost"] == "2"


def test_cost_report_custom_calibration(tmp_path, capsys):
    path = tmp_path / "cal.conf"
    path.write_text(
        "sload_cost = 100\n"
        "sstore_new_cost = 100\n"
        "sstore_update_cost = 100\n"
        "base_tx_cost = 100\n"
        "deploy_cost = 500\n"
        "gas_price = 0.01\n"
        "provable_fee = 1\n"
        "chainlink_fee_min = 1\n"
        "chainlink_fee_max = 2\n",
        encoding="utf-8")
    assert run_cli("cost-report", "--calibration", str(path),
                   "--mode", "simple", "--json") == 0
    row = json.loads(capsys.readouterr().out.strip())
    assert row["deploy_cost"] == "5"


def test_unknown_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2
