"""Command-line entry points.

`node run` and `cost-report` work locally; every other subcommand is a
thin HTTP client against a running gateway.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import requests

from .gas import OracleMode, cost_report, default_calibration, load_calibration
from .gateway import DEFAULT_HOST, DEFAULT_PORT, run_gateway
from .identity import build_live_auth_service, build_stub_auth_service
from .node import NodeConfig, RatingNode
from .validation import HttpProbe, load_registry

DEFAULT_API = f"http://{DEFAULT_HOST}:{DEFAULT_PORT}"


class CliError(Exception):
    pass


def _api_base(args) -> str:
    return args.api or os.environ.get("RATECHAIN_API", DEFAULT_API)


def _token(args) -> str | None:
    return args.token or os.environ.get("RATECHAIN_TOKEN")


def _request(args, method: str, path: str, body: dict | None = None,
             params: dict | None = None, token: str | None = None) -> dict | list:
    headers = {}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    try:
        response = requests.request(method, _api_base(args) + path,
                                    json=body, params=params,
                                    headers=headers, timeout=30)
    except requests.RequestException as exc:
        raise CliError(f"cannot reach gateway: {exc}") from exc
    if response.status_code >= 400:
        try:
            payload = response.json()
            raise CliError(payload.get("message", response.text))
        except ValueError:
            raise CliError(f"HTTP {response.status_code}: {response.text}")
    return response.json()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_node_run(args) -> int:
    registry = load_registry(args.registry)
    config = NodeConfig(
        difficulty=args.difficulty,
        max_txs_per_block=args.max_txs,
        auto_mine=not args.no_auto_mine,
        chain_path=Path(args.chain_file) if args.chain_file else None,
        oracle_mode=OracleMode(args.mode),
    )
    calibration = (load_calibration(args.calibration) if args.calibration
                   else default_calibration())
    node = RatingNode(
        config,
        registry=registry,
        probe=HttpProbe() if registry.probe_enabled else None,
        cost_model=calibration.model_for(config.oracle_mode),
    )
    auth = (build_live_auth_service() if args.live_auth
            else build_stub_auth_service(args.stub_accounts))
    print(f"node listening on {args.host or DEFAULT_HOST}:"
          f"{args.port or DEFAULT_PORT}  "
          f"(difficulty {config.difficulty}, "
          f"auto-mine {'on' if config.auto_mine else 'off'})")
    run_gateway(node, auth, host=args.host, port=args.port)
    return 0


def cmd_auth(args) -> int:
    session = _request(args, "POST", "/auth",
                       body={"provider": args.provider,
                             "credential": args.credential})
    print(f"user_id: {session['user_id']}")
    print(f"session_token: {session['session_token']}")
    print(f"export RATECHAIN_TOKEN={session['session_token']}")
    return 0


def cmd_rate(args) -> int:
    vote = bool(args.like)
    params = {"estimate": "true"} if args.estimate else None
    result = _request(args, "POST", "/rate",
                      body={"url": args.url, "vote": vote},
                      params=params, token=_token(args))
    receipt = result["gas_receipt"]
    if args.estimate:
        print(f"estimated branch: {result['outcome']}")
    else:
        print(f"tx {result['tx_id']} {result['status']} "
              f"({result['outcome']})")
    print(f"gas: {receipt['gas_used']}  cost: {receipt['currency_cost']}")
    return 0


def cmd_resources(args) -> int:
    rows = _request(args, "GET", "/resources")
    if not rows:
        print("no rated resources yet")
        return 0
    width = max(len(r["resource"]) for r in rows)
    print(f"{'resource'.ljust(width)}  likes  dislikes")
    for row in rows:
        print(f"{row['resource'].ljust(width)}  "
              f"{str(row['likes']).rjust(5)}  {str(row['dislikes']).rjust(8)}")
    return 0


def cmd_history(args) -> int:
    rows = _request(args, "GET", f"/history/{args.user_id}")
    for row in rows:
        print(f"{'like   ' if row['vote'] else 'dislike'} {row['resource']}")
    if not rows:
        print("no ratings for this user")
    return 0


def cmd_chain_inspect(args) -> int:
    params = {"offset": args.offset}
    if args.limit is not None:
        params["limit"] = args.limit
    summary = _request(args, "GET", "/chain", params=params)
    print(f"height {summary['height']}  head {summary['head'][:16]}  "
          f"state {summary['state_digest'][:16]}")
    for block in summary["blocks"]:
        print(f"  #{block['height']}  {block['hash'][:16]}  "
              f"txs={block['tx_count']}  mined_at={block['mined_at']}")
    return 0


def cmd_cost_report(args) -> int:
    calibration = (load_calibration(args.calibration) if args.calibration
                   else default_calibration())
    if args.mode:
        models = [calibration.model_for(OracleMode(args.mode))]
    else:
        models = calibration.all_models()
    report = cost_report(models)
    print(report.render_jsonl() if args.json else report.render_table())
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratechain",
        description="decentralized like/dislike ratings on a miniature chain")
    parser.add_argument("--api", help="gateway base URL "
                        f"(default {DEFAULT_API} or $RATECHAIN_API)")
    parser.add_argument("--token", help="session token "
                        "(default $RATECHAIN_TOKEN)")
    sub = parser.add_subparsers(dest="command", required=True)

    node = sub.add_parser("node", help="node management")
    node_sub = node.add_subparsers(dest="node_command", required=True)
    run = node_sub.add_parser("run", help="serve the HTTP gateway")
    run.add_argument("--host")
    run.add_argument("--port", type=int)
    run.add_argument("--difficulty", type=int, default=NodeConfig().difficulty)
    run.add_argument("--max-txs", type=int, default=100)
    run.add_argument("--no-auto-mine", action="store_true",
                     help="only mine via POST /admin/mine")
    run.add_argument("--chain-file", help="append-only block file")
    run.add_argument("--registry", help="provider host-pattern file")
    run.add_argument("--stub-accounts", help="stub credential fixtures")
    run.add_argument("--live-auth", action="store_true",
                     help="use RATECHAIN_<PROVIDER>_* env credentials")
    run.add_argument("--calibration", help="gas calibration file")
    run.add_argument("--mode", choices=[m.value for m in OracleMode],
                     default=OracleMode.NONE.value)
    run.set_defaults(func=cmd_node_run)

    auth = sub.add_parser("auth", help="sign in and print a session token")
    auth.add_argument("provider")
    auth.add_argument("credential")
    auth.set_defaults(func=cmd_auth)

    rate = sub.add_parser("rate", help="rate a resource")
    rate.add_argument("url")
    group = rate.add_mutually_exclusive_group(required=True)
    group.add_argument("--like", action="store_true")
    group.add_argument("--dislike", action="store_true")
    rate.add_argument("--estimate", action="store_true",
                      help="price the rating without submitting")
    rate.set_defaults(func=cmd_rate)

    resources = sub.add_parser("resources", help="list rated resources")
    resources.set_defaults(func=cmd_resources)

    history = sub.add_parser("history", help="list a user's current votes")
    history.add_argument("user_id")
    history.set_defaults(func=cmd_history)

    chain = sub.add_parser("chain", help="chain inspection")
    chain_sub = chain.add_subparsers(dest="chain_command", required=True)
    inspect = chain_sub.add_parser("inspect", help="print block summaries")
    inspect.add_argument("--limit", type=int)
    inspect.add_argument("--offset", type=int, default=0)
    inspect.set_defaults(func=cmd_chain_inspect)

    report = sub.add_parser("cost-report",
                            help="print the calibrated cost table")
    report.add_argument("--mode", choices=[m.value for m in OracleMode])
    report.add_argument("--calibration", help="gas calibration file")
    report.add_argument("--json", action="store_true")
    report.set_defaults(func=cmd_cost_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
