"""Gas accounting for rating operations and the cost-comparison report.

Costs follow the usual storage-machine shape: a flat per-transaction base,
a per-slot read charge, and write charges split between fresh slots and
updates (fresh ≫ update ≫ read). Three pricing modes are supported: a
plain contract, and two simulated oracle-backed variants that add a
per-rating off-chain fee (a fixed fee, or a [min, max] fee interval).

The shipped default calibration is chosen so the report reproduces the
published deployment/rating price points; it is a calibration, not a
measurement, and lives in ``data/calibration_default.conf`` where it can
be edited.

Currency amounts are ``Decimal`` throughout so report figures are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from importlib import resources
from pathlib import Path

from .ledger import RateOutcome, StorageTouches, storage_touches_for

__all__ = [
    "Calibration",
    "CostModel",
    "CostReport",
    "CostRow",
    "GasReceipt",
    "OpKind",
    "OracleMode",
    "cost_report",
    "default_calibration",
    "format_currency",
    "load_calibration",
    "meter_deploy",
    "meter_rate",
    "parse_calibration",
]


class OracleMode(Enum):
    NONE = "simple"
    PROVABLE_SIM = "provable"
    CHAINLINK_SIM = "chainlink"


class OpKind(Enum):
    DEPLOY = "deploy"
    RATE = "rate"


@dataclass(frozen=True)
class CostModel:
    """Primitive costs plus pricing for one contract variant."""

    sload_cost: int
    sstore_new_cost: int
    sstore_update_cost: int
    base_tx_cost: int
    deploy_cost: int
    gas_price: Decimal
    oracle_mode: OracleMode = OracleMode.NONE
    oracle_fee_min: Decimal = Decimal(0)
    oracle_fee_max: Decimal = Decimal(0)

    def __post_init__(self) -> None:
        for name in ("sload_cost", "sstore_new_cost", "sstore_update_cost",
                     "base_tx_cost", "deploy_cost"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.gas_price <= 0:
            raise ValueError("gas_price must be strictly positive")
        if self.oracle_fee_min < 0 or self.oracle_fee_max < self.oracle_fee_min:
            raise ValueError("oracle fees must satisfy 0 <= min <= max")
        has_fee = self.oracle_fee_min > 0 or self.oracle_fee_max > 0
        if has_fee != (self.oracle_mode is not OracleMode.NONE):
            raise ValueError("oracle fee must be zero iff oracle mode is None")


@dataclass(frozen=True)
class GasReceipt:
    """Gas and currency accounting for one metered operation.

    For rating receipts ``gas_used`` is the base cost plus the priced
    storage touches, and ``currency_cost`` adds the oracle fee (the minimum
    fee when the model carries an interval). Deployment receipts charge the
    flat deployment gas and never an oracle fee.
    """

    op_kind: OpKind
    branch: RateOutcome | None
    storage_reads: int
    storage_writes_new: int
    storage_writes_update: int
    gas_used: int
    currency_cost: Decimal

    def to_dict(self) -> dict:
        return {
            "op_kind": self.op_kind.value,
            "branch": self.branch.value if self.branch else None,
            "storage_reads": self.storage_reads,
            "storage_writes_new": self.storage_writes_new,
            "storage_writes_update": self.storage_writes_update,
            "gas_used": self.gas_used,
            "currency_cost": format_currency(self.currency_cost),
        }


def meter_rate(
    model: CostModel, outcome: RateOutcome, touches: StorageTouches
) -> GasReceipt:
    """Price one rating call from its branch and storage-touch summary."""
    gas_used = (
        model.base_tx_cost
        + touches.reads * model.sload_cost
        + touches.writes_new * model.sstore_new_cost
        + touches.writes_update * model.sstore_update_cost
    )
    currency = Decimal(gas_used) * model.gas_price + model.oracle_fee_min
    return GasReceipt(
        op_kind=OpKind.RATE,
        branch=outcome,
        storage_reads=touches.reads,
        storage_writes_new=touches.writes_new,
        storage_writes_update=touches.writes_update,
        gas_used=gas_used,
        currency_cost=currency,
    )


def meter_deploy(model: CostModel) -> GasReceipt:
    """Price contract deployment; identical across oracle modes."""
    return GasReceipt(
        op_kind=OpKind.DEPLOY,
        branch=None,
        storage_reads=0,
        storage_writes_new=0,
        storage_writes_update=0,
        gas_used=model.deploy_cost,
        currency_cost=Decimal(model.deploy_cost) * model.gas_price,
    )


# ---------------------------------------------------------------------------
# calibration file
# ---------------------------------------------------------------------------

_INT_KEYS = ("sload_cost", "sstore_new_cost", "sstore_update_cost",
             "base_tx_cost", "deploy_cost")
_DECIMAL_KEYS = ("gas_price", "provable_fee", "chainlink_fee_min",
                 "chainlink_fee_max")


@dataclass(frozen=True)
class Calibration:
    """Contents of a calibration file; builds the per-mode cost models."""

    sload_cost: int
    sstore_new_cost: int
    sstore_update_cost: int
    base_tx_cost: int
    deploy_cost: int
    gas_price: Decimal
    provable_fee: Decimal
    chainlink_fee_min: Decimal
    chainlink_fee_max: Decimal

    def model_for(self, mode: OracleMode) -> CostModel:
        if mode is OracleMode.PROVABLE_SIM:
            fee_min = fee_max = self.provable_fee
        elif mode is OracleMode.CHAINLINK_SIM:
            fee_min, fee_max = self.chainlink_fee_min, self.chainlink_fee_max
        else:
            fee_min = fee_max = Decimal(0)
        return CostModel(
            sload_cost=self.sload_cost,
            sstore_new_cost=self.sstore_new_cost,
            sstore_update_cost=self.sstore_update_cost,
            base_tx_cost=self.base_tx_cost,
            deploy_cost=self.deploy_cost,
            gas_price=self.gas_price,
            oracle_mode=mode,
            oracle_fee_min=fee_min,
            oracle_fee_max=fee_max,
        )

    def all_models(self) -> list[CostModel]:
        return [self.model_for(mode) for mode in OracleMode]


def parse_calibration(text: str) -> Calibration:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"calibration line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()

    known = set(_INT_KEYS) | set(_DECIMAL_KEYS)
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown calibration keys: {sorted(unknown)}")
    missing = known - set(values)
    if missing:
        raise ValueError(f"missing calibration keys: {sorted(missing)}")

    kwargs: dict = {key: int(values[key]) for key in _INT_KEYS}
    kwargs.update({key: Decimal(values[key]) for key in _DECIMAL_KEYS})
    return Calibration(**kwargs)


def load_calibration(path: str | Path) -> Calibration:
    return parse_calibration(Path(path).read_text(encoding="utf-8"))


def default_calibration() -> Calibration:
    text = (
        resources.files("ratechain")
        .joinpath("data/calibration_default.conf")
        .read_text(encoding="utf-8")
    )
    return parse_calibration(text)


# ---------------------------------------------------------------------------
# cost report
# ---------------------------------------------------------------------------

# The per-rating figure reported for each mode: the first rating of a fresh
# resource, i.e. the most expensive branch and the one a deploy-then-rate
# measurement exercises.
REPORT_BRANCH = RateOutcome.NEW_RESOURCE


def format_currency(value: Decimal) -> str:
    """Render a currency amount without trailing zeros ("0.2", "2", "10")."""
    return format(value.normalize(), "f")


@dataclass(frozen=True)
class CostRow:
    mode: OracleMode
    deploy_gas: int
    deploy_cost: Decimal
    rating_gas: int
    rating_cost_min: Decimal
    rating_cost_max: Decimal

    @property
    def rating_display(self) -> str:
        if self.rating_cost_min == self.rating_cost_max:
            return format_currency(self.rating_cost_min)
        return f"{format_currency(self.rating_cost_min)}-{format_currency(self.rating_cost_max)}"

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "deploy_gas": self.deploy_gas,
            "deploy_cost": format_currency(self.deploy_cost),
            "rating_gas": self.rating_gas,
            "rating_cost_min": format_currency(self.rating_cost_min),
            "rating_cost_max": format_currency(self.rating_cost_max),
            "rating_cost": self.rating_display,
        }


@dataclass(frozen=True)
class CostReport:
    rows: tuple[CostRow, ...]

    def render_table(self) -> str:
        header = ("contract variant", "deployment", "rating operation")
        body = [
            (row.mode.value, format_currency(row.deploy_cost), row.rating_display)
            for row in self.rows
        ]
        widths = [
            max(len(header[i]), *(len(line[i]) for line in body)) for i in range(3)
        ]
        lines = ["Cost comparison (currency units, model-calibrated)"]
        lines.append("  ".join(header[i].ljust(widths[i]) for i in range(3)))
        lines.append("  ".join("-" * widths[i] for i in range(3)))
        for line in body:
            lines.append("  ".join(line[i].ljust(widths[i]) for i in range(3)))
        return "\n".join(lines)

    def render_jsonl(self) -> str:
        return "\n".join(
            json.dumps(row.to_dict(), separators=(",", ":")) for row in self.rows
        )


def cost_report(models: list[CostModel]) -> CostReport:
    """Deployment and per-rating price for each contract variant."""
    if not models:
        raise ValueError("cost_report needs at least one cost model")
    rows = []
    for model in models:
        deploy = meter_deploy(model)
        rating = meter_rate(model, REPORT_BRANCH, storage_touches_for(REPORT_BRANCH))
        gas_currency = Decimal(rating.gas_used) * model.gas_price
        rows.append(
            CostRow(
                mode=model.oracle_mode,
                deploy_gas=deploy.gas_used,
                deploy_cost=deploy.currency_cost,
                rating_gas=rating.gas_used,
                rating_cost_min=gas_currency + model.oracle_fee_min,
                rating_cost_max=gas_currency + model.oracle_fee_max,
            )
        )
    return CostReport(rows=tuple(rows))
