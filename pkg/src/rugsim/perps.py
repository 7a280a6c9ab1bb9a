"""Perpetual futures on rugged tokens, collateralized by anticoins.

Collateral is valued once, at entry (the anticoin is itself inversely
pegged to the underlying, so live revaluation would double the exposure;
a config toggle enables it anyway). Funding is asymmetric: the majority
side pays the minority, scaled up when pool liquidity is thin. Liquidation
is hybrid: unhealthy positions are flagged, liquidators get a bounty
window, and the protocol auto-liquidates after the deadline, swapping the
seized anticoins through the protocol-owned AMM.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .core import (
    AccountId,
    BlockTime,
    FixedAmount,
    IlliquidError,
    ParameterError,
    TokenId,
    VaultId,
    ZERO,
    amt,
    quantize,
)
from .ledger import BalanceError, Ledger


class Direction(enum.Enum):
    LONG = "long"
    SHORT = "short"


class PositionStatus(enum.Enum):
    OPEN = "open"
    FLAGGED = "flagged"
    LIQUIDATED = "liquidated"
    CLOSED = "closed"


DEFAULT_MAX_LEVERAGE = amt(10)


@dataclass(frozen=True)
class FundingParams:
    alpha_base: FixedAmount
    l_min: FixedAmount
    interval_blocks: int

    def __post_init__(self):
        if self.alpha_base.raw <= 0 or self.l_min.raw <= 0 or self.interval_blocks <= 0:
            raise ParameterError("funding parameters must be > 0")


@dataclass(frozen=True)
class MaintenanceRule:
    maintenance_fraction: FixedAmount = amt("0.1")
    liquidator_deadline_blocks: int = 5
    liquidator_fee_fraction: FixedAmount = amt("0.05")

    def __post_init__(self):
        if not (0 < self.maintenance_fraction.raw < 10**9):
            raise ParameterError("maintenance_fraction must be in (0, 1)")
        if self.liquidator_fee_fraction >= self.maintenance_fraction:
            raise ParameterError("liquidator fee must be below the maintenance fraction")


@dataclass
class Position:
    position_id: int
    owner: AccountId
    vault: VaultId
    collateral_ca: FixedAmount
    leverage: FixedAmount
    direction: Direction
    entry_price: FixedAmount
    unit_value_at_entry: FixedAmount  # anticoin value per unit, frozen
    opened_at: BlockTime
    status: PositionStatus = PositionStatus.OPEN
    flagged_at: Optional[int] = None

    @property
    def collateral_value(self) -> FixedAmount:
        return self.collateral_ca * self.unit_value_at_entry

    @property
    def notional_ca(self) -> FixedAmount:
        return self.leverage * self.collateral_ca


def position_pnl(position: Position, mark_price: FixedAmount,
                 unit_value: Optional[FixedAmount] = None) -> FixedAmount:
    """Signed linear PnL: dir * leverage * collateral_value * return.

    Collateral is valued at entry by default; pass unit_value to revalue
    it live (the collateral is itself inversely pegged to the underlying,
    so live revaluation doubles the exposure -- off unless asked for).
    """
    if mark_price.raw <= 0:
        raise ParameterError("mark price must be > 0")
    per_unit = unit_value if unit_value is not None else position.unit_value_at_entry
    sign = 1 if position.direction is Direction.LONG else -1
    move = Fraction(mark_price.raw - position.entry_price.raw, position.entry_price.raw)
    collateral_value = position.collateral_ca * per_unit
    pnl = (sign * position.leverage.as_fraction()
           * collateral_value.as_fraction() * move)
    return quantize(pnl)


def position_health(position: Position, mark_price: FixedAmount,
                    unit_value: Optional[FixedAmount] = None) -> FixedAmount:
    """(collateral value + pnl) / collateral value; 0 for worthless collateral."""
    per_unit = unit_value if unit_value is not None else position.unit_value_at_entry
    cv = position.collateral_ca * per_unit
    if cv.raw <= 0:
        return ZERO
    equity = cv + position_pnl(position, mark_price, unit_value)
    if equity.raw <= 0:
        return ZERO
    return equity / cv


def funding_rate(n_long: int, n_short: int, alpha: FixedAmount) -> FixedAmount:
    """alpha * n_long / (n_long + n_short), always in [0, alpha]."""
    total = n_long + n_short
    if total <= 0:
        raise ParameterError("funding rate undefined on an empty market")
    if n_long < 0 or n_short < 0:
        raise ParameterError("position counts must be >= 0")
    rate = quantize(alpha.as_fraction() * Fraction(n_long, total))
    return min(rate, alpha)


def funding_rate_final(rate: FixedAmount, l_min: FixedAmount,
                       l_pool: FixedAmount) -> FixedAmount:
    """Liquidity scaling: rate * (1 + l_min / l_pool)."""
    if l_pool.raw <= 0:
        raise IlliquidError("funding scaling needs a funded pool")
    scaled = rate.as_fraction() * (1 + Fraction(l_min.raw, l_pool.raw))
    return quantize(scaled)


@dataclass(frozen=True)
class FundingTransfer:
    position_id: int
    amount_ca: FixedAmount  # positive: received; negative: paid


@dataclass(frozen=True)
class FundingRound:
    rate: FixedAmount
    paying_side: Direction
    transfers: tuple[FundingTransfer, ...]
    treasury_remainder: FixedAmount


@dataclass(frozen=True)
class LiquidationEvent:
    position_id: int
    kind: str                    # "flagged" | "liquidated" | "auto_liquidated" | "invalid_bid"
    liquidator: Optional[str] = None
    fee_ca: FixedAmount = ZERO
    swap_ca: FixedAmount = ZERO  # anticoins handed to the protocol AMM


class PerpBook:
    """Single-writer position book for one vault's perpetual market."""

    def __init__(self, vault_id: VaultId, anticoin: TokenId,
                 funding: FundingParams, rule: MaintenanceRule,
                 max_leverage: FixedAmount = DEFAULT_MAX_LEVERAGE,
                 revalue_collateral: bool = False):
        self.vault_id = vault_id
        self.anticoin = anticoin
        self.funding = funding
        self.rule = rule
        self.max_leverage = max_leverage
        self.revalue_collateral = revalue_collateral
        self.positions: dict[int, Position] = {}
        self._next_id = 1

    @property
    def escrow_account(self) -> str:
        return f"perps:{self.vault_id}"

    def open_position(self, ledger: Ledger, user: AccountId,
                      collateral_ca: FixedAmount, leverage: FixedAmount,
                      direction: Direction, mark_price: FixedAmount,
                      unit_value: FixedAmount, at: BlockTime) -> Position:
        if collateral_ca.raw <= 0:
            raise ParameterError("collateral must be > 0")
        if not (amt(1) <= leverage <= self.max_leverage):
            raise ParameterError(
                f"leverage {leverage} outside [1, {self.max_leverage}]")
        if mark_price.raw <= 0:
            raise ParameterError("mark price must be > 0")
        balance = ledger.balance(user.value, self.anticoin)
        if balance < collateral_ca:
            raise BalanceError(f"{user.value} holds {balance}, needs {collateral_ca}")
        ledger.transfer(user.value, self.escrow_account, self.anticoin,
                        collateral_ca, memo=f"perp-open:{self.vault_id}")
        position = Position(
            position_id=self._next_id, owner=user, vault=self.vault_id,
            collateral_ca=collateral_ca, leverage=leverage, direction=direction,
            entry_price=mark_price, unit_value_at_entry=unit_value, opened_at=at)
        self.positions[position.position_id] = position
        self._next_id += 1
        return position

    def open_positions(self) -> list[Position]:
        return [p for p in self.positions.values() if p.status is PositionStatus.OPEN]

    def side_counts(self) -> tuple[int, int]:
        longs = sum(1 for p in self.open_positions() if p.direction is Direction.LONG)
        shorts = sum(1 for p in self.open_positions() if p.direction is Direction.SHORT)
        return longs, shorts

    def apply_funding(self, ledger: Ledger, l_pool: FixedAmount, at: BlockTime,
                      treasury: str) -> Optional[FundingRound]:
        """Charge the majority side, distribute to the minority pro-rata by
        notional. Collateral moves inside the escrow account, so the round
        is zero-sum by construction; the rounding remainder goes to the
        treasury. A single-sided or tied book accrues nothing."""
        if at.height % self.funding.interval_blocks != 0:
            raise ParameterError(
                f"height {at.height} is not a funding boundary "
                f"(interval {self.funding.interval_blocks})")
        n_long, n_short = self.side_counts()
        if n_long == 0 or n_short == 0 or n_long == n_short:
            return None
        rate = funding_rate_final(
            funding_rate(n_long, n_short, self.funding.alpha_base),
            self.funding.l_min, l_pool)
        paying = Direction.LONG if n_long > n_short else Direction.SHORT
        payers = [p for p in self.open_positions() if p.direction is paying]
        receivers = [p for p in self.open_positions() if p.direction is not paying]
        payers.sort(key=lambda p: p.position_id)
        receivers.sort(key=lambda p: p.position_id)

        transfers: list[FundingTransfer] = []
        pot = ZERO
        for p in payers:
            owed = min(rate * p.notional_ca, p.collateral_ca)
            if owed.raw <= 0:
                continue
            p.collateral_ca = p.collateral_ca - owed
            pot = pot + owed
            transfers.append(FundingTransfer(p.position_id, -owed))

        total_weight = sum(r.notional_ca.raw for r in receivers)
        distributed = ZERO
        if pot.raw > 0 and total_weight > 0:
            for r in receivers:
                share = FixedAmount(pot.raw * r.notional_ca.raw // total_weight)
                if share.raw <= 0:
                    continue
                r.collateral_ca = r.collateral_ca + share
                distributed = distributed + share
                transfers.append(FundingTransfer(r.position_id, share))
        remainder = pot - distributed
        if remainder.raw > 0:
            ledger.transfer(self.escrow_account, treasury, self.anticoin,
                            remainder, memo=f"funding-dust:{self.vault_id}")
        return FundingRound(rate=rate, paying_side=paying,
                            transfers=tuple(transfers), treasury_remainder=remainder)

    def flag_and_liquidate(self, ledger: Ledger, mark_price: FixedAmount,
                           bids: dict[int, str], at: BlockTime, treasury: str,
                           settlement_account: str,
                           unit_value: Optional[FixedAmount] = None) -> list[LiquidationEvent]:
        """Flag unhealthy positions and execute due liquidations.

        bids maps position id -> liquidator account. A wiped-out position
        (health 0) is seized the same block; a merely unhealthy one gives
        liquidators a bounty window before the protocol steps in. Seized
        anticoins, minus the liquidator fee, are moved to the settlement
        account for the protocol AMM swap (swap_ca on the event).
        """
        events: list[LiquidationEvent] = []
        rule = self.rule
        live = unit_value if self.revalue_collateral else None
        for pid in sorted(self.positions):
            p = self.positions[pid]
            if p.status is PositionStatus.OPEN:
                health = position_health(p, mark_price, live)
                if health <= rule.maintenance_fraction:
                    p.status = PositionStatus.FLAGGED
                    p.flagged_at = at.height
                    events.append(LiquidationEvent(pid, "flagged"))
            if p.status is not PositionStatus.FLAGGED:
                if pid in bids:
                    events.append(LiquidationEvent(pid, "invalid_bid",
                                                   liquidator=bids[pid]))
                continue

            bidder = bids.get(pid)
            wiped = position_health(p, mark_price, live).raw == 0
            deadline_passed = at.height >= (p.flagged_at or 0) + rule.liquidator_deadline_blocks
            if bidder is not None:
                fee = rule.liquidator_fee_fraction * p.collateral_ca
                rest = p.collateral_ca - fee
                if fee.raw > 0:
                    ledger.transfer(self.escrow_account, bidder, self.anticoin,
                                    fee, memo=f"liq-fee:{self.vault_id}:{pid}")
                if rest.raw > 0:
                    ledger.transfer(self.escrow_account, settlement_account,
                                    self.anticoin, rest,
                                    memo=f"liq-settle:{self.vault_id}:{pid}")
                p.collateral_ca = ZERO
                p.status = PositionStatus.LIQUIDATED
                events.append(LiquidationEvent(pid, "liquidated", liquidator=bidder,
                                               fee_ca=fee, swap_ca=rest))
            elif wiped or deadline_passed:
                rest = p.collateral_ca
                if rest.raw > 0:
                    ledger.transfer(self.escrow_account, settlement_account,
                                    self.anticoin, rest,
                                    memo=f"liq-auto:{self.vault_id}:{pid}")
                p.collateral_ca = ZERO
                p.status = PositionStatus.LIQUIDATED
                events.append(LiquidationEvent(pid, "auto_liquidated", swap_ca=rest))
        return events

    def snapshot(self) -> dict:
        return {
            str(pid): {
                "owner": p.owner.value,
                "collateral_ca": str(p.collateral_ca),
                "leverage": str(p.leverage),
                "direction": p.direction.value,
                "entry_price": str(p.entry_price),
                "status": p.status.value,
            }
            for pid, p in sorted(self.positions.items())
        }
