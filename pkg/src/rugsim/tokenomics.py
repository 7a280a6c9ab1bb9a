"""Home-chain token supply regulation and reward arithmetic.

The inverse-log supply law is reified as a *target*: a one-sided
proportional controller burns toward s0 / ln(vaulted value) at rate kappa,
never exceeding the per-block burn cap. Emissions are a flat per-block rate
plus bridged reward mints, so the per-block identity

    delta(current_supply) == minted_this_block - burned_this_block

holds exactly in every run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .core import (
    FixedAmount,
    ONE,
    ParameterError,
    TokenId,
    VaultId,
    ZERO,
    fsum,
    safe_ln,
)
from .ledger import Ledger
from .vault import VaultRegistry


@dataclass(frozen=True)
class SupplyParams:
    s0: FixedAmount            # scale of the supply target
    epsilon_rate: FixedAmount  # tokens emitted per block
    beta_burn: FixedAmount     # per-block burn cap
    kappa: FixedAmount         # controller convergence rate in (0, 1]

    def __post_init__(self):
        for name in ("s0", "epsilon_rate", "beta_burn", "kappa"):
            if getattr(self, name).raw < 0:
                raise ParameterError(f"{name} must be >= 0")
        if self.kappa > ONE:
            raise ParameterError(f"kappa must be <= 1, got {self.kappa}")


@dataclass
class SupplyState:
    current_supply: FixedAmount
    minted_total: FixedAmount = ZERO
    burned_total: FixedAmount = ZERO
    last_height: int = 0
    # accumulates every mint in the current block (emission + rewards)
    block_minted: FixedAmount = ZERO
    block_burned: FixedAmount = ZERO

    def record_mint(self, amount: FixedAmount) -> None:
        self.current_supply = self.current_supply + amount
        self.minted_total = self.minted_total + amount
        self.block_minted = self.block_minted + amount

    def record_burn(self, amount: FixedAmount) -> None:
        self.current_supply = self.current_supply - amount
        self.burned_total = self.burned_total + amount
        self.block_burned = self.block_burned + amount

    def begin_block(self, height: int) -> None:
        self.last_height = height
        self.block_minted = ZERO
        self.block_burned = ZERO


def target_supply(sum_cr_value: FixedAmount, s0: FixedAmount) -> FixedAmount:
    """s0 / max(1, ln(sum)): the inverse-log supply setpoint.

    Capped at s0 for sums at or below e (where the log would amplify
    rather than dampen), and for an empty ecosystem.
    """
    if sum_cr_value.raw < 0:
        raise ParameterError("sum_cr_value must be >= 0")
    if sum_cr_value.raw == 0:
        return s0
    log = safe_ln(sum_cr_value)
    return s0 / max(ONE, log)


def block_emission(epsilon_rate: FixedAmount, blocks: int) -> FixedAmount:
    if blocks < 0:
        raise ParameterError(f"blocks must be >= 0, got {blocks}")
    return epsilon_rate * blocks


def burn_step(state: SupplyState, params: SupplyParams,
              sum_vaulted_value: FixedAmount,
              available: FixedAmount | None = None) -> FixedAmount:
    """One-sided controller step: burn kappa * excess over target, capped
    at beta_burn (and at `available`, the burnable treasury holding, when
    given). Never un-burns when supply is below target."""
    target = target_supply(sum_vaulted_value, params.s0)
    excess = state.current_supply - target
    if excess.raw <= 0:
        return ZERO
    burned = min(params.kappa * excess, params.beta_burn)
    if available is not None:
        burned = min(burned, available)
    if burned.raw > 0:
        state.record_burn(burned)
    return burned


def deposit_reward(amount_cr: FixedAmount, omega: FixedAmount) -> FixedAmount:
    if amount_cr.raw < 0:
        raise ParameterError("amount must be >= 0")
    return omega * amount_cr


def burn_reward(amount_ca: FixedAmount, theta: FixedAmount) -> FixedAmount:
    if amount_ca.raw < 0:
        raise ParameterError("amount must be >= 0")
    return theta * amount_ca


@dataclass(frozen=True)
class VaultStats:
    vault_id: VaultId
    chain: str
    deposited: FixedAmount   # cumulative gross deposits
    vaulted: FixedAmount     # rugged tokens still held in escrow
    price: FixedAmount
    deposited_value: FixedAmount
    vaulted_value: FixedAmount


@dataclass(frozen=True)
class OracleReport:
    sum_cr_value: FixedAmount       # gross deposit volume at current prices
    sum_vaulted_value: FixedAmount  # tokens still vaulted, at current prices
    per_vault: tuple[VaultStats, ...]


def aggregate_vault_stats(registries: Sequence[VaultRegistry], ledger: Ledger,
                          price_of: Callable[[TokenId], FixedAmount]) -> OracleReport:
    """Read-only oracle pass over every vault on every chain.

    Deterministic: vaults are visited in (chain, vault_id) order.
    """
    rows = []
    for registry in sorted(registries, key=lambda r: r.chain):
        for vault_id in sorted(registry.vaults):
            vault = registry.vaults[vault_id]
            price = price_of(vault.rugged_token)
            vaulted = ledger.balance(vault.escrow_account, vault.rugged_token)
            rows.append(VaultStats(
                vault_id=vault_id, chain=registry.chain,
                deposited=vault.total_deposited, vaulted=vaulted, price=price,
                deposited_value=vault.total_deposited * price,
                vaulted_value=vaulted * price))
    return OracleReport(
        sum_cr_value=fsum(r.deposited_value for r in rows),
        sum_vaulted_value=fsum(r.vaulted_value for r in rows),
        per_vault=tuple(rows))


def market_potential(marks_and_supplies: Iterable[tuple[FixedAmount, FixedAmount]]) -> FixedAmount:
    """Sum of external mark price times anticoin supply across vaults."""
    total = ZERO
    for mark, supply in marks_and_supplies:
        if mark.raw < 0:
            raise ParameterError("mark prices must be >= 0")
        total = total + mark * supply
    return total
