"""Global token ledger: balances, escrow accounts, mint/burn bookkeeping.

Pools, vaults, bonds, and perp margin all live in ordinary ledger accounts
(with conventional ``pool:``/``vault:``/``escrow:`` id prefixes), so the
system-wide conservation check is a single identity: per token, the sum of
all balances equals cumulative mints minus cumulative burns, exactly.
"""

from __future__ import annotations

from typing import Callable, Optional

from .core import FixedAmount, ParameterError, RugsimError, TokenId, ZERO


class BalanceError(RugsimError):
    """An account lacks the funds for a debit."""


EventRecorder = Callable[[dict], None]


class Ledger:
    def __init__(self, recorder: Optional[EventRecorder] = None):
        self._balances: dict[tuple[str, TokenId], FixedAmount] = {}
        self._supply: dict[TokenId, FixedAmount] = {}
        self.recorder = recorder

    def _record(self, event: dict) -> None:
        if self.recorder is not None:
            self.recorder(event)

    def balance(self, account: str, token: TokenId) -> FixedAmount:
        return self._balances.get((account, token), ZERO)

    def total_supply(self, token: TokenId) -> FixedAmount:
        return self._supply.get(token, ZERO)

    def accounts_holding(self, token: TokenId) -> list[str]:
        return sorted(a for (a, t), v in self._balances.items() if t == token and v.raw != 0)

    def mint(self, account: str, token: TokenId, amount: FixedAmount, memo: str = "") -> None:
        if amount.raw < 0:
            raise ParameterError(f"mint amount must be >= 0, got {amount}")
        if amount.raw == 0:
            return
        self._balances[(account, token)] = self.balance(account, token) + amount
        self._supply[token] = self.total_supply(token) + amount
        self._record({"type": "mint", "account": account, "token": token,
                      "amount": str(amount), "memo": memo})

    def burn(self, account: str, token: TokenId, amount: FixedAmount, memo: str = "") -> None:
        if amount.raw < 0:
            raise ParameterError(f"burn amount must be >= 0, got {amount}")
        if amount.raw == 0:
            return
        bal = self.balance(account, token)
        if bal < amount:
            raise BalanceError(f"{account} holds {bal} {token}, cannot burn {amount}")
        self._balances[(account, token)] = bal - amount
        self._supply[token] = self.total_supply(token) - amount
        self._record({"type": "burn", "account": account, "token": token,
                      "amount": str(amount), "memo": memo})

    def transfer(self, src: str, dst: str, token: TokenId, amount: FixedAmount,
                 memo: str = "") -> None:
        if amount.raw < 0:
            raise ParameterError(f"transfer amount must be >= 0, got {amount}")
        if amount.raw == 0 or src == dst:
            return
        bal = self.balance(src, token)
        if bal < amount:
            raise BalanceError(f"{src} holds {bal} {token}, cannot send {amount}")
        self._balances[(src, token)] = bal - amount
        self._balances[(dst, token)] = self.balance(dst, token) + amount
        self._record({"type": "transfer", "src": src, "dst": dst, "token": token,
                      "amount": str(amount), "memo": memo})

    def check_conservation(self) -> None:
        """Assert sum of balances == recorded supply for every token."""
        sums: dict[TokenId, int] = {}
        for (_, token), value in self._balances.items():
            sums[token] = sums.get(token, 0) + value.raw
        for token, supply in self._supply.items():
            if sums.get(token, 0) != supply.raw:
                raise RugsimError(
                    f"conservation violated for {token}: "
                    f"balances sum {sums.get(token, 0)} != supply {supply.raw}")
        for token, total in sums.items():
            if token not in self._supply and total != 0:
                raise RugsimError(f"unminted balance for {token}: {total}")

    def snapshot(self) -> dict:
        """JSON-ready view: non-zero balances and per-token supply."""
        balances: dict[str, dict[str, str]] = {}
        for (account, token), value in sorted(self._balances.items()):
            if value.raw != 0:
                balances.setdefault(account, {})[token] = str(value)
        supply = {token: str(v) for token, v in sorted(self._supply.items()) if v.raw != 0}
        return {"balances": balances, "supply": supply}
