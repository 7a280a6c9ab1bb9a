"""Deterministic multi-chain discrete-block simulation engine.

One logical clock advances all chains in lockstep; within a height,
satellite chains step first and the home chain last, so bridge deliveries
aged exactly `bridge_delay_blocks` arrive the block they come due. Each
chain step runs a fixed phase order:

  1. price processes advance
  2. detection observes and plans (monitors, drain planners, intents,
     peg keeper)
  3. the transaction queue executes in (priority desc, arrival) order
  4. scripted agent operations (vault, market, dispute submissions)
  5. perps funding and liquidation
  6. dispute-machine deadlines fire
  7. the bridge delivers matured reward events (home chain)
  8. supply emission and the burn controller (home chain)
  9. telemetry

Module errors never crash a run; they are recorded as failed events.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

from . import detection, market, perps, tokenomics
from .core import (
    AccountId,
    BlockTime,
    FixedAmount,
    ParameterError,
    RugsimError,
    SeededRng,
    StateError,
    TokenId,
    ZERO,
    amt,
)
from .detection import (
    AuxMonitor,
    IntentAction,
    IntentBook,
    PoolMonitor,
    SolverBid,
)
from .insurance import InsuranceBook, InsuranceParams
from .ledger import BalanceError, Ledger
from .market import DrainEvent, PoolState, RugKind
from .perps import Direction, FundingParams, MaintenanceRule, PerpBook
from .rugproof import RugproofBook, SlashParams
from .scenario import Scenario, ScenarioError, load_scenario
from .trace import Trace
from .vault import ReceiptKind, VaultRegistry, anticoin_value

TREASURY = "treasury"
HOME_TOKEN = "R"
PERP_SETTLEMENT = "perps-settlement"

# queue priorities: higher executes first within a block; protective plans
# sit above PRIORITY_DRAIN by the scenario's protocol_priority_boost
PRIORITY_PEG_KEEPER = 10
PRIORITY_DRAIN = 0
PRIORITY_SANDWICH_POST = -10
PRIORITY_BACKRUN = -20


@dataclass
class QueuedTx:
    chain: str
    execute_at: int
    priority: int
    seq: int
    kind: str
    payload: dict


@dataclass
class PendingDrain:
    event: DrainEvent
    chain: str
    frontrun_planned: set = field(default_factory=set)
    sandwich_planned: bool = False
    backrun_planned: bool = False


@dataclass
class Agent:
    kind: str
    account: AccountId
    params: dict
    script: dict[int, list[dict]]  # block -> ops


def _script_index(entries: list[dict]) -> dict[int, list[dict]]:
    by_block: dict[int, list[dict]] = {}
    for step in entries:
        by_block.setdefault(step["block"], []).append(step)
    return by_block


class Simulation:
    """Materialized world state plus the per-block step loop."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.rng = SeededRng(scenario.seed)
        self.trace = Trace()
        self.height = 0
        self._chain_ctx = "genesis"
        self._seq = 0
        self.ledger = Ledger(recorder=self._record_ledger_event)

        self.accounts: dict[str, AccountId] = {}
        self.owner_accounts: dict[str, list[str]] = {}
        self.token_chain: dict[TokenId, str] = {scenario.numeraire: scenario.home_chain}
        self.processes: dict[TokenId, market.PriceProcess] = {}
        self.prices: dict[TokenId, FixedAmount] = {}
        self.pools: dict[str, PoolState] = {}
        self.pool_chain: dict[str, str] = {}
        self.registries: dict[str, VaultRegistry] = {
            chain: VaultRegistry(chain) for chain in scenario.chains}
        self.vault_chain: dict[str, str] = {}
        self.perp_books: dict[str, PerpBook] = {}
        self.perp_amm: Optional[str] = None
        self.intent_book = IntentBook()
        self.monitors: dict[str, PoolMonitor] = {}
        self.aux_monitors: dict[str, AuxMonitor] = {}
        self.agents: list[Agent] = []
        self.queue: list[QueuedTx] = []
        self.pending_drains: list[PendingDrain] = []
        self.bridge: list[tuple[int, dict]] = []
        self.total_penalties = ZERO
        # per-pool LP share ledger: exact pool fractions per account,
        # genesis liquidity held by the synthetic "protocol" holder
        self.lp_shares: dict[str, dict[str, Fraction]] = {}
        # cumulative totals, diffed against per-chain snapshots at scan time
        self._mint_totals: dict[str, FixedAmount] = {}
        self._outflow_totals: dict[tuple[str, str], FixedAmount] = {}
        self._scanned_mints: dict[str, FixedAmount] = {}
        self._scanned_outflows: dict[tuple[str, str], FixedAmount] = {}
        self._prev_volumes: dict[str, FixedAmount] = {}
        self._prev_liquidity: dict[str, FixedAmount] = {}

        self._materialize()

    # -- construction -------------------------------------------------------

    def _materialize(self) -> None:
        sc = self.scenario
        for entry in sc.accounts:
            account = AccountId(value=entry["id"], owner=entry.get("owner", entry["id"]))
            self.accounts[account.value] = account
            self.owner_accounts.setdefault(account.owner, []).append(account.value)
            for token, balance in entry.get("balances", {}).items():
                self.ledger.mint(account.value, token, amt(balance), memo="genesis")

        for entry in sc.tokens:
            token = entry["id"]
            self.token_chain[token] = entry["chain"]
            process = entry.get("price_process")
            if process is not None:
                kind = RugKind(process["kind"])
                self.processes[token] = market.PriceProcess(
                    kind=kind, p0=amt(process["p0"]),
                    tau_rug=amt(process.get("tau_rug", 0)),
                    lam=amt(process.get("lam", 0)),
                    alpha_sent=amt(process.get("alpha_sent", 0)),
                    epsilon_floor=amt(process.get("epsilon_floor", "0.000000001")))
                self.prices[token] = market.price_at(self.processes[token], 0)

        for entry in sc.pools:
            pool = PoolState(entry["id"], entry["token_x"], entry["token_y"],
                             amt(entry["reserve_x"]), amt(entry["reserve_y"]),
                             fee_bps=entry.get("fee_bps", 0))
            self.pools[pool.pool_id] = pool
            self.pool_chain[pool.pool_id] = entry["chain"]
            account = self._pool_account(pool.pool_id)
            self.ledger.mint(account, pool.token_x, pool.reserve_x, memo="genesis-pool")
            self.ledger.mint(account, pool.token_y, pool.reserve_y, memo="genesis-pool")
            self.lp_shares[pool.pool_id] = {"protocol": Fraction(1)}
            self._prev_volumes[pool.pool_id] = ZERO
            self._prev_liquidity[pool.pool_id] = self._pool_liquidity(pool)

        for entry in sc.vaults:
            chain = entry["chain"]
            token = entry["rugged_token"]
            price = self.prices.get(token)
            if price is None:
                raise ScenarioError(f"vaults.{entry['id']}",
                                    f"token {token} has no price process")
            vault = self.registries[chain].create_vault(
                token, ReceiptKind(entry.get("receipt_kind", "fungible")),
                amt(entry["omega"]), amt(entry["theta"]), amt(entry["penalty_k"]),
                amt(entry["penalty_lambda"]), amt(entry["gamma_base"]),
                amt(entry["delta_gamma"]), price, vault_id=entry["id"])
            self.vault_chain[vault.vault_id] = chain
            self.token_chain[vault.anticoin] = chain

        tk = sc.tokenomics
        self.supply_params = tokenomics.SupplyParams(
            s0=amt(tk["s0"]), epsilon_rate=amt(tk["epsilon_rate"]),
            beta_burn=amt(tk["beta_burn"]), kappa=amt(tk["kappa"]))
        self.supply = tokenomics.SupplyState(current_supply=amt(tk["initial_supply"]))
        self.ledger.mint(TREASURY, HOME_TOKEN, amt(tk["initial_supply"]),
                         memo="genesis-supply")

        if sc.perps:
            funding = FundingParams(alpha_base=amt(sc.perps["alpha_base"]),
                                    l_min=amt(sc.perps["l_min"]),
                                    interval_blocks=sc.perps["interval_blocks"])
            rule = MaintenanceRule(
                maintenance_fraction=amt(sc.perps.get("maintenance_fraction", "0.1")),
                liquidator_deadline_blocks=sc.perps.get("liquidator_deadline_blocks", 5),
                liquidator_fee_fraction=amt(sc.perps.get("liquidator_fee_fraction", "0.05")))
            max_leverage = amt(sc.perps.get("max_leverage", 10))
            revalue = bool(sc.perps.get("revalue_collateral", False))
            self.perp_amm = sc.perps.get("amm_pool")
            for vault_id in sc.perps.get("enabled_vaults", []):
                chain = self.vault_chain[vault_id]
                vault = self.registries[chain].vault(vault_id)
                self.perp_books[vault_id] = PerpBook(vault_id, vault.anticoin,
                                                     funding, rule, max_leverage,
                                                     revalue_collateral=revalue)

        rp = sc.rugproof or {}
        self.rugproof = RugproofBook(SlashParams(
            alpha_slash=amt(rp.get("alpha_slash", "0.5")),
            gamma_slash=amt(rp.get("gamma_slash", "0.5")),
            claimant_share=amt(rp.get("claimant_share", "0.5")),
            z_min=amt(rp.get("z_min", 1)),
            challenge_blocks=int(rp.get("challenge_blocks", 10)),
            x_min=amt(rp.get("x_min", "0.01"))), treasury=TREASURY)

        ins = sc.insurance or {}
        self.insurance = InsuranceBook(InsuranceParams(
            alpha_comp=amt(ins.get("alpha_comp", "0.2")),
            gamma_pen=amt(ins.get("gamma_pen", "0.5")),
            escalation_bond_multiplier=amt(ins.get("escalation_bond_multiplier", 2)),
            max_escalations=int(ins.get("max_escalations", 2)),
            tau_challenge=int(ins.get("tau_challenge", 10)),
            tau_vote=int(ins.get("tau_vote", 10)),
            escalation_window=int(ins.get("escalation_window", 5)),
            x_min=amt(ins.get("x_min", "0.01"))), sc.numeraire, treasury=TREASURY)

        det = sc.detection
        # protocol transactions outbid drains by this much (the fee
        # escalation knob); protective plans use it, salvage stays below
        self.priority_boost = max(1, int(det.get("protocol_priority_boost", 20)))
        self.sandwich_treasury_fraction = amt(det.get("sandwich_treasury_fraction", 1))
        drop = amt(det.get("drop_threshold", "0.2"))
        for pool_id, pool in self.pools.items():
            if sc.numeraire in (pool.token_x, pool.token_y):
                self.monitors[pool_id] = PoolMonitor(pool_id, drop)
        for chain in sc.chains:
            self.aux_monitors[chain] = AuxMonitor(
                mint_spike_factor=amt(det.get("mint_spike_factor", 3)),
                wallet_outflow_fraction=amt(det.get("wallet_outflow_fraction", "0.5")),
                volume_spike_factor=amt(det.get("volume_spike_factor", 4)))

        for entry in sc.agents:
            self.agents.append(Agent(
                kind=entry["kind"], account=self.accounts[entry["account"]],
                params={k: v for k, v in entry.items()
                        if k not in ("kind", "account", "script")},
                script=_script_index(entry.get("script", []))))

        for entry in sc.intents:
            self._register_intent(entry)

        # aux scans diff against these snapshots; genesis funding is not
        # block activity
        self._scanned_mints = dict(self._mint_totals)
        self._scanned_outflows = dict(self._outflow_totals)
        self.trace.initial_balances = {}

    def _register_intent(self, entry: dict) -> None:
        pool = self.pools[entry["pool"]]
        token = entry["token"]
        vault_id = entry.get("vault")
        if vault_id is None and entry["action"] == "swap_to_anticoin":
            vault_id = self._vault_for_token(token)
        self.intent_book.register(
            owner=self.accounts[entry["owner"]], pool=entry["pool"], token=token,
            theta_price=amt(entry["theta_price"]),
            theta_liquidity=amt(entry["theta_liquidity"]),
            action=IntentAction(entry["action"]),
            price_ref=self.prices.get(token, ZERO),
            liquidity_ref=self._pool_liquidity(pool),
            vault=vault_id, solver_fee_bps=int(entry.get("solver_fee_bps", 10000)))
        self._event("intent_registered", owner=entry["owner"], pool=entry["pool"],
                    theta_price=str(amt(entry["theta_price"])),
                    theta_liquidity=str(amt(entry["theta_liquidity"])))

    # -- small helpers -------------------------------------------------------

    def _pool_account(self, pool_id: str) -> str:
        return f"pool:{pool_id}"

    def _vault_for_token(self, token: TokenId) -> Optional[str]:
        for registry in self.registries.values():
            vault = registry.vault_for_token(token)
            if vault is not None:
                return vault.vault_id
        return None

    def _pool_liquidity(self, pool: PoolState) -> FixedAmount:
        """The liquid (numeraire) side of a pool, else the y reserve."""
        if pool.token_x == self.scenario.numeraire:
            return pool.reserve_x
        return pool.reserve_y

    def _record_ledger_event(self, event: dict) -> None:
        event["h"] = self.height
        event["chain"] = self._chain_ctx
        self.trace.record(event)
        if event["type"] == "mint":
            token = event["token"]
            self._mint_totals[token] = \
                self._mint_totals.get(token, ZERO) + amt(event["amount"])
        elif event["type"] == "transfer":
            key = (event["src"], event["token"])
            self._outflow_totals[key] = \
                self._outflow_totals.get(key, ZERO) + amt(event["amount"])

    def _event(self, event_type: str, **payload: Any) -> None:
        event = {"type": event_type, "h": self.height, "chain": self._chain_ctx}
        event.update(payload)
        self.trace.record(event)

    def _failed(self, op: str, error: Exception, **payload: Any) -> None:
        self._event("failed", op=op, error=type(error).__name__,
                    detail=str(error), **payload)

    def _enqueue(self, chain: str, execute_at: int, priority: int, kind: str,
                 payload: dict) -> None:
        self.queue.append(QueuedTx(chain, execute_at, priority, self._seq,
                                   kind, payload))
        self._seq += 1

    def _mark_price(self, token: TokenId) -> FixedAmount:
        return self.prices.get(token, ZERO)

    def _apply_swap(self, pool_id: str, account: str, input_token: TokenId,
                    dx: FixedAmount, memo: str) -> Optional[FixedAmount]:
        """Execute a swap against a pool, mirroring reserves in the ledger."""
        pool = self.pools[pool_id]
        dy, new_pool = market.pool_swap(pool, input_token, dx)
        out_token = pool.other(input_token)
        pool_account = self._pool_account(pool_id)
        self.ledger.transfer(account, pool_account, input_token, dx, memo=memo)
        self.ledger.transfer(pool_account, account, out_token, dy, memo=memo)
        self.pools[pool_id] = new_pool
        self._event("swap", pool=pool_id, account=account, token_in=input_token,
                    amount_in=str(dx), token_out=out_token, amount_out=str(dy),
                    memo=memo)
        return dy

    # -- run loop -------------------------------------------------------------

    def run(self, blocks: Optional[int] = None) -> Trace:
        total = blocks if blocks is not None else self.scenario.blocks
        if total < 1:
            raise ParameterError("need at least one block")
        for _ in range(total):
            self.step()
        self.finalize()
        return self.trace

    def step(self) -> None:
        self.height += 1
        self.supply.begin_block(self.height)
        satellites = [c for c in self.scenario.chains if c != self.scenario.home_chain]
        for chain in satellites + [self.scenario.home_chain]:
            self._step_chain(chain)
        self.ledger.check_conservation()

    def _step_chain(self, chain: str) -> None:
        self._chain_ctx = chain
        height = self.height
        at = BlockTime(height, chain)

        # (1) price processes advance
        for token, process in self.processes.items():
            if self.token_chain[token] == chain:
                self.prices[token] = market.price_at(process, height)

        # (2) detection observes and plans
        self._phase_detection(chain, height)

        # (3) queued transactions, priority order
        due = [tx for tx in self.queue
               if tx.chain == chain and tx.execute_at <= height]
        self.queue = [tx for tx in self.queue
                      if not (tx.chain == chain and tx.execute_at <= height)]
        due.sort(key=lambda tx: (-tx.priority, tx.seq))
        for tx in due:
            self._execute_tx(tx, height)

        # (4) scripted agent operations
        for agent in self.agents:
            for step in agent.script.get(height, []):
                self._run_script_op(agent, step, chain, at)

        # (4b) parametric noise traders
        for agent in self.agents:
            noise = agent.params.get("noise")
            if noise and self.pool_chain.get(noise["pool"]) == chain:
                self._noise_trade(agent, noise)

        # (5) perps funding and liquidation
        self._phase_perps(chain, at)

        # (6) dispute deadlines fire on the home chain
        if chain == self.scenario.home_chain:
            self._phase_dispute_deadlines(at)

        # (7) bridge delivery to the home chain
        if chain == self.scenario.home_chain:
            self._phase_bridge(height)

        # (8) supply emission and burn controller
        if chain == self.scenario.home_chain:
            self._phase_tokenomics(height)

        # (9) telemetry is the per-block row written in _phase_tokenomics

    # -- phases ----------------------------------------------------------------

    def _phase_detection(self, chain: str, height: int) -> None:
        numeraire = self.scenario.numeraire
        detectors = [a for a in self.agents if a.kind == "detector"]
        creators = [a for a in self.agents if a.kind == "creator"]

        for pool_id, monitor in self.monitors.items():
            if self.pool_chain[pool_id] != chain:
                continue
            signal = monitor.observe(height, self._pool_liquidity(self.pools[pool_id]))
            if signal is not None:
                self._event("risk_signal", kind=signal.kind.value, pool=pool_id,
                            magnitude=str(signal.magnitude))

        # auxiliary metrics over activity since this chain's last scan
        # (everything the previous block did, nothing of this one yet)
        aux = self.aux_monitors.get(chain)
        if aux is not None:
            minted = ZERO
            for token, total in self._mint_totals.items():
                if self.token_chain.get(token) == chain and token != HOME_TOKEN:
                    minted = minted + (total - self._scanned_mints.get(token, ZERO))
                    self._scanned_mints[token] = total
            # largest single creator-wallet outflow of a chain token
            outflow = ZERO
            balance_before = ZERO
            for creator in creators:
                for token in self.processes:
                    if self.token_chain[token] != chain:
                        continue
                    key = (creator.account.value, token)
                    total = self._outflow_totals.get(key, ZERO)
                    moved = total - self._scanned_outflows.get(key, ZERO)
                    self._scanned_outflows[key] = total
                    if moved > outflow:
                        outflow = moved
                        balance_before = \
                            self.ledger.balance(creator.account.value, token) + moved
            volume = ZERO
            delta_liq = ZERO
            for pool_id, pool in self.pools.items():
                if self.pool_chain[pool_id] != chain:
                    continue
                current = pool.volume_x + pool.volume_y
                volume = volume + (current - self._prev_volumes[pool_id])
                self._prev_volumes[pool_id] = current
                liquidity = self._pool_liquidity(pool)
                delta_liq = delta_liq + (liquidity - self._prev_liquidity[pool_id])
                self._prev_liquidity[pool_id] = liquidity
            for signal in aux.scan(height, minted, outflow, balance_before,
                                   volume, delta_liq):
                self._event("risk_signal", kind=signal.kind.value,
                            magnitude=str(signal.magnitude))

        # planners against pending drains
        for pending in self.pending_drains:
            if pending.chain != chain:
                continue
            ev = pending.event
            if height < ev.submitted_at.height or height > ev.executes_at.height:
                continue
            pool = self.pools[ev.pool]
            rug_token = pool.token_x if pool.token_y == numeraire else pool.token_y
            for det in detectors:
                if height < ev.executes_at.height:
                    for name in det.params.get("protects", []):
                        if name in pending.frontrun_planned:
                            continue
                        holdings = self.ledger.balance(name, rug_token)
                        plan = detection.plan_frontrun(
                            ev, pool, rug_token, self.accounts[name], holdings,
                            height, PRIORITY_DRAIN)
                        pending.frontrun_planned.add(name)
                        if plan is None:
                            continue
                        self._event("plan", kind="frontrun", account=name,
                                    pool=ev.pool, amount=str(plan.leg.amount_in),
                                    quoted=str(plan.leg.quoted_out))
                        self._enqueue(chain, height,
                                      PRIORITY_DRAIN + self.priority_boost,
                                      "plan_swap",
                                      {"pool": ev.pool, "account": name,
                                       "token": rug_token,
                                       "amount": plan.leg.amount_in,
                                       "plan": "frontrun"})
                budget = amt(det.params.get("sandwich_budget", 0))
                if (budget.raw > 0 and not pending.sandwich_planned
                        and height == ev.executes_at.height - 1):
                    pending.sandwich_planned = True
                    own = self.ledger.balance(det.account.value, rug_token)
                    plan = detection.plan_sandwich(
                        ev, pool, rug_token, det.account, min(budget, own),
                        height, PRIORITY_DRAIN)
                    if plan is not None:
                        self._event("plan", kind="sandwich", account=det.account.value,
                                    pool=ev.pool,
                                    expected_profit=str(plan.expected_profit))
                        shared: dict = {}
                        self._enqueue(chain, ev.executes_at.height,
                                      PRIORITY_DRAIN + self.priority_boost,
                                      "sandwich_pre",
                                      {"pool": ev.pool, "account": det.account.value,
                                       "token": rug_token,
                                       "amount": plan.pre.leg.amount_in,
                                       "shared": shared})
                        self._enqueue(chain, ev.executes_at.height,
                                      PRIORITY_SANDWICH_POST, "sandwich_post",
                                      {"pool": ev.pool, "account": det.account.value,
                                       "rug_token": rug_token,
                                       "target_out": plan.post.leg.quoted_out,
                                       "shared": shared})
                back_budget = amt(det.params.get("backrun_budget", 0))
                if (back_budget.raw > 0 and not pending.backrun_planned
                        and height == ev.executes_at.height):
                    pending.backrun_planned = True
                    self._enqueue(chain, ev.executes_at.height, PRIORITY_BACKRUN,
                                  "backrun",
                                  {"event": ev, "account": det.account,
                                   "rug_token": rug_token, "budget": back_budget,
                                   "cap": amt(det.params.get("backrun_cap", 0))})

        # intents
        solvers = [a for a in self.agents if a.kind == "solver"]
        bids = [SolverBid(a.account, int(a.params.get("fee_bps", 0)))
                for a in sorted(solvers, key=lambda a: a.account.value)]
        chain_prices = {t: p for t, p in self.prices.items()
                        if self.token_chain[t] == chain}
        chain_liquidity = {pid: self._pool_liquidity(self.pools[pid])
                           for pid, c in self.pool_chain.items() if c == chain}
        for execution in detection.solver_step(self.intent_book, chain_prices,
                                               chain_liquidity, height, bids):
            self._event("intent_triggered", intent=execution.intent.intent_id,
                        owner=execution.intent.owner.value,
                        solver=execution.solver.value, fee_bps=execution.fee_bps)
            self._enqueue(chain, height,
                          PRIORITY_DRAIN + max(1, self.priority_boost - 5),
                          "intent", {"execution": execution})

        # peg keeper planning
        for keeper in (a for a in self.agents if a.kind == "pegkeeper"):
            pool_id = keeper.params.get("pool")
            if pool_id is None or self.pool_chain.get(pool_id) != chain:
                continue
            self._enqueue(chain, height, PRIORITY_PEG_KEEPER, "peg_keeper",
                          {"agent": keeper})

    def _execute_tx(self, tx: QueuedTx, height: int) -> None:
        try:
            if tx.kind == "drain":
                self._exec_drain(tx, height)
            elif tx.kind == "plan_swap":
                payload = tx.payload
                self._apply_swap(payload["pool"], payload["account"],
                                 payload["token"], payload["amount"],
                                 memo=payload["plan"])
            elif tx.kind == "sandwich_pre":
                payload = tx.payload
                payload["shared"]["pre_out"] = self._apply_swap(
                    payload["pool"], payload["account"], payload["token"],
                    payload["amount"], memo="sandwich_pre")
            elif tx.kind == "sandwich_post":
                self._exec_sandwich_post(tx.payload)
            elif tx.kind == "backrun":
                self._exec_backrun(tx.payload, height)
            elif tx.kind == "intent":
                self._exec_intent(tx.payload["execution"])
            elif tx.kind == "peg_keeper":
                self._exec_peg_keeper(tx.payload["agent"])
            else:
                raise StateError(f"unknown queued tx kind {tx.kind!r}")
        except RugsimError as exc:
            self._failed(tx.kind, exc)

    def _exec_drain(self, tx: QueuedTx, height: int) -> None:
        pending: PendingDrain = tx.payload["pending"]
        ev = pending.event
        pool = self.pools[ev.pool]
        rug_token = tx.payload["rug_token"]
        creator = ev.creator.value
        held = self.ledger.balance(creator, rug_token)
        if held < ev.t_rug_supply:
            raise BalanceError(
                f"creator holds {held} {rug_token}, cannot drain {ev.t_rug_supply}")
        result = market.execute_drain(ev, pool, rug_token, height)
        if result.liquid_out.raw > 0:
            pool_account = self._pool_account(ev.pool)
            liquid_token = pool.other(rug_token)
            self.ledger.transfer(creator, pool_account, rug_token,
                                 ev.t_rug_supply, memo="drain")
            self.ledger.transfer(pool_account, creator, liquid_token,
                                 result.liquid_out, memo="drain")
            self.pools[ev.pool] = result.pool
        self.pending_drains.remove(pending)
        self._event("drain_executed", pool=ev.pool, creator=creator,
                    naive_target=str(result.naive_target),
                    realized=str(result.liquid_out),
                    spot_after=str(market.spot_price(self.pools[ev.pool])))

    def _exec_sandwich_post(self, payload: dict) -> None:
        pool = self.pools[payload["pool"]]
        target = payload["target_out"]
        liquid_token = pool.other(payload["rug_token"])
        cost = market.pool_quote_exact_out(pool, payload["rug_token"], target)
        held = self.ledger.balance(payload["account"], liquid_token)
        if held < cost:
            raise StateError(f"sandwich post-leg needs {cost}, holds {held}")
        self._apply_swap(payload["pool"], payload["account"], liquid_token,
                         cost, memo="sandwich_post")
        pre_out = payload["shared"].get("pre_out")
        if pre_out is None:
            return
        profit = pre_out - cost
        if profit.raw > 0 and self.sandwich_treasury_fraction.raw > 0:
            cut = profit * self.sandwich_treasury_fraction
            self.ledger.transfer(payload["account"], TREASURY, liquid_token,
                                 cut, memo="sandwich-profit")
            self._event("sandwich_settled", account=payload["account"],
                        profit=str(profit), to_treasury=str(cut))

    def _exec_backrun(self, payload: dict, height: int) -> None:
        # planned at execution time: the quote needs the post-drain reserves
        ev: DrainEvent = payload["event"]
        pool = self.pools[ev.pool]
        account: AccountId = payload["account"]
        rug_token = payload["rug_token"]
        numeraire = pool.other(rug_token)
        budget = min(payload["budget"],
                     self.ledger.balance(account.value, numeraire))
        plan = detection.plan_backrun(ev, pool, rug_token, account, budget,
                                      payload["cap"], now=height)
        if plan is None:
            return
        self._apply_swap(ev.pool, account.value, plan.leg.input_token,
                         plan.leg.amount_in, memo="backrun")

    def _exec_intent(self, execution: detection.IntentExecution) -> None:
        intent = execution.intent
        owner = intent.owner.value
        holdings = self.ledger.balance(owner, intent.token)
        if holdings.raw <= 0:
            self._event("intent_skipped", intent=intent.intent_id, owner=owner,
                        reason="no holdings")
            return
        if intent.action is IntentAction.EXIT_TO_NUMERAIRE:
            proceeds = self._apply_swap(intent.pool, owner, intent.token, holdings,
                                        memo="intent")
            fee = proceeds * execution.fee_bps / 10000
            out_token = self.pools[intent.pool].other(intent.token)
            if fee.raw > 0:
                self.ledger.transfer(owner, execution.solver.value, out_token,
                                     fee, memo="solver-fee")
        else:  # swap_to_anticoin: vault deposit, fee paid in anticoins
            vault_id = intent.vault or self._vault_for_token(intent.token)
            if vault_id is None:
                raise StateError(f"no vault accepts {intent.token}")
            chain = self.vault_chain[vault_id]
            registry = self.registries[chain]
            minted, _, reward = registry.deposit(self.ledger, vault_id,
                                                 intent.owner, holdings)
            self._queue_reward(reward)
            fee = minted * execution.fee_bps / 10000
            anticoin = registry.vault(vault_id).anticoin
            if fee.raw > 0:
                self.ledger.transfer(owner, execution.solver.value, anticoin,
                                     fee, memo="solver-fee")
        self._event("intent_executed", intent=intent.intent_id, owner=owner,
                    solver=execution.solver.value, fee_bps=execution.fee_bps)

    def _exec_peg_keeper(self, agent: Agent) -> None:
        pool_id = agent.params["pool"]
        pool = self.pools[pool_id]
        vault_id = agent.params.get("vault")
        if vault_id is None:
            return
        chain = self.vault_chain[vault_id]
        vault = self.registries[chain].vault(vault_id)
        peg = anticoin_value(vault, self._mark_price(vault.rugged_token))
        spot = market.spot_price(pool)
        input_token = pool.token_x if spot > peg else pool.token_y
        budget = min(amt(agent.params.get("budget", 0)),
                     self.ledger.balance(agent.account.value, input_token))
        tolerance = amt(agent.params.get("tolerance", "0.005"))
        trade = market.peg_keeper_step(pool, peg, budget, tolerance)
        if trade is None:
            return
        self._apply_swap(pool_id, agent.account.value, trade.input_token,
                         trade.amount_in, memo="peg_keeper")
        self._event("peg_trade", pool=pool_id, peg=str(peg),
                    amount_in=str(trade.amount_in), token_in=trade.input_token,
                    spot_after=str(market.spot_price(self.pools[pool_id])))

    # -- scripted ops ------------------------------------------------------------

    def _run_script_op(self, agent: Agent, step: dict, chain: str,
                       at: BlockTime) -> None:
        op = step["op"]
        try:
            handler = getattr(self, f"_op_{op}", None)
            if handler is None:
                raise StateError(f"unknown script op {op!r}")
            handler(agent, step, chain, at)
        except RugsimError as exc:
            self._failed(op, exc, account=agent.account.value)

    def _op_drain(self, agent: Agent, step: dict, chain: str, at: BlockTime) -> None:
        pool_id = step["pool"]
        if self.pool_chain[pool_id] != chain:
            return
        window = int(step.get("window", 1))
        ev = DrainEvent(pool=pool_id, creator=agent.account,
                        t_rug_supply=amt(step["t_rug"]),
                        t_total_supply=amt(step["t_total"]),
                        submitted_at=at,
                        executes_at=BlockTime(at.height + window, chain))
        pool = self.pools[pool_id]
        rug_token = pool.token_x if pool.token_y == self.scenario.numeraire \
            else pool.token_y
        pending = PendingDrain(event=ev, chain=chain)
        self.pending_drains.append(pending)
        self._enqueue(chain, ev.executes_at.height, PRIORITY_DRAIN, "drain",
                      {"pending": pending, "rug_token": rug_token})
        self._event("drain_submitted", pool=pool_id, creator=agent.account.value,
                    t_rug=str(ev.t_rug_supply), t_total=str(ev.t_total_supply),
                    executes_at=ev.executes_at.height)

    def _op_deposit(self, agent: Agent, step: dict, chain: str, at: BlockTime) -> None:
        vault_id = step["vault"]
        if self.vault_chain[vault_id] != chain:
            return
        registry = self.registries[chain]
        minted, receipt, reward = registry.deposit(
            self.ledger, vault_id, agent.account, amt(step["amount"]))
        self._queue_reward(reward)
        self._event("deposit", vault=vault_id, account=agent.account.value,
                    amount=str(minted), receipt_kind=receipt.kind.value,
                    serial=receipt.nft_serial)

    def _op_burn(self, agent: Agent, step: dict, chain: str, at: BlockTime) -> None:
        vault_id = step["vault"]
        if self.vault_chain[vault_id] != chain:
            return
        supply, reward = self.registries[chain].burn_anticoins(
            self.ledger, vault_id, agent.account, amt(step["amount"]))
        self._queue_reward(reward)
        self._event("anticoin_burn", vault=vault_id, account=agent.account.value,
                    amount=str(amt(step["amount"])), supply_after=str(supply))

    def _op_withdraw(self, agent: Agent, step: dict, chain: str, at: BlockTime) -> None:
        vault_id = step["vault"]
        if self.vault_chain[vault_id] != chain:
            return
        related = self.owner_accounts.get(agent.account.owner, [agent.account.value])
        result = self.registries[chain].withdraw(
            self.ledger, vault_id, agent.account, amt(step["amount"]), TREASURY,
            related_accounts=related)
        self.total_penalties = self.total_penalties + result.penalty
        self._event("withdraw", vault=vault_id, account=agent.account.value,
                    amount=str(amt(step["amount"])), returned=str(result.returned),
                    penalty=str(result.penalty), rate=str(result.rate),
                    index=result.withdrawal_index)

    def _op_transfer(self, agent: Agent, step: dict, chain: str, at: BlockTime) -> None:
        token = step["token"]
        if self.token_chain.get(token, chain) != chain:
            return
        self.ledger.transfer(agent.account.value, step["to"], token,
                             amt(step["amount"]), memo="script-transfer")

    def _op_swap(self, agent: Agent, step: dict, chain: str, at: BlockTime) -> None:
        if self.pool_chain[step["pool"]] != chain:
            return
        self._apply_swap(step["pool"], agent.account.value, step["token_in"],
                         amt(step["amount"]), memo="script-swap")

    def _op_add_liquidity(self, agent: Agent, step: dict, chain: str,
                          at: BlockTime) -> None:
        pool_id = step["pool"]
        if self.pool_chain[pool_id] != chain:
            return
        pool = self.pools[pool_id]
        dx = amt(step["dx"])
        dy = pool.reserve_y * dx / pool.reserve_x if step.get("dy") == "auto" \
            else amt(step["dy"])
        account = agent.account.value
        new_pool = market.pool_add_liquidity(pool, dx, dy)
        pool_account = self._pool_account(pool_id)
        self.ledger.transfer(account, pool_account, pool.token_x, dx, memo="add-liq")
        self.ledger.transfer(account, pool_account, pool.token_y, dy, memo="add-liq")
        # dilute existing holders by the growth, credit the rest to the depositor
        added = Fraction(dx.raw, new_pool.reserve_x.raw)
        shares = self.lp_shares[pool_id]
        for holder in list(shares):
            shares[holder] *= 1 - added
        shares[account] = shares.get(account, Fraction(0)) + added
        self.pools[pool_id] = new_pool
        self._event("add_liquidity", pool=pool_id, account=account,
                    dx=str(dx), dy=str(dy))

    def _op_remove_liquidity(self, agent: Agent, step: dict, chain: str,
                             at: BlockTime) -> None:
        pool_id = step["pool"]
        if self.pool_chain[pool_id] != chain:
            return
        share = amt(step["share"])
        account = agent.account.value
        shares = self.lp_shares[pool_id]
        owned = shares.get(account, Fraction(0))
        if Fraction(share.raw, 10**9) > owned:
            raise ParameterError(
                f"{account} owns {float(owned):.4f} of {pool_id}, "
                f"cannot remove {share}")
        out_x, out_y, new_pool = market.pool_remove_liquidity(
            self.pools[pool_id], share)
        pool_account = self._pool_account(pool_id)
        self.ledger.transfer(pool_account, account, new_pool.token_x, out_x,
                             memo="remove-liq")
        self.ledger.transfer(pool_account, account, new_pool.token_y, out_y,
                             memo="remove-liq")
        removed = Fraction(share.raw, 10**9)
        if removed == 1:
            shares.clear()
        else:
            shares[account] = owned - removed
            for holder in list(shares):
                shares[holder] /= 1 - removed
        self.pools[pool_id] = new_pool
        self._event("remove_liquidity", pool=pool_id, account=account,
                    out_x=str(out_x), out_y=str(out_y))

    def _op_open_position(self, agent: Agent, step: dict, chain: str,
                          at: BlockTime) -> None:
        vault_id = step["vault"]
        if self.vault_chain[vault_id] != chain:
            return
        book = self.perp_books[vault_id]
        vault = self.registries[chain].vault(vault_id)
        mark = self._mark_price(vault.rugged_token)
        unit_value = anticoin_value(vault, mark)
        position = book.open_position(
            self.ledger, agent.account, amt(step["collateral"]),
            amt(step["leverage"]), Direction(step["direction"]), mark,
            unit_value, at)
        self._event("position_opened", vault=vault_id, account=agent.account.value,
                    position=position.position_id, collateral=str(position.collateral_ca),
                    leverage=str(position.leverage), direction=step["direction"],
                    entry=str(mark))

    def _op_register_intent(self, agent: Agent, step: dict, chain: str,
                            at: BlockTime) -> None:
        entry = dict(step)
        entry["owner"] = agent.account.value
        self._register_intent(entry)

    def _op_issue_bonded(self, agent: Agent, step: dict, chain: str,
                         at: BlockTime) -> None:
        if chain != self.scenario.home_chain:
            return
        issuance = self.rugproof.issue_bonded_token(
            self.ledger, agent.account, step["token"], amt(step["total_issued"]),
            amt(step["x"]))
        self._event("bonded_issuance", issuance=issuance.issuance_id,
                    issuer=agent.account.value, token=step["token"],
                    bond=str(issuance.bond))

    def _op_rug_claim(self, agent: Agent, step: dict, chain: str,
                      at: BlockTime) -> None:
        if chain != self.scenario.home_chain:
            return
        issuance_id = self._issuance_for_token(step["token"])
        claim = self.rugproof.submit_rug_claim(self.ledger, agent.account,
                                               issuance_id, amt(step["y"]), at)
        self._event("rug_claim", claim=claim.claim_id, issuance=issuance_id,
                    claimant=agent.account.value, bond=str(claim.claim_bond),
                    challenge_end=claim.challenge_end)

    def _issuance_for_token(self, token: TokenId) -> str:
        for issuance_id in sorted(self.rugproof.issuances):
            issuance = self.rugproof.issuances[issuance_id]
            if issuance.token == token and issuance.status.value == "active":
                return issuance_id
        raise StateError(f"no active issuance for {token}")

    def _op_vote_rug(self, agent: Agent, step: dict, chain: str,
                     at: BlockTime) -> None:
        if chain != self.scenario.home_chain:
            return
        issuance_id = self._issuance_for_token(step["token"])
        claim = self.rugproof.open_claim_for(issuance_id)
        if claim is None:
            raise StateError(f"no open claim on {issuance_id}")
        self.rugproof.cast_vote(self.ledger, claim, agent.account,
                                amt(step["deposit"]), step["side"], at)
        self._event("rug_vote", claim=claim.claim_id, voter=agent.account.value,
                    side=step["side"], deposit=str(amt(step["deposit"])))

    def _op_issue_policy(self, agent: Agent, step: dict, chain: str,
                         at: BlockTime) -> None:
        if chain != self.scenario.home_chain:
            return
        policy = self.insurance.issue_policy(
            self.ledger, agent.account, self.accounts[step["insured"]],
            amt(step["insured_value"]), amt(step["x"]), int(step["duration"]), at)
        self._event("policy_issued", policy=policy.policy_id,
                    insurer=agent.account.value, insured=step["insured"],
                    bond=str(policy.insurer_bond))

    def _op_submit_claim(self, agent: Agent, step: dict, chain: str,
                         at: BlockTime) -> None:
        if chain != self.scenario.home_chain:
            return
        loss = amt(step["loss"]) if "loss" in step else None
        claim = self.insurance.submit_claim(self.ledger, step["policy"],
                                            agent.account, amt(step["y"]), at,
                                            loss_claimed=loss)
        self._event("insurance_claim", claim=claim.claim_id, policy=step["policy"],
                    claimant=agent.account.value, bond=str(claim.claim_bond))

    def _op_join_claim(self, agent: Agent, step: dict, chain: str,
                       at: BlockTime) -> None:
        if chain != self.scenario.home_chain:
            return
        claim = self._insurance_claim(step["claim"])
        joiner = self.insurance.join_claim(self.ledger, claim, agent.account,
                                           amt(step["loss"]), amt(step["w"]), at)
        self._event("claim_joined", claim=claim.claim_id,
                    account=agent.account.value, bond=str(joiner.bond))

    def _insurance_claim(self, claim_id: str):
        claim = self.insurance.claims.get(claim_id)
        if claim is None:
            raise StateError(f"no insurance claim {claim_id}")
        return claim

    def _op_dispute_claim(self, agent: Agent, step: dict, chain: str,
                          at: BlockTime) -> None:
        if chain != self.scenario.home_chain:
            return
        claim = self._insurance_claim(step["claim"])
        dispute = self.insurance.dispute_claim(self.ledger, claim, agent.account,
                                               amt(step["z"]), at)
        self._event("claim_disputed", claim=claim.claim_id,
                    challenger=agent.account.value, bond=str(dispute.bond))

    def _op_vote_insurance(self, agent: Agent, step: dict, chain: str,
                           at: BlockTime) -> None:
        if chain != self.scenario.home_chain:
            return
        claim = self._insurance_claim(step["claim"])
        self.insurance.cast_vote(self.ledger, claim, agent.account,
                                 amt(step["deposit"]), step["side"], at)
        self._event("insurance_vote", claim=claim.claim_id,
                    voter=agent.account.value, side=step["side"])

    def _op_escalate(self, agent: Agent, step: dict, chain: str,
                     at: BlockTime) -> None:
        if chain != self.scenario.home_chain:
            return
        claim = self._insurance_claim(step["claim"])
        self.insurance.escalate(self.ledger, claim, agent.account, at)
        self._event("claim_escalated", claim=claim.claim_id,
                    party=agent.account.value, level=claim.escalation_level)

    def _noise_trade(self, agent: Agent, noise: dict) -> None:
        rng = self.rng.stream("noise", agent.account.value)
        if rng.random() >= float(amt(noise.get("prob", "0.1"))):
            return
        pool = self.pools[noise["pool"]]
        max_raw = amt(noise.get("max_size", 1)).raw
        size = FixedAmount(rng.randint(1, max_raw))
        token = pool.token_x if rng.random() < 0.5 else pool.token_y
        held = self.ledger.balance(agent.account.value, token)
        size = min(size, held)
        if size.raw <= 0:
            return
        try:
            self._apply_swap(noise["pool"], agent.account.value, token, size,
                             memo="noise")
        except RugsimError as exc:
            self._failed("noise", exc, account=agent.account.value)

    # -- perps, disputes, bridge, tokenomics phases -------------------------------

    def _phase_perps(self, chain: str, at: BlockTime) -> None:
        liquidators = sorted((a for a in self.agents if a.kind == "liquidator"),
                             key=lambda a: a.account.value)
        for vault_id, book in self.perp_books.items():
            if self.vault_chain[vault_id] != chain:
                continue
            vault = self.registries[chain].vault(vault_id)
            mark = self._mark_price(vault.rugged_token)
            if mark.raw <= 0:
                continue
            l_pool = ZERO
            if self.perp_amm is not None:
                l_pool = self._pool_liquidity(self.pools[self.perp_amm])
            if at.height % book.funding.interval_blocks == 0 and l_pool.raw > 0:
                round_ = book.apply_funding(self.ledger, l_pool, at, TREASURY)
                if round_ is not None:
                    self._event("funding_round", vault=vault_id,
                                rate=str(round_.rate),
                                paying_side=round_.paying_side.value,
                                transfers=len(round_.transfers),
                                dust=str(round_.treasury_remainder))
            bids: dict[int, str] = {}
            if liquidators:
                bidder = liquidators[0].account.value
                for position in book.positions.values():
                    if position.status is perps.PositionStatus.FLAGGED:
                        bids[position.position_id] = bidder
            unit_value = anticoin_value(vault, mark)
            events = book.flag_and_liquidate(self.ledger, mark, bids, at,
                                             TREASURY, PERP_SETTLEMENT,
                                             unit_value=unit_value)
            for event in events:
                self._event("liquidation", vault=vault_id, position=event.position_id,
                            kind=event.kind, liquidator=event.liquidator,
                            fee_ca=str(event.fee_ca), swap_ca=str(event.swap_ca))
                if event.swap_ca.raw > 0 and self.perp_amm is not None:
                    try:
                        proceeds = self._apply_swap(self.perp_amm, PERP_SETTLEMENT,
                                                    book.anticoin, event.swap_ca,
                                                    memo="liq-settle")
                        numeraire = self.scenario.numeraire
                        self.ledger.transfer(PERP_SETTLEMENT, TREASURY, numeraire,
                                             proceeds, memo="liq-proceeds")
                    except RugsimError as exc:
                        self._failed("liquidation_swap", exc, vault=vault_id)

    def _phase_dispute_deadlines(self, at: BlockTime) -> None:
        for claim_id in sorted(self.rugproof.claims):
            claim = self.rugproof.claims[claim_id]
            if claim.status.value == "voting" and at.height >= claim.challenge_end:
                resolution = self.rugproof.resolve_claim(claim, at)
                self._event("rug_claim_resolved", claim=claim_id,
                            outcome=resolution.outcome,
                            slashed=str(resolution.slashed))
        for claim_id in sorted(self.insurance.claims):
            claim = self.insurance.claims[claim_id]
            if claim.phase.value in ("approved", "rejected"):
                continue
            resolution = self.insurance.step_deadlines(self.ledger, claim, at)
            if resolution is not None:
                self._event("insurance_resolved", claim=claim_id,
                            outcome=resolution.outcome,
                            slashed=str(resolution.slashed))
        for policy_id in sorted(self.insurance.policies):
            policy = self.insurance.policies[policy_id]
            if policy.status.value == "active" and at.height >= policy.expires_at \
                    and self.insurance.open_claim_for(policy_id) is None:
                self.insurance.expire_policy(self.ledger, policy_id, at)
                self._event("policy_expired", policy=policy_id)

    def _queue_reward(self, reward) -> None:
        deliver_at = self.height + self.scenario.bridge_delay_blocks
        self.bridge.append((deliver_at, {
            "kind": reward.kind, "vault": reward.vault, "chain": reward.chain,
            "account": reward.account.value, "amount": reward.amount}))
        self._event("reward_emitted", kind=reward.kind, vault=reward.vault,
                    account=reward.account.value, amount=str(reward.amount),
                    deliver_at=deliver_at)

    def _phase_bridge(self, height: int) -> None:
        due = [(t, r) for t, r in self.bridge if t <= height]
        self.bridge = [(t, r) for t, r in self.bridge if t > height]
        for _, reward in due:
            amount: FixedAmount = reward["amount"]
            self.ledger.mint(reward["account"], HOME_TOKEN, amount,
                             memo=f"reward:{reward['kind']}")
            self.supply.record_mint(amount)
            self._event("bridge_delivery", kind=reward["kind"],
                        vault=reward["vault"], account=reward["account"],
                        amount=str(amount))

    def _phase_tokenomics(self, height: int) -> None:
        emission = tokenomics.block_emission(self.supply_params.epsilon_rate, 1)
        if emission.raw > 0:
            self.ledger.mint(TREASURY, HOME_TOKEN, emission, memo="emission")
            self.supply.record_mint(emission)
        report = tokenomics.aggregate_vault_stats(
            list(self.registries.values()), self.ledger, self._mark_price)
        treasury_held = self.ledger.balance(TREASURY, HOME_TOKEN)
        target = tokenomics.target_supply(report.sum_vaulted_value,
                                          self.supply_params.s0)
        burned = tokenomics.burn_step(self.supply, self.supply_params,
                                      report.sum_vaulted_value,
                                      available=treasury_held)
        if burned.raw > 0:
            self.ledger.burn(TREASURY, HOME_TOKEN, burned, memo="supply-burn")
        self.trace.telemetry.append({
            "height": height,
            "emission": str(self.supply.block_minted),
            "burned": str(self.supply.block_burned),
            "current_supply": str(self.supply.current_supply),
            "target_supply": str(target),
        })

    # -- finalization ----------------------------------------------------------

    def mark_to_market(self, account: str) -> FixedAmount:
        """Account value in numeraire units: cash plus spot-valued holdings."""
        numeraire = self.scenario.numeraire
        total = self.ledger.balance(account, numeraire)
        for pool in self.pools.values():
            if pool.token_y == numeraire and pool.reserve_x.raw > 0:
                held = self.ledger.balance(account, pool.token_x)
                if held.raw > 0:
                    total = total + held * market.spot_price(pool)
        return total

    def finalize(self) -> None:
        self.trace.final_state = {
            "height": self.height,
            "balances": self.ledger.snapshot()["balances"],
            "supply": self.ledger.snapshot()["supply"],
            "pools": {
                pid: {"reserve_x": str(p.reserve_x), "reserve_y": str(p.reserve_y),
                      "token_x": p.token_x, "token_y": p.token_y,
                      "fee_bps": p.fee_bps}
                for pid, p in sorted(self.pools.items())},
            "vaults": {chain: registry.snapshot()
                       for chain, registry in sorted(self.registries.items())},
            "perps": {vid: book.snapshot()
                      for vid, book in sorted(self.perp_books.items())},
            "insurance": self.insurance.snapshot(),
            "home_token_supply": str(self.supply.current_supply),
            "total_penalties": str(self.total_penalties),
            "failed_events": self.trace.failed_events,
        }


def run_scenario(doc: dict, blocks: Optional[int] = None,
                 seed: Optional[int] = None) -> tuple[Simulation, Trace]:
    """Load, run, and finalize a scenario document in one call."""
    if seed is not None:
        doc = dict(doc)
        doc["seed"] = seed
    scenario = load_scenario(doc)
    sim = Simulation(scenario)
    trace = sim.run(blocks)
    return sim, trace
