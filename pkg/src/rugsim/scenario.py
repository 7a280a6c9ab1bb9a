"""Scenario documents: the JSON-compatible configuration tree that fully
determines a simulation run, its eager validation, and the built-in
reference scenarios.

All monetary fields are decimal strings (or ints); bare JSON floats are
rejected so a scenario byte-for-byte determines the run. Validation errors
name the offending path, e.g. ``vaults[0].theta``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

from .core import FixedAmount, ParameterError, RugsimError, amt

KNOWN_AGENT_KINDS = ("creator", "retail", "whale", "lp", "solver",
                     "liquidator", "pegkeeper", "detector")
RECEIPT_KINDS = ("fungible", "non_fungible", "refungible")
PRICE_KINDS = ("scam", "catastrophic", "sentiment")
INTENT_ACTIONS = ("exit_to_numeraire", "swap_to_anticoin")


class ScenarioError(RugsimError):
    """A scenario document failed validation; the message names the path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _need(doc: dict, key: str, path: str) -> Any:
    if key not in doc:
        raise ScenarioError(f"{path}.{key}" if path else key, "missing required field")
    return doc[key]


def _as_amount(value: Any, path: str) -> FixedAmount:
    if isinstance(value, float):
        raise ScenarioError(path, "floats are not exact; use a decimal string")
    if not isinstance(value, (str, int)):
        raise ScenarioError(path, f"expected a decimal string or int, got {type(value).__name__}")
    try:
        return amt(value)
    except (ParameterError, Exception) as exc:
        raise ScenarioError(path, f"not a valid amount: {exc}") from None


def _as_int(value: Any, path: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(path, f"expected an integer, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise ScenarioError(path, f"must be >= {minimum}, got {value}")
    return value


def _as_str(value: Any, path: str, choices: Optional[tuple] = None) -> str:
    if not isinstance(value, str):
        raise ScenarioError(path, f"expected a string, got {type(value).__name__}")
    if choices and value not in choices:
        raise ScenarioError(path, f"expected one of {choices}, got {value!r}")
    return value


@dataclass
class Scenario:
    """Validated scenario, still close to the raw document shape; the
    engine materializes module objects from it."""

    doc: dict
    seed: int
    blocks: int
    bridge_delay_blocks: int
    home_chain: str
    numeraire: str
    chains: list[str]
    tokens: list[dict]
    accounts: list[dict]
    pools: list[dict]
    vaults: list[dict]
    tokenomics: dict
    perps: Optional[dict]
    detection: dict
    rugproof: Optional[dict]
    insurance: Optional[dict]
    agents: list[dict]
    intents: list[dict] = field(default_factory=list)


def load_scenario(doc: dict) -> Scenario:
    """Validate a scenario document eagerly; every module invariant that
    can be checked statically is checked here, by path."""
    if not isinstance(doc, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    seed = _as_int(_need(doc, "seed", ""), "seed", minimum=0)
    blocks = _as_int(_need(doc, "blocks", ""), "blocks", minimum=1)
    bridge_delay = _as_int(doc.get("bridge_delay_blocks", 1), "bridge_delay_blocks", 0)
    home_chain = _as_str(_need(doc, "home_chain", ""), "home_chain")
    numeraire = _as_str(_need(doc, "numeraire", ""), "numeraire")

    chains = _need(doc, "chains", "")
    if not isinstance(chains, list) or not chains:
        raise ScenarioError("chains", "expected a non-empty list of chain ids")
    chains = [_as_str(c, f"chains[{i}]") for i, c in enumerate(chains)]
    if home_chain not in chains:
        raise ScenarioError("home_chain", f"{home_chain!r} is not in chains")
    if len(set(chains)) != len(chains):
        raise ScenarioError("chains", "duplicate chain ids")

    tokens = []
    token_ids = {numeraire}
    for i, entry in enumerate(doc.get("tokens", [])):
        path = f"tokens[{i}]"
        token_id = _as_str(_need(entry, "id", path), f"{path}.id")
        if token_id in token_ids:
            raise ScenarioError(f"{path}.id", f"duplicate token {token_id!r}")
        token_ids.add(token_id)
        chain = _as_str(_need(entry, "chain", path), f"{path}.chain")
        if chain not in chains:
            raise ScenarioError(f"{path}.chain", f"unknown chain {chain!r}")
        process = entry.get("price_process")
        if process is not None:
            ppath = f"{path}.price_process"
            kind = _as_str(_need(process, "kind", ppath), f"{ppath}.kind", PRICE_KINDS)
            _as_amount(_need(process, "p0", ppath), f"{ppath}.p0")
            for param in ("tau_rug", "lam", "alpha_sent", "epsilon_floor"):
                if param in process:
                    _as_amount(process[param], f"{ppath}.{param}")
            if kind == "scam" and "tau_rug" not in process:
                raise ScenarioError(f"{ppath}.tau_rug", "scam process needs tau_rug")
        tokens.append(entry)

    accounts = []
    account_ids = set()
    for i, entry in enumerate(doc.get("accounts", [])):
        path = f"accounts[{i}]"
        account_id = _as_str(_need(entry, "id", path), f"{path}.id")
        if account_id in account_ids:
            raise ScenarioError(f"{path}.id", f"duplicate account {account_id!r}")
        account_ids.add(account_id)
        if "owner" in entry:
            _as_str(entry["owner"], f"{path}.owner")
        for token, balance in entry.get("balances", {}).items():
            if token not in token_ids:
                raise ScenarioError(f"{path}.balances.{token}", f"unknown token {token!r}")
            value = _as_amount(balance, f"{path}.balances.{token}")
            if value.raw < 0:
                raise ScenarioError(f"{path}.balances.{token}", "negative balance")
        accounts.append(entry)

    pools = []
    pool_ids = set()
    for i, entry in enumerate(doc.get("pools", [])):
        path = f"pools[{i}]"
        pool_id = _as_str(_need(entry, "id", path), f"{path}.id")
        if pool_id in pool_ids:
            raise ScenarioError(f"{path}.id", f"duplicate pool {pool_id!r}")
        pool_ids.add(pool_id)
        chain = _as_str(_need(entry, "chain", path), f"{path}.chain")
        if chain not in chains:
            raise ScenarioError(f"{path}.chain", f"unknown chain {chain!r}")
        for side in ("token_x", "token_y"):
            _as_str(_need(entry, side, path), f"{path}.{side}")
        for side in ("reserve_x", "reserve_y"):
            value = _as_amount(_need(entry, side, path), f"{path}.{side}")
            if value.raw <= 0:
                raise ScenarioError(f"{path}.{side}", "reserves must be > 0")
        fee = _as_int(entry.get("fee_bps", 0), f"{path}.fee_bps", 0)
        if fee > 10000:
            raise ScenarioError(f"{path}.fee_bps", "fee above 100%")
        pools.append(entry)

    vaults = []
    vault_ids = set()
    for i, entry in enumerate(doc.get("vaults", [])):
        path = f"vaults[{i}]"
        vault_id = _as_str(_need(entry, "id", path), f"{path}.id")
        if vault_id in vault_ids:
            raise ScenarioError(f"{path}.id", f"duplicate vault {vault_id!r}")
        vault_ids.add(vault_id)
        chain = _as_str(_need(entry, "chain", path), f"{path}.chain")
        if chain not in chains:
            raise ScenarioError(f"{path}.chain", f"unknown chain {chain!r}")
        _as_str(_need(entry, "rugged_token", path), f"{path}.rugged_token")
        _as_str(entry.get("receipt_kind", "fungible"), f"{path}.receipt_kind",
                RECEIPT_KINDS)
        omega = _as_amount(_need(entry, "omega", path), f"{path}.omega")
        theta = _as_amount(_need(entry, "theta", path), f"{path}.theta")
        if theta <= omega:
            raise ScenarioError(f"{path}.theta",
                                f"burn reward {theta} must exceed deposit reward {omega}")
        lam = _as_amount(_need(entry, "penalty_lambda", path), f"{path}.penalty_lambda")
        if lam <= amt(1):
            raise ScenarioError(f"{path}.penalty_lambda", f"must be > 1, got {lam}")
        for key in ("penalty_k", "gamma_base", "delta_gamma"):
            value = _as_amount(_need(entry, key, path), f"{path}.{key}")
            if value.raw < 0:
                raise ScenarioError(f"{path}.{key}", "must be >= 0")
        vaults.append(entry)

    tk_path = "tokenomics"
    tokenomics = _need(doc, "tokenomics", "")
    for key in ("initial_supply", "s0", "epsilon_rate", "beta_burn", "kappa"):
        value = _as_amount(_need(tokenomics, key, tk_path), f"{tk_path}.{key}")
        if value.raw < 0:
            raise ScenarioError(f"{tk_path}.{key}", "must be >= 0")
    if _as_amount(tokenomics["kappa"], f"{tk_path}.kappa") > amt(1):
        raise ScenarioError(f"{tk_path}.kappa", "must be <= 1")

    perps = doc.get("perps")
    if perps is not None:
        path = "perps"
        for key in ("alpha_base", "l_min"):
            value = _as_amount(_need(perps, key, path), f"{path}.{key}")
            if value.raw <= 0:
                raise ScenarioError(f"{path}.{key}", "must be > 0")
        _as_int(_need(perps, "interval_blocks", path), f"{path}.interval_blocks", 1)
        for vault_id in perps.get("enabled_vaults", []):
            if vault_id not in vault_ids:
                raise ScenarioError(f"{path}.enabled_vaults", f"unknown vault {vault_id!r}")
        if "amm_pool" in perps and perps["amm_pool"] not in pool_ids:
            raise ScenarioError(f"{path}.amm_pool", f"unknown pool {perps['amm_pool']!r}")

    detection = doc.get("detection", {})
    for key in ("drop_threshold", "mint_spike_factor", "wallet_outflow_fraction",
                "volume_spike_factor"):
        if key in detection:
            _as_amount(detection[key], f"detection.{key}")

    agents = []
    seen_agent_accounts = set()
    for i, entry in enumerate(doc.get("agents", [])):
        path = f"agents[{i}]"
        kind = _as_str(_need(entry, "kind", path), f"{path}.kind")
        if kind not in KNOWN_AGENT_KINDS:
            raise ScenarioError(f"{path}.kind", f"unknown agent kind {kind!r}")
        account = _as_str(_need(entry, "account", path), f"{path}.account")
        if account not in account_ids:
            raise ScenarioError(f"{path}.account", f"unknown account {account!r}")
        if account in seen_agent_accounts:
            raise ScenarioError(f"{path}.account", f"duplicate agent for {account!r}")
        seen_agent_accounts.add(account)
        for j, step in enumerate(entry.get("script", [])):
            spath = f"{path}.script[{j}]"
            _as_int(_need(step, "block", spath), f"{spath}.block", 0)
            _as_str(_need(step, "op", spath), f"{spath}.op")
        agents.append(entry)

    intents = []
    for i, entry in enumerate(doc.get("intents", [])):
        path = f"intents[{i}]"
        owner = _as_str(_need(entry, "owner", path), f"{path}.owner")
        if owner not in account_ids:
            raise ScenarioError(f"{path}.owner", f"unknown account {owner!r}")
        if _need(entry, "pool", path) not in pool_ids:
            raise ScenarioError(f"{path}.pool", f"unknown pool {entry['pool']!r}")
        _as_str(_need(entry, "action", path), f"{path}.action", INTENT_ACTIONS)
        for key in ("theta_price", "theta_liquidity"):
            value = _as_amount(_need(entry, key, path), f"{path}.{key}")
            if not (0 < value.raw < 10**9):
                raise ScenarioError(f"{path}.{key}", "must be in (0, 1)")
        intents.append(entry)

    return Scenario(
        doc=doc, seed=seed, blocks=blocks, bridge_delay_blocks=bridge_delay,
        home_chain=home_chain, numeraire=numeraire, chains=chains,
        tokens=tokens, accounts=accounts, pools=pools, vaults=vaults,
        tokenomics=tokenomics, perps=perps, detection=detection,
        rugproof=doc.get("rugproof"), insurance=doc.get("insurance"),
        agents=agents, intents=intents)


def load_scenario_file(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ScenarioError("", f"not valid JSON: {exc}") from None
    return load_scenario(doc)


SCENARIO_SCHEMA = {
    "seed": "int >= 0: master seed for all randomness substreams",
    "blocks": "int >= 1: blocks to simulate on every chain (lockstep clock)",
    "bridge_delay_blocks": "int >= 0: blocks before satellite events reach the home chain",
    "home_chain": "chain id receiving emissions, rewards, and supply control",
    "numeraire": "token id of the liquid quote asset",
    "chains": ["chain id", "..."],
    "tokens": [{"id": "token id", "chain": "chain id",
                "price_process": {"kind": "scam|catastrophic|sentiment",
                                  "p0": "amount", "tau_rug": "amount",
                                  "lam": "amount", "alpha_sent": "amount",
                                  "epsilon_floor": "amount"}}],
    "accounts": [{"id": "account id", "owner": "beneficial owner (default: id)",
                  "balances": {"token id": "amount"}}],
    "pools": [{"id": "pool id", "chain": "chain id", "token_x": "token id",
               "token_y": "token id", "reserve_x": "amount", "reserve_y": "amount",
               "fee_bps": "int 0..10000"}],
    "vaults": [{"id": "vault id", "chain": "chain id", "rugged_token": "token id",
                "receipt_kind": "fungible|non_fungible|refungible",
                "omega": "amount", "theta": "amount (> omega)",
                "penalty_k": "amount", "penalty_lambda": "amount (> 1)",
                "gamma_base": "amount", "delta_gamma": "amount"}],
    "tokenomics": {"initial_supply": "amount", "s0": "amount",
                   "epsilon_rate": "amount", "beta_burn": "amount",
                   "kappa": "amount in (0, 1]"},
    "perps": {"enabled_vaults": ["vault id"], "alpha_base": "amount",
              "l_min": "amount", "interval_blocks": "int", "amm_pool": "pool id",
              "maintenance_fraction": "amount", "liquidator_deadline_blocks": "int",
              "liquidator_fee_fraction": "amount", "max_leverage": "amount",
              "revalue_collateral": "bool (default false): mark collateral live"},
    "detection": {"drop_threshold": "amount", "mint_spike_factor": "amount",
                  "wallet_outflow_fraction": "amount", "volume_spike_factor": "amount",
                  "protocol_priority_boost": "int: protective plans outbid drains by this",
                  "sandwich_treasury_fraction": "fraction of sandwich profit to treasury"},
    "rugproof": {"alpha_slash": "amount", "gamma_slash": "amount",
                 "claimant_share": "amount", "z_min": "amount",
                 "challenge_blocks": "int", "x_min": "amount"},
    "insurance": {"alpha_comp": "amount", "gamma_pen": "amount",
                  "escalation_bond_multiplier": "amount", "max_escalations": "int",
                  "tau_challenge": "int", "tau_vote": "int",
                  "escalation_window": "int", "x_min": "amount"},
    "agents": [{"kind": "|".join(KNOWN_AGENT_KINDS), "account": "account id",
                "script": [{"block": "int", "op": "op name", "...": "op args"}],
                "...": "kind-specific parameters"}],
    "intents": [{"owner": "account id", "pool": "pool id", "token": "token id",
                 "theta_price": "fraction (0,1)", "theta_liquidity": "fraction (0,1)",
                 "action": "exit_to_numeraire|swap_to_anticoin",
                 "solver_fee_bps": "int"}],
}


# -- built-in scenarios ----------------------------------------------------------


def reference_scenario(blocks: int = 200, seed: int = 42) -> dict:
    """A steady market on one satellite chain: slow catastrophic decay,
    noise traders, an LP, a peg keeper, and the supply controller."""
    return {
        "seed": seed,
        "blocks": blocks,
        "bridge_delay_blocks": 2,
        "home_chain": "home",
        "numeraire": "USDN",
        "chains": ["alpha", "home"],
        "tokens": [
            {"id": "RUG", "chain": "alpha",
             "price_process": {"kind": "catastrophic", "p0": "2", "lam": "0.001"}},
        ],
        "accounts": [
            {"id": "alice", "balances": {"RUG": "4000", "USDN": "2000"}},
            {"id": "bob", "balances": {"RUG": "4000", "USDN": "2000"}},
            {"id": "lp-1", "balances": {"RUG": "20000", "USDN": "40000"}},
            {"id": "keeper", "balances": {"USDN": "5000"}},
            {"id": "sol-1", "balances": {}},
            {"id": "guard", "balances": {"USDN": "1000"}},
        ],
        "pools": [
            {"id": "rug-usdn", "chain": "alpha", "token_x": "RUG", "token_y": "USDN",
             "reserve_x": "10000", "reserve_y": "20000", "fee_bps": 30},
            {"id": "anti-usdn", "chain": "alpha", "token_x": "anti:RUG@alpha",
             "token_y": "USDN", "reserve_x": "1000", "reserve_y": "10",
             "fee_bps": 30},
        ],
        "vaults": [
            {"id": "v-rug", "chain": "alpha", "rugged_token": "RUG",
             "receipt_kind": "fungible", "omega": "0.01", "theta": "0.02",
             "penalty_k": "1", "penalty_lambda": "2", "gamma_base": "0.05",
             "delta_gamma": "0.01"},
        ],
        "tokenomics": {"initial_supply": "1000000", "s0": "1000000",
                       "epsilon_rate": "5", "beta_burn": "500", "kappa": "0.25"},
        "detection": {"drop_threshold": "0.2", "mint_spike_factor": "3",
                      "wallet_outflow_fraction": "0.5", "volume_spike_factor": "4"},
        "agents": [
            {"kind": "retail", "account": "alice",
             "script": [{"block": 1, "op": "deposit", "vault": "v-rug", "amount": "1000"},
                        {"block": 5, "op": "burn", "vault": "v-rug", "amount": "200"}],
             "noise": {"pool": "rug-usdn", "prob": "0.25", "max_size": "5"}},
            {"kind": "retail", "account": "bob",
             "script": [{"block": 2, "op": "deposit", "vault": "v-rug", "amount": "1500"},
                        {"block": 30, "op": "withdraw", "vault": "v-rug", "amount": "100"}],
             "noise": {"pool": "rug-usdn", "prob": "0.25", "max_size": "5"}},
            {"kind": "lp", "account": "lp-1",
             "script": [{"block": 10, "op": "add_liquidity", "pool": "rug-usdn",
                         "dx": "1000", "dy": "auto"}]},
            {"kind": "pegkeeper", "account": "keeper", "pool": "anti-usdn",
             "vault": "v-rug", "budget": "200"},
            {"kind": "solver", "account": "sol-1", "fee_bps": 30},
            {"kind": "detector", "account": "guard", "protects": [],
             "sandwich_budget": "0", "backrun_budget": "0", "backrun_cap": "0"},
        ],
        "intents": [],
    }


def scam_scenario(seed: int = 42) -> dict:
    """The scripted scam rug: a three-block drain window, one user saved by
    an intent, one by front-run protection, and one left unprotected."""
    protected = {"RUG": "100", "USDN": "10"}
    return {
        "seed": seed,
        "blocks": 12,
        "bridge_delay_blocks": 1,
        "home_chain": "home",
        "numeraire": "USDN",
        "chains": ["alpha", "home"],
        "tokens": [
            {"id": "RUG", "chain": "alpha",
             "price_process": {"kind": "scam", "p0": "1", "tau_rug": "3"}},
        ],
        "accounts": [
            {"id": "intent-user", "balances": dict(protected)},
            {"id": "frontrun-user", "balances": dict(protected)},
            {"id": "unprotected", "balances": dict(protected)},
            {"id": "mallory", "balances": {"RUG": "800"}},
            {"id": "sol-1", "balances": {}},
            {"id": "guard", "balances": {"USDN": "500"}},
        ],
        "pools": [
            {"id": "rug-usdn", "chain": "alpha", "token_x": "RUG", "token_y": "USDN",
             "reserve_x": "1000", "reserve_y": "1000", "fee_bps": 0},
        ],
        "vaults": [
            {"id": "v-rug", "chain": "alpha", "rugged_token": "RUG",
             "receipt_kind": "fungible", "omega": "0.01", "theta": "0.02",
             "penalty_k": "0.5", "penalty_lambda": "2", "gamma_base": "0.05",
             "delta_gamma": "0.01"},
        ],
        "tokenomics": {"initial_supply": "1000000", "s0": "1000000",
                       "epsilon_rate": "5", "beta_burn": "500", "kappa": "0.25"},
        "detection": {"drop_threshold": "0.2", "mint_spike_factor": "3",
                      "wallet_outflow_fraction": "0.5", "volume_spike_factor": "4"},
        "agents": [
            {"kind": "creator", "account": "mallory",
             "script": [{"block": 4, "op": "drain", "pool": "rug-usdn",
                         "t_rug": "800", "t_total": "1000", "window": 3}]},
            {"kind": "solver", "account": "sol-1", "fee_bps": 30},
            {"kind": "detector", "account": "guard",
             "protects": ["frontrun-user"], "sandwich_budget": "0",
             "backrun_budget": "100", "backrun_cap": "50"},
        ],
        "intents": [
            {"owner": "intent-user", "pool": "rug-usdn", "token": "RUG",
             "theta_price": "0.5", "theta_liquidity": "0.3",
             "action": "exit_to_numeraire", "solver_fee_bps": 30},
        ],
    }
