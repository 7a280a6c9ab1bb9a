"""Run outputs: the canonical JSONL event log, per-block telemetry CSV,
terminal state snapshot, and the 64-bit FNV-1a trace hash over canonical
event bytes. Also the independent verifier that replays a written trace.

Canonical form: one JSON object per line, keys sorted, compact separators,
all amounts as decimal strings. Identical (scenario, engine) pairs produce
identical bytes, hence identical hashes.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import FNV_OFFSET, FixedAmount, ZERO, amt, fnv1a_64

EVENTS_FILE = "events.jsonl"
TELEMETRY_FILE = "telemetry.csv"
STATE_FILE = "state.json"
HASH_FILE = "hash.txt"

TELEMETRY_COLUMNS = ("height", "emission", "burned", "current_supply", "target_supply")


def canonical_line(event: dict) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":"))


@dataclass
class Trace:
    events: list[dict] = field(default_factory=list)
    telemetry: list[dict] = field(default_factory=list)
    initial_balances: dict = field(default_factory=dict)
    final_state: dict = field(default_factory=dict)
    failed_events: int = 0

    def record(self, event: dict) -> None:
        self.events.append(event)
        if event.get("type") == "failed":
            self.failed_events += 1

    def trace_hash(self) -> str:
        state = FNV_OFFSET
        for event in self.events:
            state = fnv1a_64(canonical_line(event).encode("utf-8") + b"\n", state)
        return f"{state:016x}"

    def write(self, out_dir: str) -> None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, EVENTS_FILE), "w", encoding="utf-8") as handle:
            for event in self.events:
                handle.write(canonical_line(event) + "\n")
        with open(os.path.join(out_dir, TELEMETRY_FILE), "w", encoding="utf-8",
                  newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=TELEMETRY_COLUMNS)
            writer.writeheader()
            for row in self.telemetry:
                writer.writerow(row)
        state = dict(self.final_state)
        state["initial_balances"] = self.initial_balances
        state["trace_hash"] = self.trace_hash()
        with open(os.path.join(out_dir, STATE_FILE), "w", encoding="utf-8") as handle:
            json.dump(state, handle, indent=2, sort_keys=True)
            handle.write("\n")
        with open(os.path.join(out_dir, HASH_FILE), "w", encoding="utf-8") as handle:
            handle.write(self.trace_hash() + "\n")


@dataclass
class VerifyResult:
    ok: bool
    error: Optional[str] = None
    first_violation: Optional[str] = None


def _replay_balances(initial: dict, events: Iterable[dict]) -> tuple[dict, Optional[str]]:
    """Replay ledger movements over the initial balances.

    Returns (balances, first_violating_event_line). Balances are keyed
    (account, token) -> FixedAmount.
    """
    balances: dict[tuple[str, str], FixedAmount] = {}
    for account, tokens in initial.items():
        for token, value in tokens.items():
            balances[(account, token)] = amt(value)

    def get(account: str, token: str) -> FixedAmount:
        return balances.get((account, token), ZERO)

    for event in events:
        kind = event.get("type")
        if kind not in ("mint", "burn", "transfer"):
            continue
        line = canonical_line(event)
        amount = amt(event["amount"])
        if amount.raw < 0:
            return balances, line
        token = event["token"]
        if kind == "mint":
            balances[(event["account"], token)] = get(event["account"], token) + amount
        elif kind == "burn":
            holding = get(event["account"], token)
            if holding < amount:
                return balances, line
            balances[(event["account"], token)] = holding - amount
        else:
            holding = get(event["src"], token)
            if holding < amount:
                return balances, line
            balances[(event["src"], token)] = holding - amount
            balances[(event["dst"], token)] = get(event["dst"], token) + amount
    return balances, None


def verify_trace(trace_dir: str) -> VerifyResult:
    """Recompute the hash and replay conservation from a written trace.

    Checks: hash.txt matches the event bytes; every burn/transfer is
    covered by the running balance; the replayed final balances equal the
    snapshot in state.json exactly.
    """
    paths = {name: os.path.join(trace_dir, name)
             for name in (EVENTS_FILE, STATE_FILE, HASH_FILE)}
    for name, path in paths.items():
        if not os.path.exists(path):
            return VerifyResult(False, error=f"missing {name}")

    events = []
    state = FNV_OFFSET
    with open(paths[EVENTS_FILE], "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            state = fnv1a_64(line.encode("utf-8") + b"\n", state)
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError:
                return VerifyResult(False, error="malformed event line",
                                    first_violation=line)
    recomputed = f"{state:016x}"

    with open(paths[HASH_FILE], "r", encoding="utf-8") as handle:
        recorded = handle.read().strip()
    if recorded != recomputed:
        return VerifyResult(False, error=f"hash mismatch: recorded {recorded}, "
                                         f"recomputed {recomputed}")

    with open(paths[STATE_FILE], "r", encoding="utf-8") as handle:
        snapshot = json.load(handle)
    if snapshot.get("trace_hash") != recomputed:
        return VerifyResult(False, error="state.json hash does not match events")

    balances, violation = _replay_balances(snapshot.get("initial_balances", {}), events)
    if violation is not None:
        return VerifyResult(False, error="conservation violated",
                            first_violation=violation)

    recorded_final = snapshot.get("balances", {})
    replayed_final: dict[str, dict[str, str]] = {}
    for (account, token), value in balances.items():
        if value.raw != 0:
            replayed_final.setdefault(account, {})[token] = str(value)
    if replayed_final != recorded_final:
        for account in sorted(set(replayed_final) | set(recorded_final)):
            if replayed_final.get(account) != recorded_final.get(account):
                return VerifyResult(
                    False, error="final balances do not match replay",
                    first_violation=f"account {account}: replay="
                                    f"{replayed_final.get(account)} "
                                    f"recorded={recorded_final.get(account)}")
    return VerifyResult(True)
