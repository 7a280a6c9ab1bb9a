"""Monitors, risk signals, intervention planners, and the intent/solver
system."""

import pytest

from rugsim.core import AccountId, BlockTime, ParameterError, amt
from rugsim.detection import (
    AuxMonitor,
    IntentAction,
    IntentBook,
    IntentStatus,
    PoolMonitor,
    SignalKind,
    SolverBid,
    TooLateError,
    plan_backrun,
    plan_frontrun,
    plan_sandwich,
    solver_step,
)
from rugsim.market import DrainEvent, PoolState, pool_swap

ALICE = AccountId.solo("alice")


def mk_pool(rx=1000, ry=1000, fee=0):
    return PoolState("p", "RUG", "USD", amt(rx), amt(ry), fee_bps=fee)


def mk_drain(t_rug=800, t_total=1000, submitted=0, executes=3):
    return DrainEvent("p", AccountId.solo("mallory"), amt(t_rug), amt(t_total),
                      BlockTime(submitted, "a"), BlockTime(executes, "a"))


# -- observation ---------------------------------------------------------------


def test_observe_liquidity_drop():
    monitor = PoolMonitor("p", drop_threshold=amt("0.2"))
    assert monitor.observe(1, amt(1000)) is None
    signal = monitor.observe(2, amt(400))
    assert signal.kind is SignalKind.LIQUIDITY_DROP
    assert signal.magnitude == amt("0.6")


def test_observe_quiet_cases():
    monitor = PoolMonitor("p", drop_threshold=amt("0.2"))
    monitor.observe(1, amt(1000))
    assert monitor.observe(2, amt(1000)) is None   # unchanged
    assert monitor.observe(3, amt(950)) is None    # 5% < 20%
    assert monitor.observe(4, amt(2000)) is None   # inflow


def test_observe_requires_increasing_heights():
    monitor = PoolMonitor("p", drop_threshold=amt("0.2"))
    monitor.observe(5, amt(1000))
    with pytest.raises(ParameterError):
        monitor.observe(5, amt(900))


def test_aux_monitor_signals():
    aux = AuxMonitor(mint_spike_factor=amt(3), wallet_outflow_fraction=amt("0.5"),
                     volume_spike_factor=amt(4))
    zero = amt(0)
    assert aux.scan(1, zero, zero, zero, zero, zero) == []
    # set a trailing baseline of 10 mint / 10 volume
    aux.scan(2, amt(10), zero, zero, amt(10), zero)
    signals = aux.scan(3, amt(100), zero, zero, amt(10), zero)
    assert [s.kind for s in signals] == [SignalKind.MINT_SPIKE]
    aux2 = AuxMonitor(amt(3), amt("0.5"), amt(4))
    aux2.scan(1, zero, zero, zero, amt(10), zero)
    signals = aux2.scan(2, zero, zero, zero, amt(50), amt(-1))
    assert [s.kind for s in signals] == [SignalKind.VOLUME_ANOMALY]
    aux3 = AuxMonitor(amt(3), amt("0.5"), amt(4))
    signals = aux3.scan(1, zero, amt(80), amt(100), zero, zero)
    assert [s.kind for s in signals] == [SignalKind.WALLET_OUTFLOW]


# -- planners --------------------------------------------------------------------


def test_frontrun_quotes_predrain_reserves():
    plan = plan_frontrun(mk_drain(), mk_pool(), "RUG", ALICE, amt(100),
                         now=1, drain_priority=0)
    assert plan.leg.quoted_out == amt("90.909090909")
    assert plan.priority > 0


def test_frontrun_empty_and_late():
    assert plan_frontrun(mk_drain(), mk_pool(), "RUG", ALICE, amt(0), 1, 0) is None
    with pytest.raises(TooLateError):
        plan_frontrun(mk_drain(executes=3), mk_pool(), "RUG", ALICE, amt(10), 3, 0)


def test_sandwich_profitable_on_large_drain():
    plan = plan_sandwich(mk_drain(t_rug=800), mk_pool(), "RUG", ALICE,
                         amt(50), now=1, drain_priority=0)
    assert plan is not None
    assert plan.expected_profit.raw > 0
    assert plan.pre.priority > 0 > plan.post.priority
    # replay: pre swap, drain swap, buy back -> pocket exactly the plan profit
    pool = mk_pool()
    pre_out, pool = pool_swap(pool, "RUG", amt(50))
    _, pool = pool_swap(pool, "RUG", amt(800))
    back, pool = pool_swap(pool, "USD", plan.post.leg.amount_in)
    assert back >= amt(50)
    assert pre_out - plan.post.leg.amount_in == plan.expected_profit


def test_sandwich_withheld_cases():
    assert plan_sandwich(mk_drain(t_rug=0, t_total=1000), mk_pool(), "RUG",
                         ALICE, amt(50), 1, 0) is None
    assert plan_sandwich(mk_drain(), mk_pool(), "RUG", ALICE, amt(0), 1, 0) is None
    with pytest.raises(TooLateError):
        plan_sandwich(mk_drain(executes=2), mk_pool(), "RUG", ALICE, amt(50), 2, 0)


def test_backrun_buys_the_dip():
    drain = mk_drain(executes=3)
    _, pool = pool_swap(mk_pool(), "RUG", amt(800))  # the drain just happened
    plan = plan_backrun(drain, pool, "RUG", ALICE, budget=amt(40),
                        value_cap=amt(25), now=3)
    assert plan.leg.input_token == "USD"
    assert plan.leg.amount_in == amt(25)  # capped
    assert plan.meta["salvage"] is True
    assert plan_backrun(drain, pool, "RUG", ALICE, amt(0), amt(25), now=3) is None


# -- intents -----------------------------------------------------------------------


def mk_intent(book, theta_price="0.5", theta_liq="0.3"):
    return book.register(ALICE, "p", "RUG", amt(theta_price), amt(theta_liq),
                         IntentAction.EXIT_TO_NUMERAIRE,
                         price_ref=amt(1), liquidity_ref=amt(1000))


def test_intent_threshold_validation():
    book = IntentBook()
    with pytest.raises(ParameterError):
        mk_intent(book, theta_price="1")
    with pytest.raises(ParameterError):
        mk_intent(book, theta_liq="0")


def test_intent_triggers_on_price():
    book = IntentBook()
    intent = mk_intent(book)
    bids = [SolverBid(AccountId.solo("sol1"), 30)]
    quiet = solver_step(book, {"RUG": amt("0.6")}, {"p": amt(1000)}, 5, bids)
    assert quiet == [] and intent.status is IntentStatus.PENDING
    hits = solver_step(book, {"RUG": amt("0.4")}, {"p": amt(1000)}, 6, bids)
    assert len(hits) == 1 and hits[0].solver.value == "sol1"
    assert intent.status is IntentStatus.EXECUTED


def test_intent_triggers_on_liquidity():
    book = IntentBook()
    mk_intent(book)
    bids = [SolverBid(AccountId.solo("sol1"), 30)]
    hits = solver_step(book, {"RUG": amt(1)}, {"p": amt(200)}, 5, bids)
    assert len(hits) == 1


def test_intents_are_one_shot():
    book = IntentBook()
    mk_intent(book)
    bids = [SolverBid(AccountId.solo("sol1"), 30)]
    assert len(solver_step(book, {"RUG": amt("0.1")}, {"p": amt(1000)}, 5, bids)) == 1
    assert solver_step(book, {"RUG": amt("0.1")}, {"p": amt(1000)}, 6, bids) == []


def test_solver_auction_lowest_fee_then_id():
    book = IntentBook()
    mk_intent(book)
    cheap = SolverBid(AccountId.solo("zed"), 10)
    pricey = SolverBid(AccountId.solo("ann"), 20)
    [hit] = solver_step(book, {"RUG": amt("0.1")}, {"p": amt(1000)}, 5,
                        [pricey, cheap])
    assert hit.solver.value == "zed" and hit.fee_bps == 10
    book2 = IntentBook()
    mk_intent(book2)
    [hit2] = solver_step(book2, {"RUG": amt("0.1")}, {"p": amt(1000)}, 5,
                         [SolverBid(AccountId.solo("bob"), 10),
                          SolverBid(AccountId.solo("ann"), 10)])
    assert hit2.solver.value == "ann"  # fee tie: lower id wins


def test_backrun_dust_capped_by_quantum_rules():
    drain = mk_drain(executes=3)
    # a quantum of numeraire buys no output at this ratio: plan withheld
    pool = mk_pool("0.00000001", 1000)
    plan = plan_backrun(drain, pool, "RUG", ALICE, budget=amt("0.000000001"),
                        value_cap=amt("0.000000001"), now=3)
    assert plan is None
