import random

import pytest

from atomic_loans.chain_sim import Clock, ContractChain, UtxoChain, pay_to
from atomic_loans.collateral import CollateralParams, PeriodTimeline
from atomic_loans.primitives import KeyPair, commit, generate_secret
from atomic_loans.trace import Tracer

T0 = 1_700_000_000
DAY = 86_400


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def keys(rng):
    return {name: KeyPair.generate(rng) for name in ("alice", "bob", "charlie")}


@pytest.fixture
def secrets(rng):
    return {label: generate_secret(rng) for label in ("A1", "A2", "B1", "B2", "C")}


@pytest.fixture
def timeline():
    return PeriodTimeline(
        withdraw_deadline=T0 + 2 * DAY,
        loan_expiry=T0 + 30 * DAY,
        bidding_end=T0 + 33 * DAY,
        settlement_deadline=T0 + 35 * DAY,
        seizure_end=T0 + 45 * DAY,
    )


@pytest.fixture
def params(keys, secrets, timeline):
    h = {k: commit(v) for k, v in secrets.items()}
    return CollateralParams(
        alice_pub=keys["alice"].public, bob_pub=keys["bob"].public,
        h_A1=h["A1"], h_A2=h["A2"], h_B1=h["B1"], h_B2=h["B2"],
        seizable_value=6000, refundable_value=9000, timeline=timeline)


@pytest.fixture
def tracer():
    return Tracer()


@pytest.fixture
def clock():
    return Clock(T0)


@pytest.fixture
def acoin(clock, tracer, keys):
    chain = UtxoChain(clock, tracer)
    for name, k in keys.items():
        chain.names[k.public] = name
    chain.mint(pay_to(keys["alice"].public), 15000)
    return chain


@pytest.fixture
def bcoin(clock, tracer):
    chain = ContractChain(clock, tracer)
    chain.mint("alice", 1000)
    chain.mint("bob", 10000)
    chain.mint("charlie", 20000)
    chain.mint("dave", 20000)
    return chain


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
