import pytest

from atomic_loans.adversary import DepthError, MAX_DEPTH, enumerate_adversarial, safety_violations
from atomic_loans.scenarios import enumeration_base, run_scenario

# Splits where the seizable part alone covers principal + interest + fee.
SAFE_SPLITS = [(11_000, 4_000), (12_000, 3_000)]


@pytest.fixture(scope="module")
def bob_default():
    return enumerate_adversarial(honest=["bob"], depth=12)


def test_all_honest_is_clean():
    res = enumerate_adversarial(honest=["alice", "bob", "charlie"], depth=12)
    assert res.ok
    assert res.runs == 1


def test_honest_alice_depth_12():
    res = enumerate_adversarial(honest=["alice"], depth=12)
    assert res.violations == []
    assert res.states > 1


@pytest.mark.parametrize("seizable, refundable", SAFE_SPLITS)
def test_honest_bob_with_covering_seizable(seizable, refundable):
    base = enumeration_base(seizable=seizable, refundable=refundable)
    res = enumerate_adversarial(base, honest=["bob"], depth=12)
    assert res.violations == []


@pytest.mark.xfail(strict=True, reason="with 6000 seizable, a default plus a failed auction "
                   "leaves Bob 4000 short of his principal")
def test_honest_bob_default_split(bob_default):
    assert bob_default.violations == []


def test_default_split_violation_is_failed_auction(bob_default):
    assert {v.predicate for v in bob_default.violations} == {"lender-safety"}
    assert {v.detail for v in bob_default.violations} == {"value change -4000 BCoin"}
    first = bob_default.violations[0]
    assert len(first.decisions) == 2
    assert first.decisions[0] == ("alice", "repay", "late")


def test_violation_replays_as_scenario(bob_default):
    base = enumeration_base()
    v = bob_default.violations[0]
    s = v.as_scenario(base)
    _, out = run_scenario(s)
    assert out.conservation
    assert out.terminal == "SeizureFallback"
    assert out.deltas["bob"] == {"ACoin": 6000, "BCoin": -10000}
    found = safety_violations(base, out, {"bob"})
    assert [(p, who, d) for p, who, d in found] == [(v.predicate, v.party, v.detail)]


def test_violations_sorted_and_unique(bob_default):
    vs = bob_default.violations
    assert len(set(vs)) == len(vs)
    assert [len(v.decisions) for v in vs] == sorted(len(v.decisions) for v in vs)


def test_depth_zero_is_the_honest_run():
    res = enumerate_adversarial(honest=[], depth=0)
    assert res.ok and res.runs == 1


def test_depth_cap():
    with pytest.raises(DepthError):
        enumerate_adversarial(depth=MAX_DEPTH + 1)
    with pytest.raises(DepthError):
        enumerate_adversarial(depth=-1)


def test_unknown_honest_party():
    with pytest.raises(ValueError):
        enumerate_adversarial(honest=["mallory"], depth=1)


def test_small_depth_explores_branches():
    res = enumerate_adversarial(honest=["bob"], depth=1)
    assert res.runs > 1
    # one deviation is not enough to hurt Bob: a default alone still meets a standing bid
    assert res.ok
