"""Acceptance gate: one PASS/FAIL line per criterion, printed in the terminal summary.

Run directly (``python tests/test_acceptance.py``) for the lines alone.
"""

import time

import pytest

from atomic_loans.adversary import enumerate_adversarial
from atomic_loans.cli import main
from atomic_loans.scenarios import builtin_scenarios, get_scenario, run_scenario

RESULTS: dict = {}


def report(n, ok, detail):
    RESULTS[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, detail


@pytest.fixture(scope="module")
def runs():
    return {s.label: run_scenario(s) for s in builtin_scenarios()}


def _first(events, pred):
    return next((e.seq for e in events if pred(e)), None)


def _revealed(label, actor, chain=None):
    def p(e):
        return (e.kind in ("secret-revealed", "secret-shared") and e.detail["label"] == label
                and e.actor == actor and (chain is None or e.chain == chain))
    return p


def _spent_with(label, actor):
    return lambda e: e.kind == "tx-accepted" and e.actor == actor and label in e.detail["preimages"]


def _call_uses(label, actor, kind="call"):
    return lambda e: e.kind == kind and e.actor == actor and label in e.detail.get("uses", [])


# secret -> (scenario, who reveals, how it is used)
SECRET_ROWS = {
    "A1": ("default_no_bids_seizure", _revealed("A1", "alice", "BCoin"), _spent_with("A1", "bob")),
    "A2": ("default_bidding", _revealed("A2", "alice", "BCoin"), _spent_with("A2", "charlie")),
    "B1": ("happy_path", _revealed("B1", "bob"), _call_uses("B1", "alice")),
    "B2": ("default_bidding", _revealed("B2", "bob", "BCoin"), _spent_with("B2", "charlie")),
    "C": ("default_bidding", _revealed("C", "charlie", "BCoin"), _call_uses("C", "bob", "claim")),
}


def test_criterion_1_secret_lifecycle():
    bad, slowest = [], 0.0
    for label, (name, revealed, used) in SECRET_ROWS.items():
        t = time.perf_counter()
        trace, _ = run_scenario(get_scenario(name))
        slowest = max(slowest, time.perf_counter() - t)
        r, u = _first(trace.events, revealed), _first(trace.events, used)
        if r is None or u is None or not r < u:
            bad.append(f"{label} in {name}: reveal={r} use={u}")
    ok = not bad and slowest < 1.0
    report(1, ok, "; ".join(bad) or f"all five secrets revealed before use, slowest run {slowest:.2f}s")


def test_criterion_2_swap_baseline(runs):
    trace, out = runs["atomic_swap_baseline"]
    ev = trace.events
    terms = next(e for e in ev if e.kind == "swap-terms").detail
    half = 2 * terms["bcoin_lock"] == terms["acoin_lock"]
    alice_redeem = _first(ev, _revealed("A", "alice", "BCoin"))
    bob_redeem = _first(ev, _spent_with("A", "bob"))
    chain_ok = alice_redeem is not None and bob_redeem is not None and alice_redeem < bob_redeem
    swapped = out.deltas["alice"] == {"ACoin": -1000, "BCoin": 1000} and \
        out.deltas["bob"] == {"ACoin": 1000, "BCoin": -1000}
    report(2, half and chain_ok and swapped,
           f"locks {terms['acoin_lock']}s / {terms['bcoin_lock']}s, "
           f"alice reveals at seq {alice_redeem}, bob redeems at seq {bob_redeem}")


def test_criterion_3_happy_path(runs):
    _, out = runs["happy_path"]
    bob, alice = out.deltas["bob"]["BCoin"], out.deltas["alice"]["ACoin"]
    report(3, out.terminal == "Closed" and bob == 500 and alice == 0,
           f"terminal {out.terminal}, bob {bob:+d} BCoin, alice {alice:+d} ACoin")


def test_criterion_4_default_bidding(runs):
    trace, out = runs["default_bidding"]
    claims = {e.actor: e.detail["amount"] for e in trace.events if e.kind == "claim"}
    liq = [e for e in trace.events if e.kind == "tx-accepted" and e.detail["memo"] == "collateral-liquidation"]
    collateral = next(e for e in trace.events if e.kind == "tx-accepted"
                      and e.detail["memo"] == "lock-collateral").detail["outputs"]
    owns_both = (len(liq) == 1
                 and {i["outpoint"] for i in liq[0].detail["inputs"]} == {o["outpoint"] for o in collateral}
                 and all(o["owner"] == "charlie" for o in liq[0].detail["outputs"])
                 and out.balances["charlie"]["ACoin"] == 15000)
    revealed = {"A2", "B2"} <= set(out.revealed["ACoin"])
    ok = claims == {"bob": 11000, "alice": 1000} and owns_both and revealed
    report(4, ok, f"claims {claims}, charlie holds {out.balances['charlie']['ACoin']} ACoin, "
                  f"revealed on ACoin {out.revealed['ACoin']}")


def test_criterion_5_double_agent(runs):
    def bob_claim(name):
        return sum(e.detail["amount"] for e in runs[name][0].events if e.kind == "claim" and e.actor == "bob")
    honest, agent = bob_claim("default_bidding"), bob_claim("double_agent_alice")
    counter = any(e.kind == "call" and e.detail.get("op") == "reveal_counterparty_secret"
                  for e in runs["double_agent_alice"][0].events)
    report(5, honest == agent and counter,
           f"bob claims {agent} with a double agent vs {honest} honest; counter-reveal used: {counter}")


def test_criterion_6_seizure(runs):
    parts, ok = [], True
    for name in ("default_no_bids_seizure", "withheld_signatures"):
        trace, out = runs[name]
        tl = get_scenario(name).timeline
        spends = [e for e in trace.events if e.kind == "tx-accepted" and e.actor == "bob"]
        good = (len(spends) == 1
                and [i["value"] for i in spends[0].detail["inputs"]] == [6000]
                and spends[0].detail["preimages"] == ["A1"]
                and tl.bidding_end <= spends[0].time < tl.seizure_end
                and out.deltas["bob"]["ACoin"] == 6000
                and out.deltas["alice"]["ACoin"] == -6000   # 9000 of the 15000 locked came back
                and out.deltas.get("charlie", {"ACoin": 0, "BCoin": 0}) == {"ACoin": 0, "BCoin": 0})
        ok = ok and good
        when = spends[0].time - tl.bidding_end if spends else None
        parts.append(f"{name}: bob seizes {out.deltas['bob']['ACoin']} at bidding_end+{when}s, "
                     f"alice recovers {15000 + out.deltas['alice']['ACoin']}")
    report(6, ok, "; ".join(parts))


def test_criterion_7_liveness(runs):
    bad = []
    for s in builtin_scenarios():
        trace, out = runs[s.label]
        end = trace.events[-1].time
        past = s.kind == "swap" or end >= s.timeline.seizure_end + 1
        if out.liveness or not past:
            bad.append(f"{s.label}: {out.liveness or 'clock stopped early'}")
    report(7, not bad, "; ".join(bad) or f"{len(runs)} scenarios, no stranded honest funds")


@pytest.fixture(scope="module")
def enumerations():
    out = {}
    for honest, depth in ((("bob",), 12), (("alice",), 12), ((), 4)):
        t = time.perf_counter()
        res = enumerate_adversarial(honest=honest, depth=depth)
        out[honest] = (res, time.perf_counter() - t)
    return out


def test_criterion_8_conservation(runs, enumerations):
    builtin = all(out.conservation for _, out in runs.values())
    enum_bad = [v for res, _ in enumerations.values() for v in res.violations if v.predicate == "conservation"]
    total = sum(res.runs for res, _ in enumerations.values())
    report(8, builtin and not enum_bad,
           f"builtins conserved: {builtin}; {total} enumerated runs, {len(enum_bad)} conservation breaks")


def test_criterion_9_enumeration(enumerations):
    parts, ok = [], True
    for honest in (("bob",), ("alice",)):
        res, secs = enumerations[honest]
        ok = ok and res.ok and secs < 60
        parts.append(f"honest {honest[0]}: {len(res.violations)} violations in {secs:.1f}s")
        if res.violations:
            v = res.violations[0]
            parts.append(f"e.g. {v.detail} after {', '.join(f'{p}.{m}={o}' for p, m, o in v.decisions)}")
    report(9, ok, "; ".join(parts))


def test_criterion_10_replay(runs, tmp_path):
    bad = []
    for s in builtin_scenarios():
        first = runs[s.label][0].dumps()
        if run_scenario(get_scenario(s.label))[0].dumps() != first:
            bad.append(f"{s.label}: traces differ")
        path = tmp_path / f"{s.label}.jsonl"
        path.write_text(first, encoding="utf-8")
        if main(["validate", "--trace", str(path)]) != 0:
            bad.append(f"{s.label}: validate failed")
    report(10, not bad, "; ".join(bad) or f"{len(runs)} scenarios byte-identical, validate exit 0")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
