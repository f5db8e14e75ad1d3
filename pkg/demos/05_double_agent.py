"""Alice bids under a pseudonym and withholds A2. Bob still gets paid."""

from atomic_loans.scenarios import get_scenario, run_scenario

trace, out = run_scenario(get_scenario("double_agent_alice"))
for e in trace.events:
    if e.kind in ("secret-revealed", "claim") or e.detail.get("op") == "reveal_counterparty_secret":
        label = e.detail.get("label") or e.detail.get("op") or e.detail.get("amount")
        print(f"seq {e.seq:>2}  {e.chain:<5} {e.actor:<8} {e.kind:<16} {label}")
print("bob:", out.deltas["bob"], " alice+charlie:", out.value_delta("alice", "charlie"))
