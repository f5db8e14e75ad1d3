"""Baseline cross-chain swap.

Alice locks ACoin for T behind her secret; Bob locks BCoin for T/2 behind
the same hash. Alice's redeem on BCoin publishes the preimage, which Bob
then reuses to take the ACoin.
"""

from atomic_loans.scenarios import get_scenario, run_scenario

s = get_scenario("atomic_swap_baseline")
trace, outcome = run_scenario(s)

terms = next(e for e in trace.events if e.kind == "swap-terms").detail
print(f"ACoin lock {terms['acoin_lock']}s, BCoin lock {terms['bcoin_lock']}s")

for e in trace.events:
    if e.kind in ("secret-revealed", "tx-accepted", "transfer"):
        what = e.detail.get("memo") or e.detail.get("label")
        print(f"  seq {e.seq:>2}  {e.chain:<5} {e.actor:<6} {e.kind:<16} {what}")

print("deltas:", {p: outcome.deltas[p] for p in ("alice", "bob")})
