"""Default outcomes side by side: a settled auction versus no bids at all."""

from atomic_loans.scenarios import get_scenario, run_scenario

for name in ("default_bidding", "default_no_bids_seizure", "withheld_signatures", "winner_walks_away"):
    _, out = run_scenario(get_scenario(name))
    row = ", ".join(f"{p} {d['ACoin']:+d}A/{d['BCoin']:+d}B"
                    for p, d in out.deltas.items() if p in ("alice", "bob", "charlie", "dave"))
    print(f"{name:<26} {out.terminal:<16} {row}")

# The interesting incentive question: when does Alice prefer an auction?
_, auction = run_scenario(get_scenario("default_bidding"))
_, seizure = run_scenario(get_scenario("default_no_bids_seizure"))
print()
print("alice value change, auction at 12000:", auction.value_delta("alice"))
print("alice value change, seizure:        ", seizure.value_delta("alice"))
