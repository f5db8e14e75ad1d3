"""Exhaustive search over dishonest choices by everyone except one party."""

from atomic_loans.adversary import enumerate_adversarial
from atomic_loans.scenarios import enumeration_base, run_scenario

for honest in ("alice", "bob"):
    res = enumerate_adversarial(honest=[honest], depth=12)
    print(f"honest {honest}: {res.states} states, {res.runs} complete runs, {len(res.violations)} violations")
    for v in res.violations[:3]:
        print("   ", v.predicate, v.detail, v.decisions)

# Replay the first violation as an ordinary scenario.
res = enumerate_adversarial(honest=["bob"], depth=4)
if res.violations:
    _, out = run_scenario(res.violations[0].as_scenario(enumeration_base()))
    print("replayed:", out.terminal, out.deltas["bob"])

# With a seizable part that covers the debt by itself, Bob is safe.
safe = enumeration_base(seizable=11_000, refundable=4_000)
print("bob with 11000 seizable:", len(enumerate_adversarial(safe, ["bob"], 12).violations), "violations")
