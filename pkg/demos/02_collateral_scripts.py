"""The two collateral outputs and which spend branches are live over time."""

import random

from atomic_loans.chain_sim import Clock, UtxoChain, pay_to
from atomic_loans.collateral import CollateralParams, PeriodTimeline, live_branches, lock_collateral, spend_collateral
from atomic_loans.primitives import KeyPair, commit, generate_secret

DAY = 86_400
T0 = 1_700_000_000
rng = random.Random(5)
alice, bob = KeyPair.generate(rng), KeyPair.generate(rng)
secrets = {k: generate_secret(rng) for k in ("A1", "A2", "B1", "B2")}
tl = PeriodTimeline(T0 + 2 * DAY, T0 + 30 * DAY, T0 + 33 * DAY, T0 + 35 * DAY, T0 + 45 * DAY)
params = CollateralParams(alice.public, bob.public,
                          *(commit(secrets[k]) for k in ("A1", "A2", "B1", "B2")),
                          seizable_value=6000, refundable_value=9000, timeline=tl)

clock = Clock(T0)
acoin = UtxoChain(clock)
acoin.mint(pay_to(alice.public), 15_000)
seizable, refundable = lock_collateral(acoin, alice, params)

names = "abcd"
for label, t in [("loan period", T0 + DAY), ("bidding period", tl.loan_expiry + DAY),
                 ("seizure period", tl.bidding_end + DAY), ("after seizure_end", tl.seizure_end)]:
    live = [names[i] for i in live_branches(acoin.utxos[seizable].condition, t)]
    live_r = [names[i] for i in live_branches(acoin.utxos[refundable].condition, t)]
    print(f"{label:<20} seizable: {live}  refundable: {live_r}")

# Alice defaulted: in the seizure period Bob takes the seizable part with A1,
# and Alice takes back the refundable part with her own key.
clock.advance(tl.bidding_end)
spend_collateral(acoin, seizable, "c", bob.public, preimages=[secrets["A1"]], signers=[bob], actor="bob")
spend_collateral(acoin, refundable, "c", alice.public, signers=[alice], actor="alice")
print("bob holds", acoin.holdings(bob.public), "alice holds", acoin.holdings(alice.public))
