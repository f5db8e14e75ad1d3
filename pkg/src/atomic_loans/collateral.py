"""The two ACoin collateral outputs (seizable and refundable) and their spend paths."""

from __future__ import annotations

from dataclasses import dataclass

from .chain_sim import (
    After,
    All,
    Any,
    Before,
    Condition,
    MultiSig2of2,
    OutPoint,
    PreimageOf,
    SignedBy,
    Transaction,
    TxIn,
    TxOut,
    TxRejected,
    UtxoChain,
    Witness,
    eval_condition,
    pay_to,
    sighash,
)
from .primitives import KeyPair, SecretHash, check_timestamp

# index of each branch inside the Any[...] of a collateral script
BRANCHES = {"a": 0, "b": 1, "c": 2, "d": 3}
BRANCH_NAMES = {
    "a": "repayment-refund",
    "b": "liquidation",
    "c": "seizure",
    "d": "last-resort-refund",
}


@dataclass(frozen=True)
class PeriodTimeline:
    """Epoch-second boundaries of the loan, bidding, seizure and refund periods.

    ``settlement_deadline`` falls inside the seizure window: the liquidation
    branch closes there and the winning bidder's refund opens there.
    """

    withdraw_deadline: int
    loan_expiry: int
    bidding_end: int
    settlement_deadline: int
    seizure_end: int

    def __post_init__(self):
        ts = (self.withdraw_deadline, self.loan_expiry, self.bidding_end,
              self.settlement_deadline, self.seizure_end)
        for t in ts:
            check_timestamp(t)
        if not all(a < b for a, b in zip(ts, ts[1:])):
            raise ValueError(
                "timeline must satisfy withdraw_deadline < loan_expiry < bidding_end "
                "< settlement_deadline < seizure_end")

    def period(self, now: int) -> str:
        if now < self.loan_expiry:
            return "loan"
        if now < self.bidding_end:
            return "bidding"
        if now < self.seizure_end:
            return "seizure"
        return "refund"

    def as_dict(self) -> dict:
        return {
            "withdraw_deadline": self.withdraw_deadline,
            "loan_expiry": self.loan_expiry,
            "bidding_end": self.bidding_end,
            "settlement_deadline": self.settlement_deadline,
            "seizure_end": self.seizure_end,
        }


@dataclass(frozen=True)
class CollateralParams:
    alice_pub: bytes
    bob_pub: bytes
    h_A1: SecretHash
    h_A2: SecretHash
    h_B1: SecretHash
    h_B2: SecretHash
    seizable_value: int
    refundable_value: int
    timeline: PeriodTimeline

    def __post_init__(self):
        if self.seizable_value <= 0 or self.refundable_value <= 0:
            raise ValueError("seizable and refundable values must both be positive")

    @property
    def total(self) -> int:
        return self.seizable_value + self.refundable_value


def _shared_branches(p: CollateralParams):
    t = p.timeline
    repayment_refund = All(SignedBy(p.alice_pub), PreimageOf(p.h_B1), PreimageOf(p.h_B2),
                           Before(t.bidding_end))
    liquidation = All(MultiSig2of2(p.alice_pub, p.bob_pub), PreimageOf(p.h_A2),
                      PreimageOf(p.h_B2), Before(t.settlement_deadline))
    last_resort = All(SignedBy(p.alice_pub), After(t.seizure_end))
    return repayment_refund, liquidation, last_resort


def build_seizable_script(p: CollateralParams) -> Condition:
    t = p.timeline
    a, b, d = _shared_branches(p)
    seize = All(SignedBy(p.bob_pub), PreimageOf(p.h_A1), After(t.bidding_end), Before(t.seizure_end))
    return Any(a, b, seize, d)


def build_refundable_script(p: CollateralParams) -> Condition:
    t = p.timeline
    a, b, d = _shared_branches(p)
    refund = All(SignedBy(p.alice_pub), After(t.bidding_end), Before(t.seizure_end))
    return Any(a, b, refund, d)


def lock_collateral(chain: UtxoChain, alice: KeyPair, p: CollateralParams,
                    actor: str = "alice") -> tuple[OutPoint, OutPoint]:
    """Move Alice's coins into the seizable and refundable outputs; change goes back to her."""
    need = p.total
    picked, total = [], 0
    for out in chain.outputs_of(alice.public):
        if total >= need:
            break
        picked.append(out)
        total += out.value
    if total < need:
        raise TxRejected("insufficient-funds", f"have {total}, need {need}")
    outputs = [TxOut(p.seizable_value, build_seizable_script(p)),
               TxOut(p.refundable_value, build_refundable_script(p))]
    if total > need:
        outputs.append(TxOut(total - need, pay_to(alice.public)))
    ops = [o.id for o in picked]
    sig = alice.sign(sighash(chain.chain_id, ops, outputs))
    w = Witness(signatures=[(alice.public, sig)])
    txid = chain.submit_tx(Transaction([TxIn(op, w) for op in ops], outputs), actor, "lock-collateral")
    return OutPoint(txid, 0), OutPoint(txid, 1)


def settlement_payload(chain_id: str, outpoints, destination: bytes, value: int) -> bytes:
    """What Alice and Bob sign so the winning bidder can sweep both collateral outputs."""
    return sighash(chain_id, list(outpoints), [TxOut(value, pay_to(destination))])


def spend_collateral(chain: UtxoChain, outpoints, branch: str, destination: bytes, *,
                     preimages=(), signers=(), signatures=(), actor: str = "?") -> str:
    """Spend one or more collateral outputs through ``branch`` to ``destination``'s address.

    ``signers`` are key pairs that sign now; ``signatures`` are (pubkey, Signature)
    pairs produced earlier (e.g. the multisig deposited with the loan contract).
    """
    if isinstance(outpoints, OutPoint):
        outpoints = [outpoints]
    outpoints = list(outpoints)
    idx = BRANCHES[branch]
    value = 0
    for op in outpoints:
        out = chain.utxos.get(op)
        if out is None:
            continue  # submit_tx reports unknown-output / double-spend
        value += out.value
    outputs = [TxOut(value, pay_to(destination))] if value > 0 else []
    message = sighash(chain.chain_id, outpoints, outputs)
    sigs = list(signatures) + [(k.public, k.sign(message)) for k in signers]
    w = Witness(frozenset(preimages), sigs)
    tx = Transaction([TxIn(op, w) for op in outpoints], outputs)
    memo = f"collateral-{BRANCH_NAMES[branch]}"
    for op in outpoints:
        out = chain.utxos.get(op)
        if out is None or not outputs:
            break
        if not eval_condition(out.condition.terms[idx], w, chain.clock.now, message, chain.scheme):
            chain._reject(tx, actor, "condition-unsatisfied", f"branch {branch} not satisfied", memo)
    return chain.submit_tx(tx, actor, memo)


def live_branches(condition: Condition, now: int) -> list[int]:
    """Indices of top-level branches whose time bounds are open at ``now`` (keys/preimages ignored)."""
    def timed_ok(c):
        if isinstance(c, After):
            return now >= c.t
        if isinstance(c, Before):
            return now < c.t
        if isinstance(c, All):
            return all(timed_ok(t) for t in c.terms)
        if isinstance(c, Any):
            return any(timed_ok(t) for t in c.terms)
        return True
    terms = condition.terms if isinstance(condition, Any) else (condition,)
    return [i for i, t in enumerate(terms) if timed_ok(t)]
