"""BCoin-side contracts: the loan state machine with its liquidation auction, and a plain HTLC."""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field

from .chain_sim import ContractChain, ContractError, OutPoint
from .collateral import CollateralParams, PeriodTimeline, settlement_payload
from .primitives import Secret, SecretHash, Signature, verify_preimage


class LoanState(str, enum.Enum):
    CREATED = "Created"
    FUNDED = "Funded"
    WITHDRAWN = "Withdrawn"
    REPAID = "Repaid"
    CLOSED = "Closed"
    PRINCIPAL_REFUNDED = "PrincipalRefunded"
    BIDDING_OPEN = "BiddingOpen"
    BIDDING_CLOSED = "BiddingClosed"
    SETTLED = "Settled"
    SEIZURE_FALLBACK = "SeizureFallback"

    def __str__(self):
        return self.value


TERMINAL_STATES = frozenset({LoanState.CLOSED, LoanState.PRINCIPAL_REFUNDED,
                             LoanState.SETTLED, LoanState.SEIZURE_FALLBACK})


@dataclass(frozen=True)
class LoanTerms:
    principal: int
    interest: int
    liquidation_fee: int
    collateral: CollateralParams
    borrower: str = "alice"
    lender: str = "bob"

    def __post_init__(self):
        if self.principal <= 0 or self.interest < 0 or self.liquidation_fee < 0:
            raise ValueError("principal must be positive; interest and fee non-negative")

    @property
    def timeline(self) -> PeriodTimeline:
        return self.collateral.timeline

    @property
    def bid_settlement_deadline(self) -> int:
        return self.timeline.settlement_deadline

    @property
    def repayment_amount(self) -> int:
        return self.principal + self.interest

    @property
    def owed_on_liquidation(self) -> int:
        return self.principal + self.interest + self.liquidation_fee


@dataclass(frozen=True)
class Bid:
    bidder: str
    amount: int
    h_C: SecretHash
    acoin_address: bytes


@dataclass
class SettlementRegistry:
    sig_alice: Signature | None = None
    sig_bob: Signature | None = None
    revealed: dict = field(default_factory=dict)  # "A2" / "B2" / "C" -> Secret


class _Contract:
    kind = "contract"

    def attach(self, chain: ContractChain, cid: str) -> None:
        self.chain = chain
        self.cid = cid
        self.account = f"contract:{cid}"

    def clone(self, chain: ContractChain):
        c = copy.copy(self)
        c.chain = chain
        return c

    @property
    def now(self) -> int:
        return self.chain.clock.now

    def _emit(self, actor, kind, **detail):
        self.chain.tracer.emit(self.now, self.chain.chain_id, actor, kind, contract=self.cid, **detail)

    def _fail(self, actor, op, reason, msg=""):
        self._emit(actor, "call-rejected", op=op, reason=reason)
        raise ContractError(reason, msg or op)

    def _call(self, actor, op, **args):
        self._emit(actor, "call", op=op, **args)

    def _goto(self, actor, new):
        old, self.state = self.state, new
        self._emit(actor, "state-transition", **{"from": str(old), "to": str(new)})

    def _label(self, h: SecretHash) -> str:
        return self.chain.tracer.label(h.digest)


class LoanContract(_Contract):
    """One loan. Every public method takes the calling party's name first."""

    kind = "loan"

    def __init__(self, terms: LoanTerms):
        self.terms = terms
        self.state = LoanState.CREATED
        self.history = [LoanState.CREATED]
        self.collateral_outpoints: tuple | None = None
        self.highest: Bid | None = None
        self.bid_count = 0
        self.registry = SettlementRegistry()
        self.claimed: dict = {}

    def clone(self, chain):
        c = super().clone(chain)
        c.history = list(self.history)
        c.registry = SettlementRegistry(self.registry.sig_alice, self.registry.sig_bob,
                                        dict(self.registry.revealed))
        c.claimed = dict(self.claimed)
        return c

    def _goto(self, actor, new):
        super()._goto(actor, new)
        self.history.append(new)

    @property
    def alice(self) -> str:
        return self.terms.borrower

    @property
    def bob(self) -> str:
        return self.terms.lender

    def _require_state(self, actor, op, *states):
        if self.state not in states:
            self._fail(actor, op, "invalid-state", f"{op} not allowed in {self.state}")

    def _require_preimage(self, actor, op, secret, h):
        if not isinstance(secret, Secret) or not verify_preimage(secret, h):
            self._fail(actor, op, "bad-preimage")

    # -- loan period --

    def register_collateral(self, caller: str, outpoints) -> None:
        """Borrower records where the ACoin collateral sits, so signatures can be checked against it."""
        op = "register_collateral"
        if caller != self.alice:
            self._fail(caller, op, "unauthorized")
        self._require_state(caller, op, LoanState.CREATED, LoanState.FUNDED)
        if self.collateral_outpoints is not None:
            self._fail(caller, op, "invalid-state", "collateral already registered")
        self.collateral_outpoints = tuple(OutPoint(*o) for o in outpoints)
        self._call(caller, op, outpoints=[str(o) for o in self.collateral_outpoints])

    def fund(self, caller: str, amount: int) -> None:
        op = "fund"
        if caller != self.bob:
            self._fail(caller, op, "unauthorized")
        self._require_state(caller, op, LoanState.CREATED)
        if amount != self.terms.principal:
            self._fail(caller, op, "wrong-amount")
        if self.chain.balance(caller) < amount:
            self._fail(caller, op, "insufficient-balance")
        self.chain.transfer(caller, self.account, amount, caller, "principal-escrow")
        c = self.terms.collateral
        self._call(caller, op, amount=amount, h_B1=c.h_B1.hex(), h_B2=c.h_B2.hex())
        self._goto(caller, LoanState.FUNDED)

    def withdraw(self, caller: str, secret_A1: Secret, secret_B1: Secret) -> None:
        op = "withdraw"
        if caller != self.alice:
            self._fail(caller, op, "unauthorized")
        self._require_state(caller, op, LoanState.FUNDED)
        if self.now >= self.terms.timeline.withdraw_deadline:
            self._fail(caller, op, "expired")
        c = self.terms.collateral
        self._require_preimage(caller, op, secret_B1, c.h_B1)
        self._require_preimage(caller, op, secret_A1, c.h_A1)
        self._call(caller, op, uses=[self._label(c.h_B1)])
        self.chain.reveal(secret_B1, caller, op)
        self.chain.reveal(secret_A1, caller, op)
        self.chain.transfer(self.account, caller, self.terms.principal, caller, "principal-release")
        self._goto(caller, LoanState.WITHDRAWN)

    def refund_principal(self, caller: str, secret_B2: Secret) -> None:
        op = "refund_principal"
        if caller != self.bob:
            self._fail(caller, op, "unauthorized")
        self._require_state(caller, op, LoanState.FUNDED)
        if self.now < self.terms.timeline.withdraw_deadline:
            self._fail(caller, op, "too-early")
        self._require_preimage(caller, op, secret_B2, self.terms.collateral.h_B2)
        self._call(caller, op)
        self.chain.reveal(secret_B2, caller, op)
        self.chain.transfer(self.account, caller, self.terms.principal, caller, "principal-refund")
        self._goto(caller, LoanState.PRINCIPAL_REFUNDED)

    def repay(self, caller: str, amount: int) -> None:
        op = "repay"
        if caller != self.alice:
            self._fail(caller, op, "unauthorized")
        self._require_state(caller, op, LoanState.WITHDRAWN)
        if self.now >= self.terms.timeline.loan_expiry:
            self._fail(caller, op, "late")
        if amount != self.terms.repayment_amount:
            self._fail(caller, op, "wrong-amount")
        if self.chain.balance(caller) < amount:
            self._fail(caller, op, "insufficient-balance")
        self.chain.transfer(caller, self.account, amount, caller, "repayment-escrow")
        self._call(caller, op, amount=amount)
        self._goto(caller, LoanState.REPAID)

    def accept_repayment(self, caller: str, secret_B2: Secret) -> None:
        op = "accept_repayment"
        if caller != self.bob:
            self._fail(caller, op, "unauthorized")
        self._require_state(caller, op, LoanState.REPAID)
        if self.now >= self.terms.timeline.bidding_end:
            self._fail(caller, op, "expired")
        self._require_preimage(caller, op, secret_B2, self.terms.collateral.h_B2)
        self._call(caller, op)
        self.chain.reveal(secret_B2, caller, op)
        self.chain.transfer(self.account, caller, self.terms.repayment_amount, caller, "repayment")
        self._goto(caller, LoanState.CLOSED)

    def refund_repayment(self, caller: str) -> None:
        """Repayment lock ran out without the lender accepting: the borrower takes it back."""
        op = "refund_repayment"
        if caller != self.alice:
            self._fail(caller, op, "unauthorized")
        self._require_state(caller, op, LoanState.REPAID)
        if self.now < self.terms.timeline.bidding_end:
            self._fail(caller, op, "too-early")
        self._call(caller, op)
        self.chain.transfer(self.account, caller, self.terms.repayment_amount, caller, "repayment-refund")
        self._goto(caller, LoanState.SEIZURE_FALLBACK)

    # -- bidding period --

    def start_bidding(self, caller: str) -> None:
        op = "start_bidding"
        if caller not in (self.alice, self.bob):
            self._fail(caller, op, "unauthorized")
        self._require_state(caller, op, LoanState.WITHDRAWN)
        t = self.terms.timeline
        if self.now < t.loan_expiry:
            self._fail(caller, op, "too-early")
        if self.now >= t.bidding_end:
            self._fail(caller, op, "window-closed")
        self._call(caller, op)
        self._goto(caller, LoanState.BIDDING_OPEN)

    def place_bid(self, bid: Bid) -> None:
        op = "place_bid"
        caller = bid.bidder
        self._require_state(caller, op, LoanState.BIDDING_OPEN)
        if self.now >= self.terms.timeline.bidding_end:
            self._fail(caller, op, "window-closed")
        floor = self.highest.amount if self.highest else 0
        if bid.amount <= floor:
            self._fail(caller, op, "too-low")
        if self.chain.balance(caller) < bid.amount:
            self._fail(caller, op, "insufficient-balance")
        self.chain.transfer(caller, self.account, bid.amount, caller, "bid-escrow")
        prev, self.highest = self.highest, bid
        self.bid_count += 1
        if prev is not None:
            self.chain.transfer(self.account, prev.bidder, prev.amount, caller, "bid-displaced")
        self._emit(caller, "bid-placed", amount=bid.amount, h_C=bid.h_C.hex(),
                   acoin_address=bid.acoin_address.hex())

    def close_bidding(self, caller: str) -> None:
        """Close the auction. With no bids (or no auction ever opened) the loan falls back to seizure."""
        op = "close_bidding"
        self._require_state(caller, op, LoanState.BIDDING_OPEN, LoanState.WITHDRAWN)
        if self.now < self.terms.timeline.bidding_end:
            self._fail(caller, op, "too-early")
        self._call(caller, op, bids=self.bid_count)
        if self.highest is not None:
            self._goto(caller, LoanState.BIDDING_CLOSED)
        else:
            self._goto(caller, LoanState.SEIZURE_FALLBACK)

    def settlement_payload(self) -> bytes:
        if self.highest is None or self.collateral_outpoints is None:
            raise ContractError("invalid-state", "no winner or no collateral registered")
        return settlement_payload("ACoin", self.collateral_outpoints,
                                  self.highest.acoin_address, self.terms.collateral.total)

    def _settling(self, caller, op):
        self._require_state(caller, op, LoanState.BIDDING_CLOSED)
        if self.now >= self.terms.bid_settlement_deadline:
            self._fail(caller, op, "expired")

    def provide_signature(self, caller: str, sig: Signature) -> None:
        op = "provide_signature"
        if caller not in (self.alice, self.bob):
            self._fail(caller, op, "unauthorized")
        self._settling(caller, op)
        c = self.terms.collateral
        pub = c.alice_pub if caller == self.alice else c.bob_pub
        try:
            payload = self.settlement_payload()
        except ContractError:
            self._fail(caller, op, "invalid-state")
        if not self.chain.scheme.verify(pub, payload, sig):
            self._fail(caller, op, "invalid-signature")
        slot = "sig_alice" if caller == self.alice else "sig_bob"
        if getattr(self.registry, slot) is not None:
            self._fail(caller, op, "invalid-state", "already signed")
        setattr(self.registry, slot, sig)
        self._call(caller, op, signature=sig.payload.hex())

    def reveal_secret_c(self, caller: str, secret_C: Secret) -> None:
        op = "reveal_secret_c"
        self._settling(caller, op)
        if caller != self.highest.bidder:
            self._fail(caller, op, "unauthorized")
        if self.registry.sig_alice is None or self.registry.sig_bob is None:
            self._fail(caller, op, "missing-signatures")
        self._require_preimage(caller, op, secret_C, self.highest.h_C)
        self.registry.revealed["C"] = secret_C
        self._call(caller, op)
        self.chain.reveal(secret_C, caller, op)
        self._maybe_settle(caller)

    def _record(self, caller, op, which, secret):
        self.registry.revealed[which] = secret
        self._call(caller, op, which=which)
        self.chain.reveal(secret, caller, op)
        self._maybe_settle(caller)

    def _maybe_settle(self, caller):
        if {"A2", "B2", "C"} <= self.registry.revealed.keys():
            self._goto(caller, LoanState.SETTLED)

    def reveal_settlement_secret(self, caller: str, which: str, secret: Secret) -> None:
        op = "reveal_settlement_secret"
        owner = {"A2": self.alice, "B2": self.bob}.get(which)
        if owner is None or caller != owner:
            self._fail(caller, op, "unauthorized")
        self._settling(caller, op)
        if "C" not in self.registry.revealed:
            self._fail(caller, op, "ordering", "secret C not yet revealed")
        c = self.terms.collateral
        self._require_preimage(caller, op, secret, c.h_A2 if which == "A2" else c.h_B2)
        self._record(caller, op, which, secret)

    def reveal_counterparty_secret(self, caller: str, secret: Secret) -> None:
        """Publish a settlement secret learned elsewhere (e.g. scanned off ACoin)."""
        op = "reveal_counterparty_secret"
        if caller not in (self.alice, self.bob):
            self._fail(caller, op, "unauthorized")
        self._settling(caller, op)
        c = self.terms.collateral
        if isinstance(secret, Secret) and verify_preimage(secret, c.h_A2):
            which = "A2"
        elif isinstance(secret, Secret) and verify_preimage(secret, c.h_B2):
            which = "B2"
        else:
            self._fail(caller, op, "bad-preimage")
        self._record(caller, op, which, secret)

    def shares(self) -> dict:
        bid = self.highest.amount if self.highest else 0
        bob_share = min(bid, self.terms.owed_on_liquidation)
        return {self.bob: bob_share, self.alice: bid - bob_share}

    def claim_proceeds(self, caller: str) -> int:
        op = "claim_proceeds"
        if caller not in (self.alice, self.bob):
            self._fail(caller, op, "unauthorized")
        self._require_state(caller, op, LoanState.SETTLED)
        if caller in self.claimed:
            self._fail(caller, op, "already-claimed")
        amount = self.shares()[caller]
        self.claimed[caller] = amount
        self._emit(caller, "claim", amount=amount, uses=["C"])
        self.chain.transfer(self.account, caller, amount, caller, "proceeds")
        return amount

    def refund_bid(self, caller: str) -> None:
        op = "refund_bid"
        if self.state == LoanState.SETTLED:
            self._fail(caller, op, "already-settled")
        self._require_state(caller, op, LoanState.BIDDING_CLOSED)
        if caller != self.highest.bidder:
            self._fail(caller, op, "unauthorized")
        if self.now < self.terms.bid_settlement_deadline:
            self._fail(caller, op, "too-early")
        self._call(caller, op)
        self.chain.transfer(self.account, caller, self.highest.amount, caller, "bid-refund")
        self._goto(caller, LoanState.SEIZURE_FALLBACK)

    # -- introspection --

    def escrow(self) -> int:
        return self.chain.balance(self.account)

    def semantic_key(self) -> tuple:
        r = self.registry
        return (self.state.value, self.collateral_outpoints,
                self.highest, self.bid_count, r.sig_alice is not None, r.sig_bob is not None,
                tuple(sorted(r.revealed)), tuple(sorted(self.claimed.items())),
                LoanState.REPAID in self.history)


class HtlcContract(_Contract):
    """Plain hashed-timelock escrow: recipient redeems with the preimage before ``refund_time``,
    funder refunds from ``refund_time`` on."""

    kind = "htlc"

    def __init__(self, funder: str, recipient: str, h: SecretHash, refund_time: int, amount: int):
        self.funder, self.recipient, self.h = funder, recipient, h
        self.refund_time, self.amount = refund_time, amount
        self.state = "Created"

    def lock(self, caller: str) -> None:
        if caller != self.funder:
            self._fail(caller, "lock", "unauthorized")
        if self.state != "Created":
            self._fail(caller, "lock", "invalid-state")
        self.chain.transfer(caller, self.account, self.amount, caller, "htlc-lock")
        self._call(caller, "lock", amount=self.amount, h=self.h.hex(), refund_time=self.refund_time)
        self._goto(caller, "Locked")

    def redeem(self, caller: str, secret: Secret) -> None:
        if caller != self.recipient:
            self._fail(caller, "redeem", "unauthorized")
        if self.state != "Locked":
            self._fail(caller, "redeem", "invalid-state")
        if self.now >= self.refund_time:
            self._fail(caller, "redeem", "expired")
        if not verify_preimage(secret, self.h):
            self._fail(caller, "redeem", "bad-preimage")
        self._call(caller, "redeem", uses=[self._label(self.h)])
        self.chain.reveal(secret, caller, "redeem")
        self.chain.transfer(self.account, caller, self.amount, caller, "htlc-redeem")
        self._goto(caller, "Redeemed")

    def refund(self, caller: str) -> None:
        if caller != self.funder:
            self._fail(caller, "refund", "unauthorized")
        if self.state != "Locked":
            self._fail(caller, "refund", "invalid-state")
        if self.now < self.refund_time:
            self._fail(caller, "refund", "too-early")
        self._call(caller, "refund")
        self.chain.transfer(self.account, caller, self.amount, caller, "htlc-refund")
        self._goto(caller, "Refunded")

    def semantic_key(self) -> tuple:
        return (self.state,)
