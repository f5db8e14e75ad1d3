"""Party agents: the world they act in, what they may observe, and the moves they make.

Every protocol step a party can take is a ``Move``. A move becomes *possible*
once the party has the information to attempt it, and *ready* when an honest
party would act. The first time a move is possible is a decision point, where
the party's strategy picks one of:

    honest  act as soon as ready
    omit    never act
    early   attempt immediately, before ready (then continue honestly)
    late    act one tick after the move first became ready
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .chain_sim import (
    After,
    All,
    Any,
    Clock,
    ContractChain,
    PreimageOf,
    ProtocolError,
    SignedBy,
    Transaction,
    TxIn,
    TxOut,
    UtxoChain,
    Witness,
    pay_to,
    sighash,
)
from .collateral import (
    build_refundable_script,
    build_seizable_script,
    lock_collateral,
    spend_collateral,
)
from .loan_contract import Bid, LoanState
from .primitives import KeyPair, Secret, SecretHash, commit
from .trace import NULL_TRACER, Tracer

OPTIONS = ("honest", "omit", "early", "late")


class SecretAccessError(RuntimeError):
    """A strategy tried to read a secret it neither owns nor has observed."""


@dataclass
class Strategy:
    """Option per decision point (default honest) plus free-form numeric parameters."""

    options: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        bad = {k: v for k, v in self.options.items() if v not in OPTIONS}
        if bad:
            raise ValueError(f"unknown strategy options: {bad}")

    def option(self, move: str) -> str:
        return self.options.get(move, "honest")

    @property
    def is_honest(self) -> bool:
        return (all(v == "honest" for v in self.options.values())
                and not self.params.get("greedy_bidding"))


@dataclass
class World:
    """Complete simulation state: both chains, keys, and who knows which secrets."""

    clock: Clock
    acoin: UtxoChain
    bcoin: ContractChain
    tracer: Tracer
    keys: dict            # party -> KeyPair
    roles: dict           # party -> role
    controllers: dict     # party -> controlling party (pseudonyms)
    vault: dict           # party -> {label: Secret}, fixed at setup
    hashes: dict          # label -> SecretHash, public commitments
    inbox: dict = field(default_factory=dict)   # party -> {label: Secret} received off-chain
    public: dict = field(default_factory=dict)  # scenario facts every party sees (contract ids...)
    rate: Fraction = Fraction(1)
    params: dict = field(default_factory=dict)  # party -> strategy params

    def clone(self) -> "World":
        clock = Clock(self.clock.now)
        return World(
            clock=clock,
            acoin=self.acoin.clone(clock),
            bcoin=self.bcoin.clone(clock),
            tracer=NULL_TRACER,
            keys=self.keys, roles=self.roles, controllers=self.controllers,
            vault=self.vault, hashes=self.hashes,
            inbox={k: dict(v) for k, v in self.inbox.items()},
            public=self.public, rate=self.rate, params=self.params,
        )

    @property
    def loan(self):
        return self.bcoin.contracts.get(self.public.get("loan"))

    def party_named(self, role: str) -> str | None:
        for name, r in self.roles.items():
            if r == role:
                return name
        return None

    def semantic_key(self) -> tuple:
        """Everything that can influence future behaviour; logs and traces excluded."""
        utxos = tuple(sorted((o.id, o.value) for o in self.acoin.utxos.values()))
        return (
            self.clock.now,
            utxos,
            frozenset(s.data for s in self.acoin.revealed),
            frozenset(s.data for s in self.bcoin.revealed),
            tuple(sorted(self.bcoin.balances.items())),
            tuple((cid, c.semantic_key()) for cid, c in sorted(self.bcoin.contracts.items())),
            tuple(sorted((p, tuple(sorted(d))) for p, d in self.inbox.items())),
        )


class View:
    """One party's window on the world: its own keys and secrets plus public chain state."""

    def __init__(self, world: World, party: str):
        self._w = world
        self.name = party

    # public state
    @property
    def now(self) -> int:
        return self._w.clock.now

    @property
    def acoin(self) -> UtxoChain:
        return self._w.acoin

    @property
    def bcoin(self) -> ContractChain:
        return self._w.bcoin

    @property
    def loan(self):
        return self._w.loan

    @property
    def public(self) -> dict:
        return self._w.public

    @property
    def params(self) -> dict:
        return self._w.params.get(self.name, {})

    @property
    def key(self) -> KeyPair:
        return self._w.keys[self.name]

    def pubkey(self, party: str) -> bytes:
        return self._w.keys[party].public

    def party(self, role: str) -> str | None:
        return self._w.party_named(role)

    def hash(self, label: str) -> SecretHash:
        return self._w.hashes[label]

    # secrets
    def _private(self, label: str) -> Secret | None:
        for who in (self.name, self._w.controllers.get(self.name)):
            if who is None:
                continue
            s = self._w.vault.get(who, {}).get(label) or self._w.inbox.get(who, {}).get(label)
            if s is not None:
                return s
        return None

    def revealed_on(self, chain: str, label: str) -> Secret | None:
        c = self._w.acoin if chain == "ACoin" else self._w.bcoin
        return c.find_preimage(self._w.hashes[label])

    def knows(self, label: str) -> bool:
        return self._lookup(label) is not None

    def _lookup(self, label):
        if label not in self._w.hashes:
            return None
        return (self._private(label) or self.revealed_on("ACoin", label)
                or self.revealed_on("BCoin", label))

    def secret(self, label: str) -> Secret:
        s = self._lookup(label)
        if s is None:
            raise SecretAccessError(f"{self.name} has no access to secret {label}")
        return s

    def send_secret(self, to: str, label: str) -> None:
        """Hand a secret to another party off-chain."""
        s = self.secret(label)
        self._w.inbox.setdefault(to, {})[label] = s
        self._w.tracer.emit(self.now, "offchain", self.name, "secret-shared",
                            label=label, to=to, hash=commit(s).hex())


@dataclass(frozen=True)
class Move:
    name: str
    possible: Callable[[View], bool]
    ready: Callable[[View], bool]
    act: Callable[[View], object]


# --- loan helpers ---------------------------------------------------------------


def _tl(v):
    return v.loan.terms.timeline


def _state(v):
    return v.loan.state


def _collateral(v):
    return v.loan.collateral_outpoints


def _unspent(v, which=None):
    ops = _collateral(v)
    if ops is None:
        return []
    if which is not None:
        ops = [ops[which]]
    return [op for op in ops if op in v.acoin.utxos]


def _collateral_ok(v) -> bool:
    """Lender-side check that both collateral outputs exist with the agreed scripts and values."""
    ops = _collateral(v)
    if ops is None:
        return False
    p = v.loan.terms.collateral
    want = [(p.seizable_value, build_seizable_script(p)), (p.refundable_value, build_refundable_script(p))]
    for op, (value, script) in zip(ops, want):
        out = v.acoin.utxos.get(op)
        if out is None or out.value != value or out.condition != script:
            return False
    return True


def _settle_window(v) -> bool:
    return _state(v) == LoanState.BIDDING_CLOSED and v.now < v.loan.terms.bid_settlement_deadline


def _fallback(v) -> bool:
    """Liquidation has failed: seizure-period spends are now the honest course."""
    t = _tl(v)
    if not (t.bidding_end <= v.now < t.seizure_end):
        return False
    s = _state(v)
    return s == LoanState.SEIZURE_FALLBACK or (
        s == LoanState.BIDDING_CLOSED and v.now >= v.loan.terms.bid_settlement_deadline)


def _is_winner(v) -> bool:
    h = v.loan.highest
    return h is not None and h.bidder == v.name


def _sigs_present(v) -> bool:
    r = v.loan.registry
    return r.sig_alice is not None and r.sig_bob is not None


def _sign_settlement(v):
    return v.loan.provide_signature(v.name, v.key.sign(v.loan.settlement_payload()))


def _can_close(v):
    return _state(v) in (LoanState.WITHDRAWN, LoanState.BIDDING_OPEN) and v.now >= _tl(v).loan_expiry


def _close_move():
    return Move("close_bidding", _can_close, lambda v: v.now >= _tl(v).bidding_end,
                lambda v: v.loan.close_bidding(v.name))


def _claim_move():
    return Move(
        "claim_proceeds",
        lambda v: _state(v) == LoanState.SETTLED and v.name not in v.loan.claimed,
        lambda v: v.loan.shares()[v.name] > 0,
        lambda v: v.loan.claim_proceeds(v.name),
    )


def _sign_move():
    return Move(
        "sign_settlement",
        lambda v: _state(v) == LoanState.BIDDING_CLOSED and v.loan.collateral_outpoints is not None,
        lambda v: _settle_window(v) and v.loan.highest.amount >= v.params.get("min_bid", 0),
        _sign_settlement,
    )


def _counter_move(other_label: str):
    def possible(v):
        return (_state(v) == LoanState.BIDDING_CLOSED
                and other_label not in v.loan.registry.revealed
                and v.revealed_on("ACoin", other_label) is not None)
    return Move("counter_reveal", possible, _settle_window,
                lambda v: v.loan.reveal_counterparty_secret(v.name, v.revealed_on("ACoin", other_label)))


# --- borrower -------------------------------------------------------------------


def _lock(v):
    ops = lock_collateral(v.acoin, v.key, v.loan.terms.collateral, v.name)
    v.loan.register_collateral(v.name, ops)


def _refund_a(v):
    ops = _unspent(v)
    return spend_collateral(v.acoin, ops, "a", v.key.public, preimages=[v.secret("B1"), v.secret("B2")],
                            signers=[v.key], actor=v.name)


def borrower_moves() -> list[Move]:
    return [
        Move("lock_collateral",
             lambda v: _collateral(v) is None and _state(v) in (LoanState.CREATED, LoanState.FUNDED),
             lambda v: _state(v) == LoanState.FUNDED and v.now < _tl(v).withdraw_deadline,
             _lock),
        Move("withdraw",
             lambda v: _state(v) == LoanState.FUNDED and _collateral(v) is not None and v.knows("B1"),
             lambda v: v.now < _tl(v).withdraw_deadline,
             lambda v: v.loan.withdraw(v.name, v.secret("A1"), v.secret("B1"))),
        Move("repay",
             lambda v: _state(v) == LoanState.WITHDRAWN,
             lambda v: v.params.get("repay_at", 0) <= v.now < _tl(v).loan_expiry,
             lambda v: v.loan.repay(v.name, v.loan.terms.repayment_amount)),
        Move("refund_collateral",
             lambda v: bool(_unspent(v)) and v.knows("B1") and v.knows("B2"),
             lambda v: v.now < _tl(v).bidding_end,
             _refund_a),
        Move("refund_repayment",
             lambda v: _state(v) == LoanState.REPAID,
             lambda v: v.now >= _tl(v).bidding_end,
             lambda v: v.loan.refund_repayment(v.name)),
        Move("start_bidding",
             lambda v: _state(v) in (LoanState.WITHDRAWN, LoanState.REPAID),
             lambda v: _state(v) == LoanState.WITHDRAWN and _tl(v).loan_expiry <= v.now < _tl(v).bidding_end,
             lambda v: v.loan.start_bidding(v.name)),
        _close_move(),
        _sign_move(),
        Move("reveal_settlement_secret",
             lambda v: _state(v) == LoanState.BIDDING_CLOSED and "C" in v.loan.registry.revealed,
             lambda v: _settle_window(v) and "A2" not in v.loan.registry.revealed,
             lambda v: v.loan.reveal_settlement_secret(v.name, "A2", v.secret("A2"))),
        _counter_move("B2"),
        _claim_move(),
        Move("refund_refundable",
             lambda v: bool(_unspent(v, 1)) and v.now >= _tl(v).loan_expiry,
             _fallback,
             lambda v: spend_collateral(v.acoin, _unspent(v, 1), "c", v.key.public,
                                        signers=[v.key], actor=v.name)),
        Move("last_resort_refund",
             lambda v: bool(_unspent(v)) and v.now >= _tl(v).bidding_end,
             lambda v: v.now >= _tl(v).seizure_end,
             lambda v: spend_collateral(v.acoin, _unspent(v), "d", v.key.public,
                                        signers=[v.key], actor=v.name)),
    ]


# --- lender ---------------------------------------------------------------------


def _start_ready(v):
    t = _tl(v)
    ok_state = _state(v) == LoanState.WITHDRAWN or (
        v.params.get("greedy_bidding") and _state(v) == LoanState.REPAID)
    return ok_state and t.loan_expiry <= v.now < t.bidding_end


def lender_moves() -> list[Move]:
    return [
        Move("fund",
             lambda v: _state(v) == LoanState.CREATED,
             lambda v: True,
             lambda v: v.loan.fund(v.name, v.loan.terms.principal)),
        Move("share_b1",
             lambda v: _state(v) == LoanState.FUNDED,
             lambda v: _collateral_ok(v) and v.now < _tl(v).withdraw_deadline,
             lambda v: v.send_secret(v.party("borrower"), "B1")),
        Move("refund_principal",
             lambda v: _state(v) == LoanState.FUNDED,
             lambda v: v.now >= _tl(v).withdraw_deadline,
             lambda v: v.loan.refund_principal(v.name, v.secret("B2"))),
        Move("accept_repayment",
             lambda v: _state(v) == LoanState.REPAID,
             lambda v: v.now < _tl(v).bidding_end,
             lambda v: v.loan.accept_repayment(v.name, v.secret("B2"))),
        Move("start_bidding",
             lambda v: _state(v) in (LoanState.WITHDRAWN, LoanState.REPAID),
             _start_ready,
             lambda v: v.loan.start_bidding(v.name)),
        _close_move(),
        _sign_move(),
        Move("reveal_settlement_secret",
             lambda v: _state(v) == LoanState.BIDDING_CLOSED and "C" in v.loan.registry.revealed,
             lambda v: _settle_window(v) and "B2" not in v.loan.registry.revealed,
             lambda v: v.loan.reveal_settlement_secret(v.name, "B2", v.secret("B2"))),
        _counter_move("A2"),
        _claim_move(),
        Move("seize",
             lambda v: bool(_unspent(v, 0)) and v.knows("A1") and v.now >= _tl(v).loan_expiry,
             _fallback,
             lambda v: spend_collateral(v.acoin, _unspent(v, 0), "c", v.key.public,
                                        preimages=[v.secret("A1")], signers=[v.key], actor=v.name)),
    ]


# --- bidder ---------------------------------------------------------------------


def bidder_label(name: str) -> str:
    return "C" if name == "charlie" else f"C:{name}"


def _place_bid(v):
    bid = Bid(v.name, v.params["bid"], v.hash(bidder_label(v.name)), v.key.public)
    return v.loan.place_bid(bid)


def _sweep(v):
    r = v.loan.registry
    sigs = [(v.pubkey(v.party("borrower")), r.sig_alice), (v.pubkey(v.party("lender")), r.sig_bob)]
    return spend_collateral(v.acoin, _collateral(v), "b", v.key.public,
                            preimages=[v.secret("A2"), v.secret("B2")], signatures=sigs, actor=v.name)


def bidder_moves() -> list[Move]:
    return [
        Move("place_bid",
             lambda v: _state(v) == LoanState.BIDDING_OPEN and v.params.get("bid", 0) > 0,
             lambda v: (v.now < _tl(v).bidding_end
                        and v.params["bid"] > (v.loan.highest.amount if v.loan.highest else 0)),
             _place_bid),
        Move("reveal_secret_c",
             lambda v: _state(v) == LoanState.BIDDING_CLOSED and _is_winner(v) and _sigs_present(v),
             lambda v: _settle_window(v) and len(_unspent(v)) == 2,
             lambda v: v.loan.reveal_secret_c(v.name, v.secret(bidder_label(v.name)))),
        Move("sweep_collateral",
             lambda v: (_is_winner(v) and _sigs_present(v) and len(_unspent(v)) == 2
                        and v.knows("A2") and v.knows("B2")),
             lambda v: v.now < v.loan.terms.bid_settlement_deadline,
             _sweep),
        Move("refund_bid",
             lambda v: _state(v) == LoanState.BIDDING_CLOSED and _is_winner(v),
             lambda v: v.now >= v.loan.terms.bid_settlement_deadline,
             lambda v: v.loan.refund_bid(v.name)),
    ]


# --- plain atomic swap --------------------------------------------------------------


def swap_acoin_script(v) -> object:
    p = v.public["swap"]
    alice, bob = v.pubkey(v.party("initiator")), v.pubkey(v.party("responder"))
    return Any(All(PreimageOf(v.hash("A")), SignedBy(bob)),
               All(SignedBy(alice), After(p["initiator_refund"])))


def _swap_lock_acoin(v):
    p = v.public["swap"]
    outs = v.acoin.outputs_of(v.key.public)
    total = sum(o.value for o in outs)
    outputs = [TxOut(p["acoin_amount"], swap_acoin_script(v))]
    if total > p["acoin_amount"]:
        outputs.append(TxOut(total - p["acoin_amount"], pay_to(v.key.public)))
    ops = [o.id for o in outs]
    sig = v.key.sign(sighash("ACoin", ops, outputs))
    w = Witness(signatures=[(v.key.public, sig)])
    v.acoin.submit_tx(Transaction([TxIn(op, w) for op in ops], outputs), v.name, "swap-lock")


def _swap_htlc_out(v):
    """The unspent ACoin HTLC output, found by its script (None before locking or after spending)."""
    script = swap_acoin_script(v)
    for out in v.acoin.utxos.values():
        if out.condition == script:
            return out.id
    return None


def _swap_spend(v, preimages, signer):
    op = _swap_htlc_out(v)
    out = v.acoin.utxos[op]
    outputs = [TxOut(out.value, pay_to(signer.public))]
    sig = signer.sign(sighash("ACoin", [op], outputs))
    w = Witness(frozenset(preimages), [(signer.public, sig)])
    return v.acoin.submit_tx(Transaction([TxIn(op, w)], outputs), v.name,
                             "swap-redeem" if preimages else "swap-refund")


def _bcoin_htlc(v):
    return v.bcoin.contracts[v.public["swap"]["htlc"]]


def initiator_moves() -> list[Move]:
    return [
        Move("lock_htlc",
             lambda v: _bcoin_htlc(v).state == "Created" and _swap_htlc_out(v) is None,
             lambda v: True, _swap_lock_acoin),
        Move("redeem_htlc",
             lambda v: _bcoin_htlc(v).state == "Locked",
             lambda v: v.now < _bcoin_htlc(v).refund_time,
             lambda v: _bcoin_htlc(v).redeem(v.name, v.secret("A"))),
        Move("refund_htlc",
             lambda v: _swap_htlc_out(v) is not None,
             lambda v: v.now >= v.public["swap"]["initiator_refund"],
             lambda v: _swap_spend(v, (), v.key)),
    ]


def responder_moves() -> list[Move]:
    return [
        Move("lock_htlc",
             lambda v: _bcoin_htlc(v).state == "Created" and _swap_htlc_out(v) is not None,
             lambda v: True,
             lambda v: _bcoin_htlc(v).lock(v.name)),
        Move("redeem_htlc",
             lambda v: _swap_htlc_out(v) is not None and v.revealed_on("BCoin", "A") is not None,
             lambda v: True,
             lambda v: _swap_spend(v, [v.revealed_on("BCoin", "A")], v.key)),
        Move("refund_htlc",
             lambda v: _bcoin_htlc(v).state == "Locked",
             lambda v: v.now >= _bcoin_htlc(v).refund_time,
             lambda v: _bcoin_htlc(v).refund(v.name)),
    ]


ROLE_MOVES = {
    "borrower": borrower_moves,
    "lender": lender_moves,
    "bidder": bidder_moves,
    "initiator": initiator_moves,
    "responder": responder_moves,
}


# --- dead moves ---------------------------------------------------------------------
# A move is dead once it can never become possible again. Its status then no
# longer affects the future, which lets the enumerator merge equivalent states.

_S = LoanState
_PRE_LOAN = (_S.CREATED, _S.FUNDED)
_PRE_DEFAULT = (_S.CREATED, _S.FUNDED, _S.WITHDRAWN)


def _outside(*states):
    return lambda v: _state(v) not in states


def _spent(v, *which) -> bool:
    ops = _collateral(v)
    return ops is not None and all(ops[i] not in v.acoin.utxos for i in which)


def _after(attr):
    return lambda v: v.now >= getattr(_tl(v), attr)


def _either(*preds):
    return lambda v: any(p(v) for p in preds)


_settlement_over = _outside(*_PRE_DEFAULT, _S.REPAID, _S.BIDDING_OPEN, _S.BIDDING_CLOSED)

DEAD = {
    "lock_collateral": lambda v: _collateral(v) is not None or _state(v) not in _PRE_LOAN,
    "withdraw": _either(_outside(*_PRE_LOAN), _after("withdraw_deadline")),
    "repay": _either(_outside(*_PRE_DEFAULT), _after("loan_expiry")),
    "refund_collateral": _either(lambda v: _spent(v, 0, 1), _after("bidding_end")),
    "refund_repayment": _outside(*_PRE_DEFAULT, _S.REPAID),
    "start_bidding": _either(_outside(*_PRE_DEFAULT, _S.REPAID), _after("bidding_end")),
    "close_bidding": _outside(*_PRE_DEFAULT, _S.BIDDING_OPEN),
    "sign_settlement": _settlement_over,
    "reveal_settlement_secret": _settlement_over,
    "counter_reveal": _settlement_over,
    "claim_proceeds": lambda v: (_state(v) in (_S.CLOSED, _S.PRINCIPAL_REFUNDED, _S.SEIZURE_FALLBACK)
                                 or v.name in v.loan.claimed),
    "refund_refundable": _either(lambda v: _spent(v, 1), _after("seizure_end")),
    "last_resort_refund": lambda v: _spent(v, 0, 1),
    "fund": _outside(_S.CREATED),
    "share_b1": _either(_outside(*_PRE_LOAN), _after("withdraw_deadline")),
    "refund_principal": _outside(*_PRE_LOAN),
    "accept_repayment": _either(_outside(*_PRE_DEFAULT, _S.REPAID), _after("bidding_end")),
    "seize": _either(lambda v: _spent(v, 0), _after("seizure_end")),
    "place_bid": _either(_outside(*_PRE_DEFAULT, _S.BIDDING_OPEN), _after("bidding_end")),
    "reveal_secret_c": _settlement_over,
    "sweep_collateral": _either(lambda v: _spent(v, 0) or _spent(v, 1), _after("settlement_deadline")),
    "refund_bid": _settlement_over,
}


# --- engine ---------------------------------------------------------------------------


class Engine:
    """Drives all agents through a tick schedule.

    Within a tick, parties take turns (in declaration order) until a full pass
    changes nothing, so every party can react to anything done in that tick.
    ``chooser(party, move, options) -> option`` is consulted at each decision
    point of a non-honest party while ``budget`` lasts; otherwise honest.
    Only deviating choices use up the budget.
    """

    def __init__(self, world: World, moves: dict, order: list, honest: set,
                 chooser=None, budget: int = 10**9):
        self.world = world
        self.moves = moves
        self.order = order
        self.honest = honest
        self.chooser = chooser
        self.budget = budget
        self.forced: dict = {}  # (party, move) -> option fixed by the scenario's strategy
        self.status: dict = {}
        self.decisions: list = []
        self.tick_index = -1

    def clone(self) -> "Engine":
        e = Engine.__new__(Engine)
        e.__dict__.update(self.__dict__)
        e.world = self.world.clone()
        e.status = dict(self.status)
        e.decisions = list(self.decisions)
        return e

    def key(self) -> tuple:
        """Everything that determines the rest of the run (the budget aside)."""
        live = []
        for (party, name), st in sorted(self.status.items()):
            dead = DEAD.get(name) if self.world.loan is not None else None
            if dead is not None and dead(View(self.world, party)):
                continue
            if st in ("done", "omit"):
                st = "spent"  # will never act again either way
            live.append((party, name, "late-due" if st.startswith("late@") else st))
        return (self.world.semantic_key(), tuple(live))

    def _choose(self, party, move, ready) -> str:
        opts = ["honest", "omit"] + ([] if ready else ["early"]) + ["late"]
        forced = self.forced.get((party, move.name))
        if forced is not None:
            choice = forced
        elif party in self.honest or self.chooser is None or self.budget <= 0:
            choice = "honest"
        else:
            choice = self.chooser(party, move.name, opts)
            if choice != "honest":
                self.budget -= 1
        self.decisions.append((party, move.name, choice))
        return choice

    def _attempt(self, view, move) -> None:
        try:
            move.act(view)
        except ProtocolError:
            pass  # the chain already logged the rejection

    def _step(self, party: str, move: Move) -> bool:
        key = (party, move.name)
        st = self.status.get(key, "pending")
        if st in ("done", "omit"):
            return False
        view = View(self.world, party)
        changed = False
        if st == "pending":
            if not move.possible(view):
                return False
            ready = move.ready(view)
            choice = self._choose(party, move, ready)
            changed = True
            if choice == "omit":
                self.status[key] = "omit"
                return True
            if choice == "early":
                self._attempt(view, move)
                self.status[key] = "waiting"
                return True
            st = "late" if choice == "late" else "waiting"
            self.status[key] = st
        if st == "waiting":
            if move.possible(view) and move.ready(view):
                self.status[key] = "done"
                self._attempt(view, move)
                return True
            return changed
        if st == "late":
            if move.possible(view) and move.ready(view):
                self.status[key] = f"late@{self.tick_index}"
                return True
            return changed
        if st.startswith("late@") and self.tick_index > int(st[5:]):
            self.status[key] = "done"
            self._attempt(view, move)
            return True
        return changed

    def run_tick(self, index: int, t: int) -> None:
        self.tick_index = index
        self.world.clock.advance(t)
        self.world.tracer.emit(t, "system", "system", "tick", index=index)
        for _ in range(1000):
            changed = False
            for party in self.order:
                for move in self.moves[party]:
                    if self._step(party, move):
                        changed = True
            if not changed:
                return
        raise RuntimeError("agents did not quiesce within a tick")
