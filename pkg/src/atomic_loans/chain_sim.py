"""Two deterministic ledgers under one epoch clock.

ACoin is a UTXO chain whose outputs are locked by condition trees; BCoin is an
account chain that hosts stateful contracts. There are no blocks, fees or
reorgs: an accepted transaction is final immediately.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import NamedTuple

from .primitives import (
    DEFAULT_SCHEME,
    MAX_TIME,
    Secret,
    SecretHash,
    Signature,
    check_timestamp,
    commit,
    encode,
    encode_int,
)
from .trace import NULL_TRACER, Tracer

MAX_DEPTH = 16


class ProtocolError(Exception):
    """An action refused by a chain. ``reason`` is a short kebab-case code."""

    def __init__(self, reason: str, msg: str = ""):
        super().__init__(f"{reason}: {msg}" if msg else reason)
        self.reason = reason


class TxRejected(ProtocolError):
    pass


class ContractError(ProtocolError):
    pass


# --- spend conditions -------------------------------------------------------


class Condition:
    def depth(self) -> int:
        return 1

    def to_json(self) -> dict:
        raise NotImplementedError

    def serialize(self) -> bytes:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")).encode()


@dataclass(frozen=True)
class PreimageOf(Condition):
    hash: SecretHash

    def to_json(self):
        return {"type": "preimage", "hash": self.hash.hex()}


@dataclass(frozen=True)
class SignedBy(Condition):
    pubkey: bytes

    def to_json(self):
        return {"type": "signed", "pubkey": self.pubkey.hex()}


@dataclass(frozen=True)
class MultiSig2of2(Condition):
    first: bytes
    second: bytes

    def to_json(self):
        return {"type": "multisig2", "keys": [self.first.hex(), self.second.hex()]}


@dataclass(frozen=True)
class After(Condition):
    """Live when now >= t."""

    t: int

    def __post_init__(self):
        check_timestamp(self.t)

    def to_json(self):
        return {"type": "after", "t": self.t}


@dataclass(frozen=True)
class Before(Condition):
    """Live when now < t."""

    t: int

    def __post_init__(self):
        check_timestamp(self.t)

    def to_json(self):
        return {"type": "before", "t": self.t}


@dataclass(frozen=True)
class _Compound(Condition):
    terms: tuple

    def __init__(self, *terms):
        if len(terms) == 1 and isinstance(terms[0], (list, tuple)):
            terms = tuple(terms[0])
        object.__setattr__(self, "terms", tuple(terms))
        if not self.terms:
            raise ValueError(f"{type(self).__name__} needs at least one term")
        for t in self.terms:
            if not isinstance(t, Condition):
                raise TypeError(f"not a condition: {t!r}")
        if self.depth() > MAX_DEPTH:
            raise ValueError(f"condition tree deeper than {MAX_DEPTH}")

    def depth(self) -> int:
        return 1 + max(t.depth() for t in self.terms)

    def to_json(self):
        return {"type": type(self).__name__.lower(), "terms": [t.to_json() for t in self.terms]}


class All(_Compound):
    pass


class Any(_Compound):
    pass


def condition_from_json(d: dict) -> Condition:
    kind = d["type"]
    if kind == "preimage":
        return PreimageOf(SecretHash(bytes.fromhex(d["hash"])))
    if kind == "signed":
        return SignedBy(bytes.fromhex(d["pubkey"]))
    if kind == "multisig2":
        a, b = d["keys"]
        return MultiSig2of2(bytes.fromhex(a), bytes.fromhex(b))
    if kind == "after":
        return After(d["t"])
    if kind == "before":
        return Before(d["t"])
    if kind in ("all", "any"):
        cls = All if kind == "all" else Any
        return cls(*[condition_from_json(t) for t in d["terms"]])
    raise ValueError(f"unknown condition type {kind!r}")


def pay_to(pubkey: bytes) -> SignedBy:
    """A plain address output: spendable by the key holder alone."""
    return SignedBy(pubkey)


@dataclass(frozen=True)
class Witness:
    preimages: frozenset = frozenset()
    signatures: tuple = ()  # (pubkey, Signature) pairs

    def __post_init__(self):
        object.__setattr__(self, "preimages", frozenset(self.preimages))
        object.__setattr__(self, "signatures", tuple(self.signatures))

    def digests(self) -> dict:
        return {commit(s).digest: s for s in self.preimages}


def _signed(witness: Witness, pubkey: bytes, message: bytes, scheme) -> bool:
    return any(pk == pubkey and scheme.verify(pk, message, sig) for pk, sig in witness.signatures)


def eval_condition(condition: Condition, witness: Witness, now: int,
                   message: bytes = b"", scheme=DEFAULT_SCHEME, _digests=None) -> bool:
    """Evaluate a condition tree. Signatures are checked over ``message``."""
    if _digests is None:
        _digests = witness.digests()
    c = condition
    if isinstance(c, PreimageOf):
        return c.hash.digest in _digests
    if isinstance(c, SignedBy):
        return _signed(witness, c.pubkey, message, scheme)
    if isinstance(c, MultiSig2of2):
        return (_signed(witness, c.first, message, scheme)
                and _signed(witness, c.second, message, scheme))
    if isinstance(c, After):
        return now >= c.t
    if isinstance(c, Before):
        return now < c.t
    if isinstance(c, All):
        return all(eval_condition(t, witness, now, message, scheme, _digests) for t in c.terms)
    if isinstance(c, Any):
        return any(eval_condition(t, witness, now, message, scheme, _digests) for t in c.terms)
    raise TypeError(f"not a condition: {c!r}")


def preimage_hashes(condition: Condition) -> set:
    if isinstance(condition, PreimageOf):
        return {condition.hash.digest}
    if isinstance(condition, _Compound):
        out = set()
        for t in condition.terms:
            out |= preimage_hashes(t)
        return out
    return set()


# --- transactions -----------------------------------------------------------


class OutPoint(NamedTuple):
    txid: str
    index: int

    def __str__(self):
        return f"{self.txid[:16]}:{self.index}"

    def encode(self) -> bytes:
        return encode(bytes.fromhex(self.txid), encode_int(self.index))


@dataclass(frozen=True)
class Output:
    id: OutPoint
    value: int
    condition: Condition

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("output value must be positive")


@dataclass(frozen=True)
class TxOut:
    value: int
    condition: Condition


@dataclass(frozen=True)
class TxIn:
    outpoint: OutPoint
    witness: Witness = field(default_factory=Witness)


def sighash(chain_id: str, outpoints, outputs) -> bytes:
    """Canonical message a spender signs: chain id, spent outpoints, (destination, value) pairs."""
    parts = [chain_id.encode(), encode_int(len(outpoints))]
    parts += [op.encode() for op in outpoints]
    parts.append(encode_int(len(outputs)))
    for o in outputs:
        parts.append(encode(o.condition.serialize(), encode_int(o.value)))
    return encode(*parts)


@dataclass(frozen=True)
class Transaction:
    inputs: tuple
    outputs: tuple
    submitted_at: int | None = None
    nonce: int = 0

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))

    def sighash(self, chain_id: str = "ACoin") -> bytes:
        return sighash(chain_id, [i.outpoint for i in self.inputs], self.outputs)

    @property
    def txid(self) -> str:
        return hashlib.sha256(encode(self.sighash(), encode_int(self.nonce))).hexdigest()


class Clock:
    def __init__(self, now: int = 0):
        self.now = check_timestamp(now)

    def advance(self, to: int) -> None:
        check_timestamp(to)
        if to < self.now:
            raise ValueError(f"clock cannot go backwards ({self.now} -> {to})")
        self.now = to


def advance_clock(clock: Clock, to: int) -> None:
    clock.advance(to)


# --- ACoin ------------------------------------------------------------------


class UtxoChain:
    chain_id = "ACoin"

    def __init__(self, clock: Clock, tracer: Tracer = NULL_TRACER, scheme=DEFAULT_SCHEME):
        self.clock = clock
        self.tracer = tracer
        self.scheme = scheme
        self.utxos: dict[OutPoint, Output] = {}
        self.spent: set[OutPoint] = set()
        self.archive: dict[OutPoint, Output] = {}
        self.revealed: set[Secret] = set()
        self.log: list[Transaction] = []
        self.names: dict[bytes, str] = {}
        self.minted = 0
        self._mints = 0

    def clone(self, clock: Clock, tracer: Tracer = NULL_TRACER) -> "UtxoChain":
        c = UtxoChain.__new__(UtxoChain)
        c.__dict__.update(self.__dict__)
        c.clock, c.tracer = clock, tracer
        c.utxos = dict(self.utxos)
        c.spent = set(self.spent)
        c.archive = dict(self.archive)
        c.revealed = set(self.revealed)
        c.log = list(self.log)
        return c

    def owner(self, condition: Condition) -> str:
        if isinstance(condition, SignedBy):
            return self.names.get(condition.pubkey, condition.pubkey[:4].hex())
        return "script"

    def total_value(self) -> int:
        return sum(o.value for o in self.utxos.values())

    def _add_outputs(self, tx: Transaction) -> list[Output]:
        txid = tx.txid
        created = []
        for i, o in enumerate(tx.outputs):
            out = Output(OutPoint(txid, i), o.value, o.condition)
            self.utxos[out.id] = out
            self.archive[out.id] = out
            created.append(out)
        return created

    def _describe_outputs(self, created):
        return [{"outpoint": str(o.id), "value": o.value, "owner": self.owner(o.condition)}
                for o in created]

    def mint(self, condition: Condition, value: int, actor: str = "system") -> Output:
        tx = Transaction((), (TxOut(value, condition),), self.clock.now, nonce=self._mints)
        self._mints += 1
        (out,) = self._add_outputs(tx)
        self.log.append(tx)
        self.minted += value
        self.tracer.emit(self.clock.now, self.chain_id, actor, "mint",
                         outputs=self._describe_outputs([out]))
        return out

    def _reject(self, tx, actor, reason, msg="", memo=""):
        self.tracer.emit(self.clock.now, self.chain_id, actor, "tx-rejected",
                         reason=reason, memo=memo,
                         inputs=[str(i.outpoint) for i in tx.inputs])
        raise TxRejected(reason, msg)

    def submit_tx(self, tx: Transaction, actor: str = "?", memo: str = "") -> str:
        """Validate and apply ``tx``. Returns the txid; raises TxRejected and leaves state untouched."""
        now = self.clock.now
        ops = [i.outpoint for i in tx.inputs]
        if not ops:
            self._reject(tx, actor, "unknown-output", "no inputs", memo)
        if len(set(ops)) != len(ops):
            self._reject(tx, actor, "double-spend", "input repeated", memo)
        for op in ops:
            if op in self.spent:
                self._reject(tx, actor, "double-spend", str(op), memo)
            if op not in self.utxos:
                self._reject(tx, actor, "unknown-output", str(op), memo)
        if any(o.value <= 0 for o in tx.outputs):
            self._reject(tx, actor, "value-mismatch", "non-positive output", memo)
        if sum(self.utxos[op].value for op in ops) != sum(o.value for o in tx.outputs):
            self._reject(tx, actor, "value-mismatch", "inputs != outputs", memo)
        message = tx.sighash(self.chain_id)
        for txin in tx.inputs:
            cond = self.utxos[txin.outpoint].condition
            digests = txin.witness.digests()
            if not digests.keys() <= preimage_hashes(cond):
                self._reject(tx, actor, "condition-unsatisfied", "stray preimage in witness", memo)
            if not eval_condition(cond, txin.witness, now, message, self.scheme, digests):
                self._reject(tx, actor, "condition-unsatisfied", str(txin.outpoint), memo)

        tx = Transaction(tx.inputs, tx.outputs, now, tx.nonce)
        spent = [self.utxos.pop(op) for op in ops]
        self.spent.update(ops)
        created = self._add_outputs(tx)
        new_secrets = []
        for txin in tx.inputs:
            for s in sorted(txin.witness.preimages, key=lambda s: s.data):
                if s not in self.revealed:
                    self.revealed.add(s)
                    new_secrets.append(s)
        self.log.append(tx)
        tr = self.tracer
        if tr.enabled:
            used = sorted({tr.label(commit(s).digest) for i in tx.inputs for s in i.witness.preimages})
            tr.emit(now, self.chain_id, actor, "tx-accepted", txid=tx.txid, memo=memo,
                    inputs=[{"outpoint": str(o.id), "value": o.value,
                             "owner": self.owner(o.condition)} for o in spent],
                    outputs=self._describe_outputs(created), preimages=used)
            for s in new_secrets:
                h = commit(s).digest
                tr.emit(now, self.chain_id, actor, "secret-revealed", label=tr.label(h),
                        hash=h.hex(), preimage=s.hex(), via=tx.txid)
        return tx.txid

    def scan_revealed(self) -> set:
        return set(self.revealed)

    def find_preimage(self, h: SecretHash) -> Secret | None:
        for s in self.revealed:
            if commit(s) == h:
                return s
        return None

    def outputs_of(self, pubkey: bytes) -> list[Output]:
        return sorted((o for o in self.utxos.values()
                       if isinstance(o.condition, SignedBy) and o.condition.pubkey == pubkey),
                      key=lambda o: o.id)

    def holdings(self, pubkey: bytes) -> int:
        return sum(o.value for o in self.outputs_of(pubkey))

    def revalidate(self) -> list[str]:
        """Re-check every accepted spend against its condition at its submission time."""
        problems = []
        seen = set()
        for tx in self.log:
            message = tx.sighash(self.chain_id)
            for txin in tx.inputs:
                if txin.outpoint in seen:
                    problems.append(f"{tx.txid}: double spend of {txin.outpoint}")
                seen.add(txin.outpoint)
                out = self.archive[txin.outpoint]
                if not eval_condition(out.condition, txin.witness, tx.submitted_at, message, self.scheme):
                    problems.append(f"{tx.txid}: witness fails for {txin.outpoint}")
        return problems


def scan_revealed(chain) -> set:
    return chain.scan_revealed()


def submit_tx(chain: UtxoChain, tx: Transaction, actor: str = "?") -> str:
    return chain.submit_tx(tx, actor)


# --- BCoin ------------------------------------------------------------------


class ContractChain:
    """Account ledger. Contract escrow lives in ordinary accounts named ``contract:<id>``."""

    chain_id = "BCoin"

    def __init__(self, clock: Clock, tracer: Tracer = NULL_TRACER, scheme=DEFAULT_SCHEME):
        self.clock = clock
        self.tracer = tracer
        self.scheme = scheme
        self.balances: dict[str, int] = {}
        self.contracts: dict[str, object] = {}
        self.revealed: set[Secret] = set()
        self.minted = 0

    def clone(self, clock: Clock, tracer: Tracer = NULL_TRACER) -> "ContractChain":
        c = ContractChain.__new__(ContractChain)
        c.__dict__.update(self.__dict__)
        c.clock, c.tracer = clock, tracer
        c.balances = dict(self.balances)
        c.revealed = set(self.revealed)
        c.contracts = {k: v.clone(c) for k, v in self.contracts.items()}
        return c

    @property
    def now(self) -> int:
        return self.clock.now

    def balance(self, account: str) -> int:
        return self.balances.get(account, 0)

    def total_value(self) -> int:
        return sum(self.balances.values())

    def mint(self, account: str, amount: int) -> None:
        if amount < 0:
            raise ValueError("negative mint")
        self.balances[account] = self.balance(account) + amount
        self.minted += amount
        self.tracer.emit(self.now, self.chain_id, "system", "mint", account=account, amount=amount)

    def transfer(self, src: str, dst: str, amount: int, actor: str, memo: str = "") -> None:
        if amount < 0:
            raise ContractError("wrong-amount", "negative transfer")
        if self.balance(src) < amount:
            raise ContractError("insufficient-balance", f"{src} has {self.balance(src)}")
        if amount == 0:
            return
        self.balances[src] -= amount
        self.balances[dst] = self.balance(dst) + amount
        self.tracer.emit(self.now, self.chain_id, actor, "transfer",
                         src=src, dst=dst, amount=amount, memo=memo)

    def reveal(self, secret: Secret, actor: str, via: str) -> None:
        if secret in self.revealed:
            return
        self.revealed.add(secret)
        tr = self.tracer
        if tr.enabled:
            h = commit(secret).digest
            tr.emit(self.now, self.chain_id, actor, "secret-revealed", label=tr.label(h),
                    hash=h.hex(), preimage=secret.hex(), via=via)

    def deploy(self, contract) -> str:
        cid = f"{contract.kind}-{len(self.contracts)}"
        contract.attach(self, cid)
        self.contracts[cid] = contract
        return cid

    def scan_revealed(self) -> set:
        return set(self.revealed)

    def find_preimage(self, h: SecretHash) -> Secret | None:
        for s in self.revealed:
            if commit(s) == h:
                return s
        return None


__all__ = [
    "After", "All", "Any", "Before", "Clock", "Condition", "ContractChain", "ContractError",
    "MAX_DEPTH", "MAX_TIME", "MultiSig2of2", "OutPoint", "Output", "PreimageOf", "ProtocolError",
    "SignedBy", "Signature", "Transaction", "TxIn", "TxOut", "TxRejected", "UtxoChain", "Witness",
    "advance_clock", "condition_from_json", "eval_condition", "pay_to", "scan_revealed",
    "sighash", "submit_tx",
]
