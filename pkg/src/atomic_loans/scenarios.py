"""Scenario definitions, the world builder, and the scenario runner."""

from __future__ import annotations

import configparser
import io
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .agents import ROLE_MOVES, Engine, SecretAccessError, Strategy, View, World, bidder_label
from .chain_sim import (
    After,
    All,
    Any,
    Before,
    Clock,
    ContractChain,
    MultiSig2of2,
    PreimageOf,
    SignedBy,
    UtxoChain,
    pay_to,
)
from .collateral import CollateralParams, PeriodTimeline
from .loan_contract import TERMINAL_STATES, HtlcContract, LoanContract, LoanTerms
from .primitives import KeyPair, commit, generate_secret
from .trace import Tracer

DAY = 86_400
DEFAULT_START = 1_700_000_000
LOAN_ROLES = ("borrower", "lender", "bidder")
SWAP_ROLES = ("initiator", "responder")


class ScenarioError(ValueError):
    """The scenario definition is inconsistent (unknown party, bad schedule, undercollateralized...)."""


@dataclass(frozen=True)
class PartyConfig:
    name: str
    role: str
    acoin: int = 0
    bcoin: int = 0
    controller: str | None = None  # set for pseudonyms (a double-agent bidder)


def default_timeline(start: int = DEFAULT_START) -> PeriodTimeline:
    return PeriodTimeline(
        withdraw_deadline=start + 2 * DAY,
        loan_expiry=start + 30 * DAY,
        bidding_end=start + 33 * DAY,
        settlement_deadline=start + 35 * DAY,
        seizure_end=start + 45 * DAY,
    )


def default_schedule(start: int, t: PeriodTimeline) -> list[int]:
    """One tick at each boundary, one halfway between boundaries, and one just past seizure_end."""
    marks = [start, t.withdraw_deadline, t.loan_expiry, t.bidding_end, t.settlement_deadline, t.seizure_end]
    ticks = []
    for a, b in zip(marks, marks[1:]):
        ticks += [a, (a + b) // 2]
    return ticks + [t.seizure_end, t.seizure_end + 1]


def default_repay_time(start: int, t: PeriodTimeline) -> int:
    return (t.withdraw_deadline + t.loan_expiry) // 2


@dataclass
class Scenario:
    label: str
    kind: str = "loan"  # or "swap"
    seed: int = 0
    principal: int = 10_000
    interest: int = 500
    liquidation_fee: int = 500
    seizable: int = 6_000
    refundable: int = 9_000
    collateral_ratio: Fraction = Fraction(3, 2)
    rate: Fraction = Fraction(1)  # BCoin per ACoin
    start: int = DEFAULT_START
    timeline: PeriodTimeline | None = None
    schedule: list = field(default_factory=list)
    parties: list = field(default_factory=list)
    strategies: dict = field(default_factory=dict)
    swap: dict = field(default_factory=dict)  # lock_time, acoin_amount, bcoin_amount
    description: str = ""

    def __post_init__(self):
        self.rate = Fraction(self.rate)
        self.collateral_ratio = Fraction(self.collateral_ratio)
        if self.timeline is None:
            self.timeline = default_timeline(self.start)
        if not self.schedule:
            if self.kind == "swap":
                T = self.swap["lock_time"]
                self.schedule = [self.start, self.start + T // 2, self.start + T, self.start + T + 1]
            else:
                self.schedule = default_schedule(self.start, self.timeline)

    # ---- validation ----

    def party(self, name: str) -> PartyConfig:
        for p in self.parties:
            if p.name == name:
                return p
        raise ScenarioError(f"unknown party {name!r}")

    def by_role(self, role: str) -> list:
        return [p for p in self.parties if p.role == role]

    def strategy(self, name: str) -> Strategy:
        return self.strategies.get(name) or Strategy()

    def validate(self) -> None:
        names = [p.name for p in self.parties]
        if len(set(names)) != len(names):
            raise ScenarioError("duplicate party names")
        for name in self.strategies:
            if name not in names:
                raise ScenarioError(f"strategy references unknown party {name!r}")
        for p in self.parties:
            if p.role not in ROLE_MOVES:
                raise ScenarioError(f"party {p.name!r} has unknown role {p.role!r}")
            if p.controller is not None and p.controller not in names:
                raise ScenarioError(f"party {p.name!r} controlled by unknown party {p.controller!r}")
            if p.acoin < 0 or p.bcoin < 0:
                raise ScenarioError("initial holdings must be non-negative")
        if any(a >= b for a, b in zip(self.schedule, self.schedule[1:])):
            raise ScenarioError("clock schedule must be strictly increasing")
        if self.schedule[0] < self.start:
            raise ScenarioError("schedule starts before the scenario start time")
        roles = SWAP_ROLES if self.kind == "swap" else ("borrower", "lender")
        for role in roles:
            if len(self.by_role(role)) != 1:
                raise ScenarioError(f"scenario needs exactly one {role}")
        if self.kind == "swap":
            if not {"lock_time", "acoin_amount", "bcoin_amount"} <= self.swap.keys():
                raise ScenarioError("swap scenarios need lock_time, acoin_amount, bcoin_amount")
            return
        if self.kind != "loan":
            raise ScenarioError(f"unknown scenario kind {self.kind!r}")
        if self.seizable <= 0 or self.refundable <= 0:
            raise ScenarioError("collateral split must have two positive parts")
        if (self.seizable + self.refundable) * self.rate < self.collateral_ratio * self.principal:
            raise ScenarioError(
                f"collateral {self.seizable + self.refundable} ACoin at rate {self.rate} is below "
                f"{self.collateral_ratio} x principal {self.principal}")
        if self.timeline.withdraw_deadline <= self.start:
            raise ScenarioError("withdraw deadline must be after the start time")

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)

    # ---- config file round trip ----

    def to_config(self) -> str:
        cp = _parser()
        cp["scenario"] = {
            "label": self.label, "kind": self.kind, "seed": str(self.seed),
            "rate": str(self.rate), "start": str(self.start),
            "schedule": ", ".join(str(t) for t in self.schedule),
        }
        if self.description:
            cp["scenario"]["description"] = self.description
        if self.kind == "loan":
            cp["terms"] = {
                "principal": str(self.principal), "interest": str(self.interest),
                "liquidation_fee": str(self.liquidation_fee), "seizable": str(self.seizable),
                "refundable": str(self.refundable), "collateral_ratio": str(self.collateral_ratio),
            }
            cp["timeline"] = {k: str(v) for k, v in self.timeline.as_dict().items()}
        else:
            cp["swap"] = {k: str(v) for k, v in sorted(self.swap.items())}
        for p in self.parties:
            sec = {"role": p.role, "acoin": str(p.acoin), "bcoin": str(p.bcoin)}
            if p.controller:
                sec["controller"] = p.controller
            cp[f"party.{p.name}"] = sec
        for name, st in self.strategies.items():
            sec = dict(sorted(st.options.items()))
            sec.update({f"param.{k}": str(v) for k, v in sorted(st.params.items())})
            if sec:
                cp[f"strategy.{name}"] = sec
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_config(cls, text: str) -> "Scenario":
        cp = _parser()
        try:
            cp.read_string(text)
            s = cp["scenario"]
            kw = dict(label=s["label"], kind=s.get("kind", "loan"), seed=int(s.get("seed", "0")),
                      rate=Fraction(s.get("rate", "1")), start=int(s.get("start", str(DEFAULT_START))),
                      description=s.get("description", ""))
            if s.get("schedule", "").strip():
                kw["schedule"] = [int(x) for x in s["schedule"].split(",")]
            if cp.has_section("terms"):
                t = cp["terms"]
                for k in ("principal", "interest", "liquidation_fee", "seizable", "refundable"):
                    if k in t:
                        kw[k] = int(t[k])
                if "collateral_ratio" in t:
                    kw["collateral_ratio"] = Fraction(t["collateral_ratio"])
            if cp.has_section("timeline"):
                kw["timeline"] = PeriodTimeline(**{k: int(v) for k, v in cp["timeline"].items()})
            if cp.has_section("swap"):
                kw["swap"] = {k: int(v) for k, v in cp["swap"].items()}
            parties, strategies = [], {}
            for sec in cp.sections():
                if sec.startswith("party."):
                    d = cp[sec]
                    parties.append(PartyConfig(sec[6:], d["role"], int(d.get("acoin", "0")),
                                               int(d.get("bcoin", "0")), d.get("controller") or None))
                elif sec.startswith("strategy."):
                    d = cp[sec]
                    opts = {k: v for k, v in d.items() if not k.startswith("param.")}
                    params = {k[6:]: int(v) for k, v in d.items() if k.startswith("param.")}
                    strategies[sec[9:]] = Strategy(opts, params)
            kw["parties"], kw["strategies"] = parties, strategies
            sc = cls(**kw)
        except (KeyError, ValueError, configparser.Error) as exc:
            raise ScenarioError(f"bad scenario config: {exc}") from None
        sc.validate()
        return sc

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path, encoding="utf-8") as f:
            return cls.from_config(f.read())


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    return cp


# ---- world construction ----


def build_world(s: Scenario, tracer: Tracer) -> World:
    s.validate()
    rng = random.Random(s.seed)
    clock = Clock(s.start)
    acoin, bcoin = UtxoChain(clock, tracer), ContractChain(clock, tracer)
    keys = {p.name: KeyPair.generate(rng) for p in s.parties}
    for name, k in keys.items():
        acoin.names[k.public] = name

    labels = ["A"] if s.kind == "swap" else ["A1", "A2", "B1", "B2"]
    labels += [bidder_label(p.name) for p in s.by_role("bidder")]
    secrets = {label: generate_secret(rng) for label in labels}
    hashes = {label: commit(sec) for label, sec in secrets.items()}
    if len(set(hashes.values())) != len(hashes):
        raise RuntimeError("secret commitment collision")
    for label, h in hashes.items():
        tracer.labels[h.digest] = label

    vault = {p.name: {} for p in s.parties}
    for label, sec in secrets.items():
        if label == "A":
            owner = s.by_role("initiator")[0].name
        elif label[0] == "A":
            owner = s.by_role("borrower")[0].name
        elif label[0] == "B":
            owner = s.by_role("lender")[0].name
        else:
            owner = next(p.name for p in s.by_role("bidder") if bidder_label(p.name) == label)
        vault[owner][label] = sec

    world = World(clock=clock, acoin=acoin, bcoin=bcoin, tracer=tracer, keys=keys,
                  roles={p.name: p.role for p in s.parties},
                  controllers={p.name: p.controller for p in s.parties if p.controller},
                  vault=vault, hashes=hashes, rate=s.rate,
                  params={name: dict(st.params) for name, st in s.strategies.items()})

    for p in s.parties:
        if p.acoin:
            acoin.mint(pay_to(keys[p.name].public), p.acoin)
        if p.bcoin:
            bcoin.mint(p.name, p.bcoin)

    if s.kind == "swap":
        init, resp = s.by_role("initiator")[0].name, s.by_role("responder")[0].name
        T = s.swap["lock_time"]
        htlc = HtlcContract(funder=resp, recipient=init, h=hashes["A"],
                            refund_time=s.start + T // 2, amount=s.swap["bcoin_amount"])
        cid = bcoin.deploy(htlc)
        world.public = {"swap": {"htlc": cid, "initiator_refund": s.start + T,
                                 "acoin_amount": s.swap["acoin_amount"]}}
        tracer.emit(s.start, "system", "system", "swap-terms", htlc=cid,
                    acoin_lock=T, bcoin_lock=T // 2, refund_acoin=s.start + T,
                    refund_bcoin=s.start + T // 2)
    else:
        borrower, lender = s.by_role("borrower")[0].name, s.by_role("lender")[0].name
        params = CollateralParams(
            alice_pub=keys[borrower].public, bob_pub=keys[lender].public,
            h_A1=hashes["A1"], h_A2=hashes["A2"], h_B1=hashes["B1"], h_B2=hashes["B2"],
            seizable_value=s.seizable, refundable_value=s.refundable, timeline=s.timeline)
        terms = LoanTerms(s.principal, s.interest, s.liquidation_fee, params, borrower, lender)
        cid = bcoin.deploy(LoanContract(terms))
        world.public = {"loan": cid}
        tracer.emit(s.start, "system", "system", "loan-terms", contract=cid,
                    principal=s.principal, interest=s.interest, liquidation_fee=s.liquidation_fee,
                    seizable=s.seizable, refundable=s.refundable, rate=str(s.rate),
                    timeline=s.timeline.as_dict(),
                    hashes={label: h.hex() for label, h in sorted(hashes.items())})
    return world


def build_engine(s: Scenario, world: World, moves=None, honest=None, chooser=None,
                 budget: int = 10**9) -> Engine:
    table = {p.name: (moves or {}).get(p.name) or ROLE_MOVES[p.role]() for p in s.parties}
    if honest is None:
        honest = {p.name for p in s.parties}
    eng = Engine(world, table, [p.name for p in s.parties], honest, chooser, budget)
    for name, st in s.strategies.items():
        for move, opt in st.options.items():
            eng.forced[(name, move)] = opt
    return eng


# ---- outcome ----


@dataclass
class Outcome:
    label: str
    terminal: str | None
    balances: dict      # party/"locked"/contract account -> {"ACoin": n, "BCoin": n}
    deltas: dict        # same keys, change versus the start
    revealed: dict      # chain -> sorted secret labels
    conservation: bool
    liveness: list = field(default_factory=list)
    rate: Fraction = Fraction(1)

    def value_delta(self, *parties) -> Fraction:
        """Combined change in value, in BCoin at the scenario rate."""
        total = Fraction(0)
        for p in parties:
            d = self.deltas.get(p, {})
            total += d.get("BCoin", 0) + d.get("ACoin", 0) * self.rate
        return total


@dataclass
class ScenarioTrace:
    label: str
    events: list
    final_balances: dict

    def lines(self) -> list[str]:
        return [e.to_json() for e in self.events]

    def dumps(self) -> str:
        return "".join(line + "\n" for line in self.lines())


def holdings(world: World) -> dict:
    out: dict = {}
    for name, k in world.keys.items():
        out[name] = {"ACoin": world.acoin.holdings(k.public), "BCoin": world.bcoin.balance(name)}
    owned = {k.public for k in world.keys.values()}
    locked = sum(o.value for o in world.acoin.utxos.values()
                 if not (isinstance(o.condition, SignedBy) and o.condition.pubkey in owned))
    out["locked"] = {"ACoin": locked, "BCoin": 0}
    for acct, bal in sorted(world.bcoin.balances.items()):
        if acct not in world.keys:
            out[acct] = {"ACoin": 0, "BCoin": bal}
    return out


def conserved(world: World) -> bool:
    return (world.acoin.total_value() == world.acoin.minted
            and world.bcoin.total_value() == world.bcoin.minted
            and all(v >= 0 for v in world.bcoin.balances.values()))


def satisfiable(cond, signers: set, known: set, now: int, registry_sigs: set = frozenset()) -> bool:
    """Could a holder of ``signers`` keys and ``known`` preimage digests satisfy ``cond`` at ``now``?

    ``registry_sigs`` are keys whose signature is already available (deposited multisig halves).
    """
    if isinstance(cond, PreimageOf):
        return cond.hash.digest in known
    if isinstance(cond, SignedBy):
        return cond.pubkey in signers
    if isinstance(cond, MultiSig2of2):
        have = signers | registry_sigs
        return cond.first in have and cond.second in have
    if isinstance(cond, After):
        return now >= cond.t
    if isinstance(cond, Before):
        return now < cond.t
    if isinstance(cond, All):
        return all(satisfiable(t, signers, known, now, registry_sigs) for t in cond.terms)
    if isinstance(cond, Any):
        return any(satisfiable(t, signers, known, now, registry_sigs) for t in cond.terms)
    return False


def liveness_problems(world: World, honest) -> list[str]:
    """Funds still locked with no branch any honest party can satisfy right now."""
    problems = []
    now = world.clock.now
    loan = world.loan
    reg = set()
    if loan is not None and loan.highest is not None:
        c = loan.terms.collateral
        if loan.registry.sig_alice is not None:
            reg.add(c.alice_pub)
        if loan.registry.sig_bob is not None:
            reg.add(c.bob_pub)
    owned = {k.public for k in world.keys.values()}
    for out in sorted(world.acoin.utxos.values(), key=lambda o: o.id):
        if isinstance(out.condition, SignedBy) and out.condition.pubkey in owned:
            continue
        ok = False
        for party in sorted(honest):
            v = View(world, party)
            known = {h.digest for label, h in world.hashes.items() if v.knows(label)}
            signers = {world.keys[party].public}
            ctrl = world.controllers.get(party)
            if ctrl:
                signers.add(world.keys[ctrl].public)
            if satisfiable(out.condition, signers, known, now, reg):
                ok = True
                break
        if not ok:
            problems.append(f"ACoin output {out.id} ({out.value}) has no live branch an honest party can satisfy")
    if loan is not None:
        if loan.state not in TERMINAL_STATES:
            problems.append(f"loan stuck in non-terminal state {loan.state}")
        escrow = loan.escrow()
        if escrow:
            unclaimed = {p: a for p, a in loan.shares().items()
                         if loan.state.value == "Settled" and p not in loan.claimed and a > 0}
            if sum(unclaimed.values()) != escrow:
                problems.append(f"loan escrow holds {escrow} BCoin nobody can claim")
    for cid, c in world.bcoin.contracts.items():
        if isinstance(c, HtlcContract) and c.state == "Locked":
            problems.append(f"HTLC {cid} still locked")
    return problems


def outcome_of(s: Scenario, world: World, start: dict, conservation: bool, honest) -> Outcome:
    end = holdings(world)
    deltas = {}
    for k in sorted(set(start) | set(end)):
        a, b = start.get(k, {"ACoin": 0, "BCoin": 0}), end.get(k, {"ACoin": 0, "BCoin": 0})
        deltas[k] = {c: b[c] - a[c] for c in ("ACoin", "BCoin")}
    lab = world.tracer.label if world.tracer.enabled else (lambda d: d[:4].hex())
    names = {h.digest: label for label, h in world.hashes.items()}
    revealed = {
        "ACoin": sorted(names.get(commit(x).digest, lab(commit(x).digest)) for x in world.acoin.revealed),
        "BCoin": sorted(names.get(commit(x).digest, lab(commit(x).digest)) for x in world.bcoin.revealed),
    }
    loan = world.loan
    return Outcome(s.label, str(loan.state) if loan is not None else None, end, deltas, revealed,
                   conservation, liveness_problems(world, honest), s.rate)


def honest_parties(s: Scenario) -> set:
    return {p.name for p in s.parties if s.strategy(p.name).is_honest}


def run_scenario(s: Scenario, moves=None) -> tuple[ScenarioTrace, Outcome]:
    """Run a scenario to the end of its schedule. Pure function of ``s`` (and ``moves``)."""
    tracer = Tracer()
    tracer.emit(s.start, "system", "system", "scenario", label=s.label, config=s.to_config())
    world = build_world(s, tracer)
    start = holdings(world)
    eng = build_engine(s, world, moves)
    ok = conserved(world)
    for i, t in enumerate(s.schedule):
        try:
            eng.run_tick(i, t)
        except SecretAccessError as exc:
            tracer.emit(world.clock.now, "system", "system", "aborted", reason=str(exc))
            raise
        ok = ok and conserved(world)
    out = outcome_of(s, world, start, ok, honest_parties(s))
    tracer.emit(world.clock.now, "system", "system", "final-balances",
                balances=out.balances, terminal=out.terminal)
    return ScenarioTrace(s.label, list(tracer.events), out.balances), out


# ---- builtin scenarios ----


def _loan_parties(*bidders, controller=None):
    ps = [PartyConfig("alice", "borrower", acoin=15_000, bcoin=1_000),
          PartyConfig("bob", "lender", bcoin=10_000)]
    for name in bidders:
        ps.append(PartyConfig(name, "bidder", bcoin=20_000,
                              controller=controller if name == "charlie" else None))
    return ps


def _loan(label, description, parties, strategies=None, **kw) -> Scenario:
    s = Scenario(label, parties=parties, description=description, **kw)
    repay_at = default_repay_time(s.start, s.timeline)
    strategies = strategies or {}
    alice = strategies.setdefault("alice", Strategy())
    alice.params.setdefault("repay_at", repay_at)
    s.strategies = strategies
    return s


def builtin_scenarios() -> list[Scenario]:
    swap = Scenario(
        "atomic_swap_baseline", kind="swap",
        parties=[PartyConfig("alice", "initiator", acoin=1_000),
                 PartyConfig("bob", "responder", bcoin=1_000)],
        swap={"lock_time": 2 * DAY, "acoin_amount": 1_000, "bcoin_amount": 1_000},
        description="Plain cross-chain swap: ACoin locked for T, BCoin for T/2.")
    default = {"repay": "omit"}
    return [
        swap,
        _loan("happy_path", "Alice withdraws, repays, Bob accepts and Alice refunds her collateral.",
              _loan_parties()),
        _loan("default_bidding", "Alice defaults; two bidders compete and the winner settles.",
              _loan_parties("dave", "charlie"),
              {"alice": Strategy(dict(default)), "dave": Strategy(params={"bid": 11_000}),
               "charlie": Strategy(params={"bid": 12_000})}),
        _loan("default_no_bids_seizure", "Alice defaults and nobody bids; Bob seizes, Alice refunds.",
              _loan_parties(), {"alice": Strategy(dict(default))}),
        _loan("nonreciprocating_lender",
              "Alice repays but Bob tries to auction instead of accepting; the contract blocks it.",
              _loan_parties(), {"bob": Strategy({"accept_repayment": "omit"}, {"greedy_bidding": 1})}),
        _loan("double_agent_alice",
              "Alice bids through the pseudonym charlie and withholds A2; Bob counter-reveals.",
              _loan_parties("charlie", controller="alice"),
              {"alice": Strategy({"repay": "omit", "reveal_settlement_secret": "omit"}),
               "charlie": Strategy(params={"bid": 12_000})}),
        _loan("winner_walks_away", "The winning bidder never reveals C and reclaims the stake.",
              _loan_parties("charlie"),
              {"alice": Strategy(dict(default)),
               "charlie": Strategy({"reveal_secret_c": "omit"}, {"bid": 12_000})}),
        _loan("lender_unresponsive_refund",
              "Bob funds but never hands over B1; Alice recovers everything at seizure_end.",
              _loan_parties(), {"bob": Strategy({"share_b1": "omit"})}),
        _loan("withheld_signatures", "Alice refuses to sign the settlement; the auction fails.",
              _loan_parties("charlie"),
              {"alice": Strategy({"repay": "omit", "sign_settlement": "omit"}),
               "charlie": Strategy(params={"bid": 12_000})}),
    ]


def enumeration_base(**kw) -> Scenario:
    """All-honest loan with one bidder, the starting point for adversarial enumeration."""
    return _loan("enumeration_base", "Honest loan with a standing 12000 bidder.",
                 _loan_parties("charlie"), {"charlie": Strategy(params={"bid": 12_000})}, **kw)


def get_scenario(name: str) -> Scenario:
    for s in builtin_scenarios():
        if s.label == name:
            return s
    if name == "enumeration_base":
        return enumeration_base()
    raise KeyError(name)
