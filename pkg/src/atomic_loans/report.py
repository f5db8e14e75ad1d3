"""Outcome reports computed from a trace alone, and trace validation by replay."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .scenarios import Scenario, ScenarioError, run_scenario
from .trace import TraceEvent

CHAIN_NAMES = ("ACoin", "BCoin")


@dataclass
class SecretSighting:
    label: str
    chain: str
    time: int
    actor: str
    via: str


@dataclass
class RunReport:
    label: str
    terminal: str | None
    initial: dict            # owner -> {chain: int}
    deltas: dict             # owner -> {chain: int}
    secrets: list = field(default_factory=list)
    periods: dict = field(default_factory=dict)
    start: int = 0

    @property
    def final(self) -> dict:
        out = {}
        for who in sorted(set(self.initial) | set(self.deltas)):
            a = self.initial.get(who, {})
            d = self.deltas.get(who, {})
            out[who] = {c: a.get(c, 0) + d.get(c, 0) for c in CHAIN_NAMES}
        return out

    def to_text(self) -> str:
        lines = [f"scenario: {self.label}", f"terminal state: {self.terminal or '-'}", ""]
        if self.periods:
            lines.append("periods (epoch seconds):")
            for name, t in self.periods.items():
                lines.append(f"  {name:<20} {t}  (start +{t - self.start}s)")
            lines.append("")
        final = self.final
        header = f"{'party':<18}{'initial':>26}{'final':>26}{'delta':>26}"
        lines += ["balances:", header, "-" * len(header)]
        for who in sorted(final):
            for c in CHAIN_NAMES:
                a = self.initial.get(who, {}).get(c, 0)
                d = self.deltas.get(who, {}).get(c, 0)
                if a == 0 and d == 0:
                    continue
                lines.append(f"{who:<18}{_amt(a, c):>26}{_amt(final[who][c], c):>26}{_amt(d, c, True):>26}")
        lines += ["", "secrets revealed:"]
        if not self.secrets:
            lines.append("  (none)")
        for s in self.secrets:
            lines.append(f"  {s.label:<6} on {s.chain:<6} at {s.time} by {s.actor} via {s.via}")
        return "\n".join(lines) + "\n"


def _amt(n: int, chain: str, signed: bool = False) -> str:
    return f"{n:+d} {chain}" if signed else f"{n:d} {chain}"


def _owner(name: str) -> str:
    return "locked" if name == "script" else name


def report_from_trace(events: list[TraceEvent]) -> RunReport:
    """Rebuild balances, terminal state and secret history from trace events only."""
    label, start = "?", events[0].time if events else 0
    initial: dict = defaultdict(lambda: dict.fromkeys(CHAIN_NAMES, 0))
    deltas: dict = defaultdict(lambda: dict.fromkeys(CHAIN_NAMES, 0))
    secrets, periods, terminal = [], {}, None
    loan_cid = None
    memos = {}  # txid -> memo, so ACoin sightings name the spend rather than a hash
    for e in events:
        d = e.detail
        if e.kind == "scenario":
            label, start = d.get("label", label), e.time
        elif e.kind == "loan-terms":
            loan_cid = d.get("contract")
            periods = {"loan_start": start, **d.get("timeline", {})}
        elif e.kind == "swap-terms":
            periods = {"start": start, "bcoin_refund": d["refund_bcoin"], "acoin_refund": d["refund_acoin"]}
        elif e.kind == "mint":
            if e.chain == "ACoin":
                for o in d["outputs"]:
                    initial[_owner(o["owner"])]["ACoin"] += o["value"]
            else:
                initial[d["account"]]["BCoin"] += d["amount"]
        elif e.kind == "tx-accepted":
            memos[d["txid"]] = d.get("memo") or d["txid"][:16]
            for i in d["inputs"]:
                deltas[_owner(i["owner"])]["ACoin"] -= i["value"]
            for o in d["outputs"]:
                deltas[_owner(o["owner"])]["ACoin"] += o["value"]
        elif e.kind == "transfer":
            deltas[d["src"]]["BCoin"] -= d["amount"]
            deltas[d["dst"]]["BCoin"] += d["amount"]
        elif e.kind == "state-transition" and d.get("contract") == loan_cid:
            terminal = d["to"]
        elif e.kind == "secret-revealed":
            via = d.get("via", "")
            secrets.append(SecretSighting(d["label"], e.chain, e.time, e.actor, memos.get(via, via)))
        elif e.kind == "secret-shared":
            secrets.append(SecretSighting(d["label"], "offchain", e.time, e.actor, f"to {d['to']}"))
    for who in list(initial):
        deltas[who]  # every holder appears in both maps
    return RunReport(label, terminal, dict(initial), dict(deltas), secrets, periods, start)


@dataclass
class Validation:
    ok: bool
    message: str
    line: int | None = None  # 1-based line of the first divergence


def validate_events(events: list[TraceEvent], lines: list[str] | None = None) -> Validation:
    """Re-run the scenario embedded in the trace header and compare event by event."""
    if not events or events[0].kind != "scenario" or "config" not in events[0].detail:
        return Validation(False, "trace does not start with a scenario header", 1)
    try:
        scenario = Scenario.from_config(events[0].detail["config"])
    except ScenarioError as exc:
        return Validation(False, f"scenario header unusable: {exc}", 1)
    trace, _ = run_scenario(scenario)
    expected = trace.lines()
    got = lines if lines is not None else [e.to_json() for e in events]
    for n, (want, have) in enumerate(zip(expected, got), 1):
        if want != have:
            return Validation(False, f"line {n} diverges from replay\n  expected: {want}\n  found:    {have}", n)
    if len(got) < len(expected):
        n = len(got) + 1
        return Validation(False, f"trace ends early: replay has {len(expected)} events, trace {len(got)}", n)
    if len(got) > len(expected):
        n = len(expected) + 1
        return Validation(False, f"trace has {len(got) - len(expected)} extra events after replay ends", n)
    return Validation(True, f"{len(got)} events reproduced")
