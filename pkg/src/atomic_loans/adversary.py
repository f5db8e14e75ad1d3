"""Exhaustive adversarial enumeration over strategy deviations.

Every decision point of a non-honest party branches into honest / omit /
early / late. The search walks the tick schedule depth first, cloning the
world at each tick boundary. Inside a tick the engine's choices are replayed
from a prefix (an odometer over the decision options), so no mid-tick state
ever needs to be copied. ``depth`` bounds the number of adversarial decisions
on any path; past it, every party behaves honestly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .agents import Strategy
from .loan_contract import LoanState
from .scenarios import (
    Scenario,
    build_engine,
    build_world,
    conserved,
    enumeration_base,
    holdings,
    outcome_of,
)
from .trace import NULL_TRACER

MAX_DEPTH = 16


class DepthError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Violation:
    predicate: str  # lender-safety, borrower-safety, conservation, repaid-then-bidding
    party: str
    detail: str
    decisions: tuple  # ((party, move, option), ...) deviating choices only

    def as_scenario(self, base: Scenario) -> Scenario:
        """The violating run as a stand-alone scenario: the choices become fixed strategy options."""
        strategies = {n: Strategy(dict(st.options), dict(st.params)) for n, st in base.strategies.items()}
        for party, move, option in self.decisions:
            strategies.setdefault(party, Strategy()).options[move] = option
        return replace(base, label=f"{base.label}_violation", strategies=strategies,
                       description=f"{self.predicate} violation for {self.party}: {self.detail}")


@dataclass
class EnumerationResult:
    violations: list
    runs: int
    states: int
    honest: frozenset

    @property
    def ok(self) -> bool:
        return not self.violations


def safety_violations(s: Scenario, outcome, honest) -> list:
    """Check the terminal safety predicates for the honest parties."""
    found = []
    borrower = s.by_role("borrower")[0].name
    lender = s.by_role("lender")[0].name
    rate = s.rate
    owed = s.principal + s.interest + s.liquidation_fee
    if lender in honest and (s.seizable + s.refundable) * rate >= owed:
        d = outcome.value_delta(lender)
        if d < 0:
            found.append(("lender-safety", lender, f"value change {_fmt(d)} BCoin"))
    if borrower in honest:
        mine = [borrower] + [p.name for p in s.parties if p.controller == borrower]
        d = outcome.value_delta(*mine)
        bound = -(s.interest + s.liquidation_fee + s.seizable * rate)
        if d < bound:
            found.append(("borrower-safety", borrower, f"value change {_fmt(d)} BCoin below {_fmt(bound)}"))
    return found


def _fmt(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{float(x):.2f}"


def enumerate_adversarial(base: Scenario | None = None, honest=(), depth: int = 12,
                          max_violations: int | None = None) -> EnumerationResult:
    """Explore all deviations of the non-honest parties, up to ``depth`` adversarial decisions."""
    if not 0 <= depth <= MAX_DEPTH:
        raise DepthError(f"depth must be between 0 and {MAX_DEPTH}")
    base = base or enumeration_base()
    names = {p.name for p in base.parties}
    honest = frozenset(honest)
    unknown = honest - names
    if unknown:
        raise ValueError(f"unknown honest parties: {sorted(unknown)}")

    world = build_world(base, NULL_TRACER)
    start = holdings(world)
    root = build_engine(base, world, honest=set(honest), budget=depth)
    schedule = base.schedule
    seen: dict = {}
    found: dict = {}  # (predicate, party, detail, end state) -> shortest deviation list
    stats = {"runs": 0}

    def record(pred, party, detail, eng):
        devs = tuple(d for d in eng.decisions if d[0] not in honest and d[2] != "honest")
        k = (pred, party, detail, eng.world.semantic_key())
        old = found.get(k)
        if old is None or (len(devs), devs) < (len(old), old):
            found[k] = devs

    def finish(eng):
        stats["runs"] += 1
        out = outcome_of(base, eng.world, start, True, honest)
        for pred, party, detail in safety_violations(base, out, honest):
            record(pred, party, detail, eng)

    def check_tick(eng):
        w = eng.world
        if not conserved(w):
            record("conservation", "-", f"tick {eng.tick_index}", eng)
        loan = w.loan
        if loan is not None and LoanState.REPAID in loan.history and LoanState.BIDDING_OPEN in loan.history:
            record("repaid-then-bidding", "-", f"tick {eng.tick_index}", eng)

    def explore(eng, i):
        if max_violations is not None and len(found) >= max_violations:
            return
        if i == len(schedule):
            finish(eng)
            return
        key = (i, eng.key())
        if seen.get(key, -1) >= eng.budget:
            return
        seen[key] = eng.budget
        stack = [()]
        while stack:
            prefix = stack.pop()
            e = eng.clone()
            made = []

            def chooser(party, move, options, prefix=prefix, made=made):
                k = len(made)
                made.append(options)
                return prefix[k] if k < len(prefix) else options[0]

            e.chooser = chooser
            e.run_tick(i, schedule[i])
            for j in range(len(prefix), len(made)):
                head = prefix + tuple(opts[0] for opts in made[len(prefix):j])
                for alt in made[j][1:]:
                    stack.append(head + (alt,))
            e.chooser = None
            check_tick(e)
            explore(e, i + 1)

    explore(root, 0)
    violations = sorted({Violation(k[0], k[1], k[2], devs) for k, devs in found.items()},
                        key=lambda v: (len(v.decisions), v))
    return EnumerationResult(violations, stats["runs"], len(seen), honest)
