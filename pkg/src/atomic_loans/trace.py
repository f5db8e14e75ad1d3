"""Trace events and their JSON-lines encoding."""

from __future__ import annotations

import json
from dataclasses import dataclass

CHAINS = ("ACoin", "BCoin", "offchain", "system")


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    time: int
    chain: str
    actor: str
    kind: str
    detail: dict

    def to_json(self) -> str:
        # fixed key order, detail keys sorted: byte-identical output for equal events
        head = json.dumps(
            {"seq": self.seq, "time": self.time, "chain": self.chain,
             "actor": self.actor, "kind": self.kind},
            separators=(",", ":"), ensure_ascii=False,
        )
        detail = json.dumps(self.detail, separators=(",", ":"), sort_keys=True, ensure_ascii=False)
        return head[:-1] + ',"detail":' + detail + "}"

    @classmethod
    def from_json(cls, line: str) -> "TraceEvent":
        d = json.loads(line)
        if not isinstance(d, dict):
            raise ValueError("event is not an object")
        missing = {"seq", "time", "chain", "actor", "kind", "detail"} - d.keys()
        if missing:
            raise ValueError(f"missing keys: {sorted(missing)}")
        return cls(d["seq"], d["time"], d["chain"], d["actor"], d["kind"], d["detail"])


class Tracer:
    """Collects events in order. A disabled tracer drops everything (used by the enumerator)."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.events: list[TraceEvent] = []
        self.labels: dict[bytes, str] = {}

    def label(self, digest: bytes) -> str:
        return self.labels.get(digest, digest[:4].hex())

    def emit(self, time: int, chain: str, actor: str, kind: str, **detail) -> None:
        if not self.enabled:
            return
        if self.events and time < self.events[-1].time:
            raise ValueError("trace time went backwards")
        self.events.append(TraceEvent(len(self.events), time, chain, actor, kind, detail))

    def lines(self) -> list[str]:
        return [e.to_json() for e in self.events]

    def dumps(self) -> str:
        return "".join(line + "\n" for line in self.lines())


NULL_TRACER = Tracer(enabled=False)


def write_trace(path, events) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for e in events:
            f.write(e.to_json() + "\n")


class MalformedTrace(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def read_trace(path) -> list[TraceEvent]:
    events = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                events.append(TraceEvent.from_json(line))
            except (ValueError, TypeError) as exc:
                raise MalformedTrace(lineno, str(exc)) from None
    return events
