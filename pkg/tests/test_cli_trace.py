import json
import subprocess
import sys

import pytest

from atomic_loans.cli import main
from atomic_loans.report import report_from_trace
from atomic_loans.scenarios import get_scenario, run_scenario
from atomic_loans.trace import TraceEvent


def _run(tmp_path, name, *extra):
    path = tmp_path / f"{name}.jsonl"
    code = main(["run", "--scenario", name, "--trace", str(path), *extra])
    return code, path


def test_run_writes_trace_and_report(tmp_path, capsys):
    code, path = _run(tmp_path, "default_bidding", "--seed", "7")
    out = capsys.readouterr().out
    assert code == 0
    assert "terminal state: Settled" in out
    assert "bob" in out and "+1000 BCoin" in out
    lines = path.read_text().splitlines()
    assert json.loads(lines[0])["kind"] == "scenario"
    assert json.loads(lines[-1])["kind"] == "final-balances"


def test_same_seed_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    _, pa = _run(a, "default_bidding", "--seed", "7")
    _, pb = _run(b, "default_bidding", "--seed", "7")
    assert pa.read_bytes() == pb.read_bytes()


def test_trace_event_ordering(tmp_path):
    _, path = _run(tmp_path, "double_agent_alice")
    events = [TraceEvent.from_json(l) for l in path.read_text().splitlines()]
    assert [e.seq for e in events] == list(range(len(events)))
    assert all(a.time <= b.time for a, b in zip(events, events[1:]))


def test_event_json_round_trip():
    e = TraceEvent(3, 10, "BCoin", "bob", "claim", {"z": 1, "a": [1, 2]})
    line = e.to_json()
    assert line.startswith('{"seq":3,"time":10,"chain":"BCoin","actor":"bob","kind":"claim"')
    assert TraceEvent.from_json(line) == e


def test_report_to_file(tmp_path, capsys):
    rep = tmp_path / "report.txt"
    code, _ = _run(tmp_path, "happy_path", "--report", str(rep))
    assert code == 0
    assert capsys.readouterr().out == ""
    assert "terminal state: Closed" in rep.read_text()


def test_report_matches_trace_arithmetic(tmp_path):
    # recompute Bob's BCoin change straight from the transfer events
    trace, out = run_scenario(get_scenario("default_bidding"))
    delta = 0
    for e in trace.events:
        if e.kind == "transfer":
            delta += (e.detail["dst"] == "bob") * e.detail["amount"]
            delta -= (e.detail["src"] == "bob") * e.detail["amount"]
    report = report_from_trace(trace.events)
    assert report.deltas["bob"]["BCoin"] == delta == out.deltas["bob"]["BCoin"] == 1000
    for who in ("alice", "bob", "charlie", "dave"):
        assert report.final[who] == out.balances[who]
    assert report.terminal == "Settled"
    assert report.periods["bidding_end"] == get_scenario("default_bidding").timeline.bidding_end
    assert {s.label for s in report.secrets} == {"A1", "A2", "B1", "B2", "C"}


def test_unknown_scenario_is_usage_error(capsys):
    assert main(["run", "--scenario", "nosuch"]) == 1
    assert "unknown scenario" in capsys.readouterr().err


def test_missing_arguments_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_trace_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("ATOMIC_LOANS_TRACE_DIR", str(tmp_path / "traces"))
    assert main(["run", "--scenario", "happy_path"]) == 0
    assert (tmp_path / "traces" / "happy_path.jsonl").exists()


def test_no_trace_written_without_env(tmp_path, monkeypatch):
    monkeypatch.delenv("ATOMIC_LOANS_TRACE_DIR", raising=False)
    monkeypatch.chdir(tmp_path)
    assert main(["run", "--scenario", "happy_path"]) == 0
    assert list(tmp_path.iterdir()) == []


def test_run_from_file(tmp_path, capsys):
    cfg = tmp_path / "mine.ini"
    cfg.write_text(get_scenario("withheld_signatures").to_config())
    code, _ = _run(tmp_path, str(cfg))
    assert code == 0
    assert "SeizureFallback" in capsys.readouterr().out


def test_invalid_scenario_file_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(get_scenario("happy_path").to_config().replace("seizable = 6000", "seizable = 10"))
    assert main(["run", "--scenario", str(cfg)]) == 2
    assert "below" in capsys.readouterr().err


# ---- validate ----

def test_validate_fresh_trace(tmp_path, capsys):
    _, path = _run(tmp_path, "default_bidding")
    capsys.readouterr()
    assert main(["validate", "--trace", str(path)]) == 0
    assert capsys.readouterr().out.startswith("ok:")


def test_validate_detects_deleted_event(tmp_path, capsys):
    _, path = _run(tmp_path, "default_bidding")
    lines = path.read_text().splitlines()
    del lines[20]
    path.write_text("\n".join(lines) + "\n")
    assert main(["validate", "--trace", str(path)]) == 2
    assert "line 21" in capsys.readouterr().err


def test_validate_detects_tampered_amount(tmp_path, capsys):
    _, path = _run(tmp_path, "default_bidding")
    lines = path.read_text().splitlines()
    n = next(i for i, l in enumerate(lines) if '"amount":11000' in l and '"claim"' in l)
    lines[n] = lines[n].replace('"amount":11000', '"amount":12000')
    path.write_text("\n".join(lines) + "\n")
    assert main(["validate", "--trace", str(path)]) == 2
    assert f"line {n + 1}" in capsys.readouterr().err


def test_validate_detects_truncation(tmp_path, capsys):
    _, path = _run(tmp_path, "happy_path")
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-3]) + "\n")
    assert main(["validate", "--trace", str(path)]) == 2
    assert "ends early" in capsys.readouterr().err


def test_validate_malformed_line(tmp_path, capsys):
    _, path = _run(tmp_path, "happy_path")
    lines = path.read_text().splitlines()
    lines[4] = lines[4][:-5]
    path.write_text("\n".join(lines) + "\n")
    assert main(["validate", "--trace", str(path)]) == 2
    assert "line 5" in capsys.readouterr().err


def test_validate_missing_file(tmp_path):
    assert main(["validate", "--trace", str(tmp_path / "none.jsonl")]) == 1


# ---- enumerate / list ----

def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    assert "happy_path" in out and "atomic_swap_baseline" in out


def test_enumerate_clean(capsys):
    assert main(["enumerate", "--honest", "alice", "--depth", "6"]) == 0
    assert "violations: 0" in capsys.readouterr().out


def test_enumerate_violation_writes_replay(tmp_path, capsys):
    out = tmp_path / "v.ini"
    assert main(["enumerate", "--honest", "bob", "--depth", "2", "--out", str(out)]) == 2
    assert "lender-safety" in capsys.readouterr().out
    assert main(["run", "--scenario", str(out)]) == 0


def test_enumerate_with_terms(tmp_path, capsys):
    from atomic_loans.scenarios import enumeration_base
    terms = tmp_path / "terms.ini"
    terms.write_text(enumeration_base(seizable=11_000, refundable=4_000).to_config())
    assert main(["enumerate", "--honest", "bob", "--depth", "4", "--terms", str(terms)]) == 0


@pytest.mark.parametrize("argv", [
    ["enumerate", "--depth", "99"],
    ["enumerate", "--depth", "x"],
    ["enumerate", "--honest", "mallory", "--depth", "2"],
])
def test_enumerate_usage_errors(argv):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "atomic_loans", "list-scenarios"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert "default_bidding" in r.stdout
