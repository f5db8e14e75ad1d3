"""A repaid loan, and the report a reader would get from its trace."""

from atomic_loans.report import report_from_trace
from atomic_loans.scenarios import get_scenario, run_scenario

trace, outcome = run_scenario(get_scenario("happy_path"))
for e in trace.events:
    if e.kind == "state-transition":
        print(f"{e.time}  {e.detail['from']:>10} -> {e.detail['to']}")
print()
print(report_from_trace(trace.events).to_text())
