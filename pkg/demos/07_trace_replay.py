"""Traces are JSON lines; replaying the embedded config must reproduce them exactly."""

import tempfile
from pathlib import Path

from atomic_loans.cli import main

with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "bid.jsonl"
    main(["run", "--scenario", "default_bidding", "--seed", "7", "--trace", str(path),
          "--report", str(Path(d) / "report.txt")])
    print(path.read_text().splitlines()[5])
    print("validate:", main(["validate", "--trace", str(path)]))

    lines = path.read_text().splitlines()
    n = next(i for i, line in enumerate(lines) if '"kind":"claim"' in line)
    lines[n] = lines[n].replace('"amount":11000', '"amount":12000')
    path.write_text("\n".join(lines) + "\n")
    print("validate after tampering:", main(["validate", "--trace", str(path)]))
