"""Minimal external-predictor example speaking the NDJSON protocol.

Run as `python -m agentaudit.ext_demo`. Reads {"rows": [...]} lines from
stdin and answers {"scores": [...]}. The score is the fraction of numeric
fields in the row that are strictly positive, which lands in [0, 1] and is
deterministic; it exists to exercise the wire protocol, not to predict well.
"""

from __future__ import annotations

import json
import sys


def score_row(row: dict) -> float:
    numeric = [v for v in row.values() if isinstance(v, (int, float)) and v is not None]
    if not numeric:
        return 0.5
    return sum(1 for v in numeric if v > 0) / len(numeric)


def main() -> int:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        scores = [score_row(r) for r in request.get("rows", [])]
        sys.stdout.write(json.dumps({"scores": scores}) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
