"""Regenerate the shared check-digit test vectors used by both the Python
suite and the operator-console TypeScript tests.

Usage: python3 scripts/generate_check_vectors.py
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from wagonline.codes import UNASSIGNABLE, compute_check_digit, validate, parse

OUT = Path(__file__).resolve().parents[1] / "frontend" / "tests" / "checkdigit_vectors.json"
COUNT = 10000
LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def main() -> None:
    rng = random.Random(11691)
    vectors = []
    while len(vectors) < COUNT:
        serial = f"{rng.randrange(10**6):06d}"
        check = compute_check_digit(serial)
        letters = "".join(rng.choice(LETTERS) for _ in range(3))
        region = rng.choice(LETTERS) if rng.random() < 0.2 else ""
        if check == UNASSIGNABLE:
            # no digit can be painted; any claimed digit must read invalid
            claimed = rng.randrange(10)
        elif rng.random() < 0.25:
            claimed = (check + rng.randrange(1, 10)) % 10  # deliberate mismatch
        else:
            claimed = check
        code = f"{letters}-{serial}-{claimed}{region}"
        vectors.append(
            {
                "serial": serial,
                "check": check,
                "code": code,
                "valid": validate(parse(code)).valid,
            }
        )
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(vectors, indent=1) + "\n", encoding="utf-8")
    valid = sum(1 for v in vectors if v["valid"])
    print(f"wrote {len(vectors)} vectors ({valid} valid / {len(vectors) - valid} invalid) to {OUT}")


if __name__ == "__main__":
    main()
