#!/usr/bin/env python3
"""Writes docs/problems/decompose_two_components.json.

Scalar system dx/dt = -x + u with two components on [0, 2]:
  (x1, u1) = (exp(-t), 0),  (x2, u2) = (1 - exp(-t), 1),
so Q(t) = sum_i (x_i, u_i)(x_i, u_i)^T solves the matrix dynamics exactly.
"""

import json
import math
import pathlib
import sys

STEPS = 200
T0, T1 = 0.0, 2.0


def sample(t):
    x1, u1 = math.exp(-t), 0.0
    x2, u2 = 1.0 - math.exp(-t), 1.0
    qnn = x1 * x1 + x2 * x2
    qnm = x1 * u1 + x2 * u2
    qmm = u1 * u1 + u2 * u2
    return [qnn, qnm, qnm, qmm]


def main():
    out = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else (
        pathlib.Path(__file__).resolve().parent.parent / "docs" / "problems" /
        "decompose_two_components.json")
    h = (T1 - T0) / STEPS
    samples = [sample(T1 if k == STEPS else T0 + k * h) for k in range(STEPS + 1)]
    fmt = lambda v: format(v, ".17g")
    lines = [
        "{",
        '  "command": "decompose",',
        '  "n": 1,',
        '  "m": 1,',
        '  "A": [[-1]],',
        '  "B": [[1]],',
        f'  "grid": {{"t0": {fmt(T0)}, "t1": {fmt(T1)}, "steps": {STEPS}}},',
        '  "samples": [',
    ]
    rows = ["    [" + ", ".join(fmt(v) for v in s) + "]" for s in samples]
    lines.append(",\n".join(rows))
    lines += ["  ]", "}"]
    out.write_text("\n".join(lines) + "\n")
    json.loads(out.read_text())


if __name__ == "__main__":
    main()
