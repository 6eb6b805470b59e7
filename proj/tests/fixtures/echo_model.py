#!/usr/bin/env python3
"""Line-delimited JSON model server used by the external-process tests.

Modes:
  echo  -- output = the value of the sole input
  sum   -- output = sum of all numeric inputs
  or    -- output = 1 if any input is nonzero else 0
"""
import json
import sys

mode = sys.argv[1] if len(sys.argv) > 1 else "echo"

for line in sys.stdin:
    req = json.loads(line)
    inputs = req["inputs"]
    values = list(inputs.values())
    if mode == "echo":
        out = float(values[0])
    elif mode == "sum":
        out = float(sum(values))
    else:  # or
        out = 1.0 if any(v != 0 for v in values) else 0.0
    sys.stdout.write(json.dumps({"id": req["id"], "output": out}) + "\n")
    sys.stdout.flush()
