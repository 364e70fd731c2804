#!/usr/bin/env python3
"""Toy recognizer: tags every image with a fixed concept and echoes descriptors upper-cased."""
import json
import sys

for line in sys.stdin:
    if not line.strip():
        continue
    req = json.loads(line)
    terms = ["Solar Farm"] if req.get("kind") == "image" else []
    terms += [d.upper() for d in req.get("descriptors", [])]
    print(json.dumps({"element_id": req["element_id"], "terms": terms}))
