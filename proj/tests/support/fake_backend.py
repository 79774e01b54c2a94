#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Misbehaving protocol peer for harness tests.

Modes:
  reverse     answer each pair of requests in reverse order
  bad-logits  answer detect requests with 7 logits
  silent      complete the handshake, then never answer
  die         complete the handshake, then exit
  unknown-id  answer with a request id that was never sent
  per-error   answer every request with an error response
"""

import json
import math
import sys


def send(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")
    sys.stdout.flush()


def logits_for(score):
    return [math.log(score)] * 4 + [math.log1p(-score)] * 4


def main():
    mode = sys.argv[1]
    hello = sys.stdin.readline()
    if not hello:
        return
    send({"hello": 1, "backend": "fake-" + mode,
          "capabilities": ["detect", "token_reduction:first_subtoken"]})
    if mode == "die":
        return
    pending = []
    for line in sys.stdin:
        req = json.loads(line)
        rid = req["request_id"]
        if mode == "silent":
            continue
        if mode == "bad-logits":
            send({"type": "detect_result", "request_id": rid,
                  "logits": [0.0] * 7})
        elif mode == "unknown-id":
            send({"type": "detect_result", "request_id": rid + "-x",
                  "logits": [0.0] * 8})
        elif mode == "per-error":
            send({"type": "error", "request_id": rid, "message": "no model"})
        elif mode == "reverse":
            pending.append(rid)
            if len(pending) == 2:
                for i, r in enumerate(reversed(pending)):
                    send({"type": "detect_result", "request_id": r,
                          "logits": logits_for(0.9 if r.endswith("a") else 0.1)})
                pending = []


if __name__ == "__main__":
    main()
