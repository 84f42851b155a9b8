"""Misbehaving scorer for protocol tests; the mode is the first argument.

ok        answer 0.5 to everything
garbage   answer a non-JSON line
range     answer a score of 1.5
wrongid   answer with a shifted id
die       exit without answering
slow      never answer
dieonce   exit on the first request unless a marker file (argv[2]) exists
"""
import json
import os
import sys
import time

mode = sys.argv[1]
for line in sys.stdin:
    req = json.loads(line)
    if mode == "ok":
        out = {"id": req["id"], "score": 0.5}
    elif mode == "garbage":
        print("not json", flush=True)
        continue
    elif mode == "range":
        out = {"id": req["id"], "score": 1.5}
    elif mode == "wrongid":
        out = {"id": req["id"] + 7, "score": 0.5}
    elif mode == "die":
        sys.exit(1)
    elif mode == "slow":
        time.sleep(60)
        continue
    elif mode == "dieonce":
        if not os.path.exists(sys.argv[2]):
            open(sys.argv[2], "w").close()
            sys.exit(1)
        out = {"id": req["id"], "score": 0.9}
    print(json.dumps(out), flush=True)
