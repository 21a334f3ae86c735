"""Scriptable stand-in for the external trainer worker.

Reads line-delimited JSON requests on stdin and answers according to the
mode given as argv[1]:

  echo42      respond {"format":1,"test_error":42.0}
  count       respond with test_error = number of requests served so far
  outofrange  respond with test_error = 101.0
  report      respond with an {"error": ...} payload
  badjson     respond with a non-JSON line
  slow        sleep 30 s before responding
  die         exit(1) without responding
"""

import json
import sys
import time


def main() -> int:
    mode = sys.argv[1] if len(sys.argv) > 1 else "echo42"
    served = 0
    for line in sys.stdin:
        if not line.strip():
            continue
        request = json.loads(line)
        assert request.get("format") == 1 and "arch" in request
        served += 1
        if mode == "die":
            print("stub giving up", file=sys.stderr)
            return 1
        if mode == "slow":
            time.sleep(30)
        if mode == "badjson":
            print("not json at all")
        elif mode == "outofrange":
            print(json.dumps({"format": 1, "test_error": 101.0}))
        elif mode == "report":
            print(json.dumps({"format": 1, "error": "synthetic failure"}))
        elif mode == "count":
            print(json.dumps({"format": 1, "test_error": float(served)}))
        else:
            print(json.dumps({"format": 1, "test_error": 42.0, "train_seconds": 1.0}))
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
