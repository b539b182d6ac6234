"""Run every acceptance case and print a JSON map of output digests.

Thread count comes from PRAST_THREADS / NUMBA_NUM_THREADS in the
environment, so the parent test can launch it at several counts.
"""
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import acceptance_cases as cases  # noqa: E402
from prast import _backend  # noqa: E402


def main(ids):
    threads = 1
    if _backend.HAVE_NUMBA:
        import numba

        threads = numba.get_num_threads()
    out = {"threads": threads, "digests": {cid: cases.run(cid)["digest"] for cid in ids}}
    print(json.dumps(out))


if __name__ == "__main__":
    main(sys.argv[1:] or list(cases.CASES))
