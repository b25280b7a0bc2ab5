"""The command-line pipeline end to end, in a temporary directory.

synth -> fit -> baseline -> eval -> resample -> oracle
"""

import json
import tempfile
from pathlib import Path

from mixmin.cli import main as mixmin


def run(*argv):
    print("$ mixmin " + " ".join(argv))
    code = mixmin(list(argv))
    if code:
        raise SystemExit(code)
    print()


def main():
    with tempfile.TemporaryDirectory() as tmp:
        d = Path(tmp)
        (d / "spec.json").write_text(json.dumps({
            "alphabet_size": 8, "n_sources": 3, "n_target": 2000, "n_proxy": 200,
        }))
        data = ["--predictions", str(d / "predictions.csv"), "--manifest", str(d / "manifest.json")]

        run("synth", "--spec", str(d / "spec.json"), "--seed", "1", "--out-dir", str(d))
        run("fit", *data, "--out", str(d / "mixmin.json"), "--trace-out", str(d / "trace.csv"))
        run("baseline", "--method", "random", *data, "--out", str(d / "random.json"))
        run("eval", "--weights", str(d / "mixmin.json"), *data, "--part", "test")
        run("resample", "--weights", str(d / "mixmin.json"), "--budget", "100000", "--out", str(d / "plan.json"))
        run("oracle", "--world", str(d / "world.json"), "--weights", str(d / "mixmin.json"), "--exact-mixmin")
        run("oracle", "--world", str(d / "world.json"), "--grid-resolution", "0.02")


if __name__ == "__main__":
    main()
