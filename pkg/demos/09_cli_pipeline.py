"""
The command-line pipeline
=========================

gen-data -> augment -> train -> eval -> scr-sweep-eval, driven through the
same entry point as the ``irasnet`` console script, in a scratch directory.
"""
import json
import tempfile
from pathlib import Path

from irasnet.cli import main

work = Path(tempfile.mkdtemp(prefix="irasnet-demo-"))
config = work / "config.json"
config.write_text(json.dumps({"seed": 0, "model": {"channels": [8, 16]},
                              "train": {"epochs": 2, "batch_size": 32, "lr": 0.003}}))


def step(*argv):
    print("$ irasnet", " ".join(argv))
    code = main(["--config", str(config), *argv])
    assert code == 0, code


step("gen-data", "--out", str(work / "syn"), "--per-class", "5")
step("augment", "--corpus", str(work / "syn"), "--out", str(work / "aug"), "--factor", "2")
step("gen-data", "--out", str(work / "test"), "--per-class", "5", "--split", "test")
step("train", "--corpus", str(work / "syn"), str(work / "aug"), "--out", str(work / "m.ckpt"))
step("eval", "--checkpoint", str(work / "m.ckpt"), "--corpus", str(work / "test"))
step("scr-sweep-eval", "--checkpoint", str(work / "m.ckpt"), "--corpus", str(work / "test"),
     "--report", str(work / "sweep.json"))
print("artifacts in", work)
