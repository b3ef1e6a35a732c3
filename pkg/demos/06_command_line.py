# %% [markdown]
# # Command line
#
# The same operations are available as `hdmeans test-one`, `test-two`,
# `batch` and `simulate`.  This script writes small inputs to a temporary
# directory and calls the entry point in-process.

# %%
import json
import tempfile
from pathlib import Path

import numpy as np

from hdmeans.cli import main

work = Path(tempfile.mkdtemp())
gen = np.random.default_rng(3)
p = 30
header = ",".join(f"g{k}" for k in range(p))
x, y = gen.normal(size=(25, p)), gen.normal(size=(30, p))
y[:, :3] += 1.2
rows = [f"ctrl,{','.join(map(repr, r))}" for r in x.tolist()] + [f"case,{','.join(map(repr, r))}" for r in y.tolist()]
(work / "expr.csv").write_text("label," + header + "\n" + "\n".join(rows) + "\n")
(work / "sets.json").write_text(json.dumps({"first": [f"g{k}" for k in range(20)],
                                            "last": [f"g{k}" for k in range(10, 30)]}))

# %%
main(["test-two", str(work / "expr.csv"), "--group-column", "label", "--groups", "ctrl,case",
      "--studentized", "--seed", "1"])

# %%
main(["batch", str(work / "expr.csv"), "--group-column", "label", "--groups", "ctrl,case",
      "--sets", str(work / "sets.json"), "--format", "csv"])

# %%
config = {"seed": 5, "replicates": 50, "scenarios": [
    {"id": "bandable", "model": 1, "n": 30, "p": 60, "tests": ["ns", "s"], "betas": [0.0, 1.0]}]}
(work / "sim.json").write_text(json.dumps(config))
main(["simulate", str(work / "sim.json"), "--format", "csv", "--emit-plot-data", str(work / "curve.csv")])
print((work / "curve.csv").read_text().splitlines()[0])

# %% [markdown]
# Exit status is 0 on success, 1 for usage or I/O errors and 2 when the data
# are degenerate (a constant column on a studentized path).

# %%
(work / "const.csv").write_text("a,b\n1,1\n2,1\n3,1\n")
print(main(["test-one", str(work / "const.csv"), "--studentized"]))
