"""
Scenario files, exports and the command line
============================================

Bundled JSON scenarios run end to end: each produces a CSV trajectory, a
diagnostics JSON and (with noise) the exact noise sequence used.  The
same runs are available as ``lieobs run``, ``lieobs batch``,
``lieobs rate`` and ``lieobs check``.
"""

# %%
import json
import tempfile
from pathlib import Path

from lieobs import sim
from lieobs.cli import main

out = Path(tempfile.mkdtemp(prefix="lieobs_demo_"))
for path in sim.bundled_scenarios():
    code = sim.run_scenario(path, out)
    d = json.loads((out / f"{path.stem}.diagnostics.json").read_text())
    rate = d["rate"]["rate"] if d.get("rate") else float("nan")
    print(f"{path.stem:32s} exit {code}  f {d['initial_cost']:.3f} -> {d['final_cost']:.2e}  rate {rate:.2f}")

# %% the CSV holds t, X, Xhat, cost and membership residuals
cols = sim.read_csv(out / "so3_passive.csv")
print(list(cols)[:4], "...", list(cols)[-3:])

# %% the same from the command line
main(["rate", str(out / "so3_passive.csv"), "--tail", "0.5"])
main(["check"])
print("outputs in", out)
