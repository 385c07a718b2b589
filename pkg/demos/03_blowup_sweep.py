"""A steep plateau whose maximal function loses weighted bmo control.

Each member of the step family sits on a window of width ``s`` with height
``s^-delta``.  Composing its maximal function with the depth-1 weight
gives a function whose weighted oscillation grows as ``delta`` shrinks,
while the unweighted oscillation stays put.  The run below takes around
twenty seconds.
"""

# %%
import numpy as np

from oscilab.lab import default_config, run_experiment

cfg = default_config("coifman-rochberg")
print("sweep over delta =", [round(v, 4) for v in cfg.sweep["values"]])
res = run_experiment(cfg)

# %% one row per sweep value and weight depth
for k in (0, 1):
    rows = [r for r in res.rows if r["k"] == k]
    sup = np.array([r["sup_part"] for r in rows])
    print(f"k={k} sup part:", np.round(sup, 4), f" last/first = {sup[-1] / sup[0]:.3f}")

# %% verdicts are what the CLI turns into an exit code
for v in res.verdicts:
    print("PASS" if v["passed"] else "FAIL", v["name"], v["value"])

# %% outputs are plain CSV and JSON, stamped with the config hash
print(res.to_csv().splitlines()[0])
print("config hash", res.config_hash[:16], "...")
