"""The command line, driven from Python.

Equivalent shell session::

    oscilab generate --kind step_plateau --s 1e-3 --delta 0.5 --eps 1e-5 --C 2 --out f.csv
    oscilab maximal --input f.csv --r 0.5 --trunc 0.25 --out Mf.csv
    oscilab bmo-norm --input Mf.csv --weight-k 1 --delta 1e-3 --density 8 --out report.json
    OSCILAB_THREADS=2 oscilab experiment run cascade --out-dir results
"""

# %%
import json
import tempfile
from pathlib import Path

from oscilab.cli import main

work = Path(tempfile.mkdtemp(prefix="oscilab-demo-"))
f_csv, m_csv, rep = work / "f.csv", work / "Mf.csv", work / "report.json"

# %% build a family member, take its maximal function, measure it
main(["generate", "--kind", "step_plateau", "--s", "1e-3", "--delta", "0.5",
      "--eps", "1e-5", "--C", "2", "--out", str(f_csv)])
print(f_csv.read_text().splitlines()[:3])
main(["maximal", "--input", str(f_csv), "--r", "0.5", "--trunc", "0.25", "--out", str(m_csv)])
main(["bmo-norm", "--input", str(m_csv), "--weight-k", "1", "--delta", "1e-3",
      "--density", "8", "--out", str(rep)])
report = json.loads(rep.read_text())
print(sorted(report))

# %% experiments: list them, then run the quick one
main(["experiment", "list"])
code = main(["experiment", "run", "cascade", "--out-dir", str(work / "results")])
print("exit code", code, "files:", sorted(p.name for p in (work / "results").iterdir()))
