"""Both trajectory methods against the exact grid, through the harness.

Runs a compare-mode config document end to end: surface hopping, walker
sampling, and the split-operator reference on the same initial Wigner
distribution, written to per-method CSVs plus a joined compare.csv. The
script then reads the files back like any downstream consumer would.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nadyn.config import parse_config
from nadyn.ensemble import run

OUT = Path(__file__).resolve().parent / "out"

CONFIG = """\
method = compare
model.kind = single-avoided-crossing
initial.R0 = -6.0
initial.P0 = 20.0
initial.sigma_R = 0.5
dt = 0.1
n_steps = 12000
n_traj = 1000
seed = 0
save_every = 500
filter.bound = 3.0
"""

cfg = parse_config(CONFIG)
files = run(cfg, out_dir=OUT / "compare")
for name in sorted(files):
    print(f"wrote {files[name]}")

print()
for line in files["summary.txt"].read_text().splitlines():
    if line.startswith(("dev.", "fssh.channel", "qcle.walkers",
                        "oracle.channel")):
        print(f"  {line}")

data = np.genfromtxt(files["compare.csv"], delimiter=",", names=True)
qcle = np.genfromtxt(files["qcle.csv"], delimiter=",", names=True)
alive = qcle["n_alive"] >= 0.8 * cfg.n_traj

fig, ax = plt.subplots(figsize=(6.5, 4))
ax.plot(data["t"], data["oracle_pop1"], "k-", lw=2, label="exact grid")
ax.plot(data["t"], data["fssh_pop1"], "C0o-", ms=3, label="surface hopping")
ax.plot(data["t"][alive], data["qcle_pop1"][alive], "C3s-", ms=3,
        label="walkers (<20% filtered)")
ax.plot(data["t"][~alive], data["qcle_pop1"][~alive], "C3s--", ms=3,
        alpha=0.4, label="walkers (filtered tail)")
ax.set_xlabel("t (a.u.)")
ax.set_ylabel("population on surface 1")
ax.set_title("single avoided crossing, P0 = 20")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(OUT / "05_method_comparison.png", dpi=120)
print(f"\nfigure -> {OUT / '05_method_comparison.png'}")
