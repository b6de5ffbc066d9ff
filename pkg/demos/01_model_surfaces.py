"""
Diabatic models and their adiabatic structure
=============================================

Every bundled model is a real symmetric 2x2 potential matrix V(R) on one
nuclear coordinate. Diagonalizing it at each R gives the adiabatic surfaces
E0(R) <= E1(R) and the nonadiabatic coupling d01(R) that drives transitions
between them. This script scans all three scattering models, prints where
the surfaces pinch together, and saves a figure per model.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import nadyn.models as M

OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

# the scattering benchmarks; the flat constant-gap model is covered last
KINDS = ["single-avoided-crossing", "dual-avoided-crossing",
         "extended-coupling"]

R_grid = np.linspace(-10.0, 10.0, 801)

for kind in KINDS:
    model = M.make_model(kind)

    # scan: diabatic elements from the Hamiltonian, adiabatic quantities
    # from the eigen-frame at each grid point
    v00 = np.empty_like(R_grid)
    v11 = np.empty_like(R_grid)
    v01 = np.empty_like(R_grid)
    e0 = np.empty_like(R_grid)
    e1 = np.empty_like(R_grid)
    d01 = np.empty_like(R_grid)
    for i, R in enumerate(R_grid):
        V = M.diabatic_hamiltonian(model, float(R))
        v00[i], v01[i], v11[i] = V[0, 0], V[0, 1], V[1, 1]
        fr = M.frame_at(model, float(R))
        e0[i], e1[i] = fr.E[0], fr.E[1]
        d01[i] = fr.d[0, 1]

    gap = e1 - e0
    i_min = int(np.argmin(gap))
    i_pk = int(np.argmax(np.abs(d01)))
    print(f"{kind}")
    print(f"  minimum gap {gap[i_min]:.5f} at R = {R_grid[i_min]:+.2f}")
    print(f"  peak |d01| {abs(d01[i_pk]):.3f} at R = {R_grid[i_pk]:+.2f}")
    print(f"  asymptotic gap {gap[0]:.5f} (left) / {gap[-1]:.5f} (right)")

    fig, (top, bot) = plt.subplots(2, 1, sharex=True, figsize=(6, 6))
    top.plot(R_grid, v00, "C0--", lw=1, label="V00")
    top.plot(R_grid, v11, "C1--", lw=1, label="V11")
    top.plot(R_grid, e0, "C0", label="E0")
    top.plot(R_grid, e1, "C1", label="E1")
    top.set_ylabel("energy (a.u.)")
    top.legend(loc="best", fontsize=8)
    top.set_title(kind)
    bot.plot(R_grid, d01, "k")
    bot.set_ylabel("d01 (1/bohr)")
    bot.set_xlabel("R (bohr)")
    fig.tight_layout()
    name = OUT / f"01_{kind}.png"
    fig.savefig(name, dpi=120)
    plt.close(fig)
    print(f"  figure -> {name}")
    print()

# the flat model: two parallel surfaces, zero coupling everywhere.
# it exists so phase evolution can be checked against a closed form.
flat = M.constant_gap(gap=0.01)
fr = M.frame_at(flat, 3.7)
print("constant-gap")
print(f"  E1 - E0 = {float(fr.E[1] - fr.E[0]):.6f} everywhere, "
      f"d01 = {float(fr.d[0, 1]):.1f}, forces = "
      f"({float(fr.F[0]):.1f}, {float(fr.F[1]):.1f})")
