"""Stability map of two coupled parametric Kerr resonators.

Scans the (detuning, drive) plane for the dimensionless two-site
network (gamma/V = 0.1, J/V = -0.25) and reports which combinations of
steady states are stable where: only the quiet 0-state, the pair of
symmetric period-doubled states, coexisting S and A states, and so on.
"""

import numpy as np

from kponet import meanfield
from kponet.params import NetworkParams

V = 1.0
gamma = 0.1
J = -0.25

coupling = np.array([[0.0, J], [J, 0.0]])
base = NetworkParams(n_sites=2, omega=1.0, kerr=V, drive=0.1,
                     drive_freq=2.0 * (1.0 + V), coupling=coupling,
                     damping=gamma)

deltas = np.linspace(-0.6, 0.8, 29)
drives = np.linspace(0.02, 0.9, 23)

pd = meanfield.phase_diagram(base, deltas, drives, threads=4)

names = {meanfield.CODE_ZERO: "0 only", meanfield.CODE_S: "S",
         meanfield.CODE_SA: "S+A", meanfield.CODE_SM: "S+M",
         meanfield.CODE_SAM: "S+A+M", meanfield.CODE_OTHER: "other",
         meanfield.CODE_NONE: "none"}

print("region sizes on the", pd.code.shape, "grid:")
for code in np.unique(pd.code):
    frac = np.mean(pd.code == code)
    print(f"  {names[int(code)]:>6}: {frac:6.1%}")
print(f"0-state also stable (hysteresis region): "
      f"{np.mean(pd.brighter):.1%} of the plane")

# a vertical cut through both lobes
i = np.argmin(np.abs(deltas - 0.3))
row = "".join(str(max(int(c), 0)) for c in pd.code[i])
print(f"codes along delta = {deltas[i]:.2f}, drive ascending: {row}")
