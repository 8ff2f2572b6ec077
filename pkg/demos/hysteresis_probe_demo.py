"""Hysteretic drive sweep with a noisy readout.

Mimics the experiment's protocol: sweep the drive strength point by
point while the system state carries over, record fluctuations under
weak noise, and label the occupied branch at each step.  Sweeping the
drive down, the system rides the high-amplitude period-doubled branch
past the point where a fresh (cold-started) system would sit on the
quiet state, then drops off at the fold: a first-order-like jump.
"""

import numpy as np

from kponet import langevin, meanfield
from kponet.params import NetworkParams

params = NetworkParams(n_sites=1, omega=1.0, kerr=1.0, drive=0.35,
                       drive_freq=2.0 * (0.4 + 1.0 + 1.0),
                       coupling=np.zeros((1, 1)), damping=0.2)

# dense grid for the diagram: branches move fast near the fold
diagram = meanfield.bifurcation_sweep(
    params, np.linspace(0.35, 0.02, 61), kind="drive")
print("bifurcations of the branch diagram at drive =",
      [round(b, 3) for b in diagram.bifurcations])

values = np.linspace(0.35, 0.02, 23)
phase = [s for s in meanfield.find_steady_states(params)
         if s.stable and s.symmetry != meanfield.LABEL_ZERO]
noise = langevin.NoiseSpec(psd=1e-8, seed=2)
result = langevin.pump_noisy_probe(params, noise, values, kind="drive",
                                   alpha0=phase[0].amplitudes)

print("\n drive   branch   |<alpha>|   jump")
prev = None
for pt in result.points:
    mark = " <--" if prev is not None and pt.branch_symmetry != prev else ""
    print(f"  {pt.sweep_value:5.3f}   {pt.branch_symmetry:>5}   "
          f"{np.abs(pt.mean_amplitudes[0]):8.4f}{mark}")
    prev = pt.branch_symmetry
