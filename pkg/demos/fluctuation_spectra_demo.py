"""Fluctuation spectra around the quiet state: formula vs simulation.

Below threshold the linearized dynamics predicts a closed-form noise
spectrum for the symmetric and antisymmetric collective modes.  This
script integrates the stochastic equations of motion for ten million
steps and compares the Welch estimate against the formula: the spectral
peaks sit at the mode frequencies |Im mu| and the areas agree.
"""

import numpy as np

from kponet import fluctuations, langevin
from kponet.params import NetworkParams

coupling = np.array([[0.0, -7.52], [-7.52, 0.0]])
params = NetworkParams(n_sites=2, omega=1.0, kerr=1e-3, drive=0.3846,
                       drive_freq=2.0 * (0.179 + 1.0 + 1e-3),
                       coupling=coupling, damping=1.0)
sigma2 = 1e-3

spec = fluctuations.fluctuation_spectrum(params, np.zeros(2), sigma2)
print("characteristic exponents around the origin:")
for mu, tag in zip(spec.exponents, spec.symmetry_tags):
    print(f"  mu = {mu.real:+.4f} {mu.imag:+.4f}i   ({tag})")

noise = langevin.NoiseSpec(psd=sigma2, seed=7)
dt = langevin.default_dt(params)
traj = langevin.integrate(params, noise, np.zeros(2), dt, 10_000_000 * dt)
d1, d2 = traj.samples[:, 0], traj.samples[:, 1]

for label, series, ref in (("S", (d1 + d2) / np.sqrt(2), spec.psd_s),
                           ("A", (d1 - d2) / np.sqrt(2), spec.psd_a)):
    w, p_re = langevin.welch_psd(series.real, dt)
    _, p_im = langevin.welch_psd(series.imag, dt)
    psd = p_re + p_im
    band = np.abs(w) <= spec.freq_grid[-1]
    ref_b = np.interp(np.abs(w[band]), spec.freq_grid, ref)
    peak = w[band][np.argmax(psd[band])]
    power = np.trapezoid(psd[band], w[band])
    power_ref = np.trapezoid(ref_b, w[band])
    print(f"{label}: peak at {abs(peak):.3f} rad/s, "
          f"band power {power:.3e} vs formula {power_ref:.3e} "
          f"({power / power_ref - 1:+.1%})")
