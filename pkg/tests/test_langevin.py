import numpy as np
import pytest
import scipy.linalg

from kponet import fluctuations, langevin, meanfield
from kponet.params import NetworkParams


def one_site(delta, drive, gamma=0.2, kerr=1.0):
    return NetworkParams(n_sites=1, omega=1.0, kerr=kerr, drive=drive,
                         drive_freq=2.0 * (delta + 1.0 + kerr),
                         coupling=np.zeros((1, 1)), damping=gamma)


def two_site(delta, drive, gamma=0.2, kerr=1.0, j=-0.25):
    jm = np.array([[0.0, j], [j, 0.0]])
    return NetworkParams(n_sites=2, omega=1.0, kerr=kerr, drive=drive,
                         drive_freq=2.0 * (delta + 1.0 + kerr),
                         coupling=jm, damping=gamma)


def test_single_step_matches_drift():
    # one noiseless EM step must equal alpha + dt*drift exactly
    p = two_site(0.3, 0.4, gamma=0.7)
    rng = np.random.default_rng(5)
    a0 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    dt = 1e-3
    tr = langevin.integrate(p, langevin.NoiseSpec(psd=0.0), a0, dt, dt)
    expected = a0 + dt * meanfield.drift(p, a0)
    assert np.allclose(tr.samples[0], expected, rtol=0, atol=1e-15)


def test_times_and_shapes():
    p = one_site(0.1, 0.05)
    tr = langevin.integrate(p, langevin.NoiseSpec(psd=1e-8, seed=1),
                            [0.0], 0.01, 1.0)
    assert tr.samples.shape == (100, 1)
    assert np.allclose(tr.times[[0, -1]], [0.01, 1.0])


def test_dt_bound_enforced():
    p = one_site(0.1, 0.05, gamma=2.0)
    with pytest.raises(ValueError):
        langevin.integrate(p, langevin.NoiseSpec(psd=0.0), [0.0], 0.5, 10.0)


def test_noiseless_fixed_point_drift():
    # a stable stationary state must stay put to 1e-8 over 1e6 steps
    p = two_site(-0.15, 0.35)
    states = [s for s in meanfield.find_steady_states(p) if s.stable
              and s.symmetry == meanfield.LABEL_SYM]
    a0 = states[0].amplitudes
    tr = langevin.integrate(p, langevin.NoiseSpec(psd=0.0), a0, 5e-3, 5e3)
    drift = np.abs(tr.samples - a0).max()
    assert drift < 1e-8


def test_noiseless_decay_rate():
    # below threshold a small deviation decays as exp(Re mu_max t)
    p = one_site(0.0, 0.2, gamma=1.0)
    mu = meanfield.characteristic_exponents(p, np.zeros(1, complex))
    rate = mu.real.max()
    assert rate == pytest.approx(-0.3, rel=1e-12)
    tr = langevin.integrate(p, langevin.NoiseSpec(psd=0.0), [0.01], 0.01, 20.0)
    t = tr.times
    win = (t >= 10.0) & (t <= 20.0)
    slope = np.polyfit(t[win], np.log(np.abs(tr.samples[win, 0])), 1)[0]
    assert abs(slope - rate) < 0.05 * abs(rate)


def test_bit_identical_for_equal_seeds():
    p = two_site(0.2, 0.1)
    a = langevin.integrate(p, langevin.NoiseSpec(1e-4, seed=42), [0, 0], 0.01, 50.0)
    b = langevin.integrate(p, langevin.NoiseSpec(1e-4, seed=42), [0, 0], 0.01, 50.0)
    c = langevin.integrate(p, langevin.NoiseSpec(1e-4, seed=43), [0, 0], 0.01, 50.0)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_diverged_error():
    # above threshold with no Kerr saturation the amplitude blows up
    p = one_site(0.0, 1.0, gamma=0.1, kerr=0.0)
    with pytest.raises(langevin.DivergedError):
        langevin.integrate(p, langevin.NoiseSpec(psd=0.0), [1e-3], 0.01, 2e3)


def test_welch_white_noise_flat():
    sigma2, dt = 2.0, 0.1
    rng = np.random.default_rng(7)
    x = np.sqrt(sigma2 / dt) * rng.standard_normal(1 << 20)
    w, psd = langevin.welch_psd(x, dt)
    assert len(w) == len(psd)
    assert w[0] < 0 < w[-1]
    assert abs(psd.mean() - sigma2) < 0.05 * sigma2
    # Nyquist span of the angular axis
    assert np.isclose(w.max(), np.pi / dt, rtol=0.01)


def test_welch_sinusoid_peak_and_power():
    dt = 0.5
    nper = 4096
    k = 257
    f0 = k / (nper * dt)
    t = dt * np.arange(1 << 16)
    x = np.sin(2 * np.pi * f0 * t)
    w, psd = langevin.welch_psd(x, dt, segment_len=nper)
    w0 = 2 * np.pi * f0
    pos, neg = w > 0, w < 0
    assert abs(w[pos][np.argmax(psd[pos])] - w0) < 2 * np.pi / (nper * dt) * 1.5
    assert abs(w[neg][np.argmax(psd[neg])] + w0) < 2 * np.pi / (nper * dt) * 1.5
    total = np.trapezoid(psd, w) / (2 * np.pi)
    assert total == pytest.approx(0.5, rel=0.02)
    half = np.trapezoid(psd[pos], w[pos]) / (2 * np.pi)
    assert half == pytest.approx(0.25, rel=0.02)


def test_welch_ornstein_uhlenbeck_lorentzian():
    # gamma/2-damped free site: each quadrature is OU with PSD s2/(w^2+k^2)
    kappa = 0.5
    sigma2 = 4e-4
    p = one_site(0.0, 0.0, gamma=2 * kappa)
    dt = 0.02
    tr = langevin.integrate(p, langevin.NoiseSpec(sigma2, seed=11), [0.0],
                            dt, dt * (1 << 22))
    x = tr.samples[:, 0].real
    w, psd = langevin.welch_psd(x, dt, segment_len=1 << 16)
    ref = sigma2 / (w ** 2 + kappa ** 2)
    mask = np.abs(w) < 5 * kappa
    bands = np.array_split(np.argsort(np.abs(w[mask])), 10)
    for idx in bands:
        got = psd[mask][idx].mean()
        want = ref[mask][idx].mean()
        assert abs(got - want) < 0.05 * want
    var = np.trapezoid(psd, w) / (2 * np.pi)
    assert var == pytest.approx(sigma2 / (2 * kappa), rel=0.02)


def test_welch_matches_analytic_spectrum():
    # linearized spectrum around the origin vs a simulated record
    p = one_site(0.5, 0.1, gamma=0.1)
    sigma2 = 1e-8
    spec = fluctuations.fluctuation_spectrum(p, np.zeros(1, complex), sigma2)
    dt = 0.01
    tr = langevin.integrate(p, langevin.NoiseSpec(sigma2, seed=3), [0.0],
                            dt, dt * 2_000_000)
    rec = tr.samples[200_000:, 0]
    rec = rec - rec.mean()
    w, p_re = langevin.welch_psd(rec.real, dt, segment_len=1 << 16)
    _, p_im = langevin.welch_psd(rec.imag, dt, segment_len=1 << 16)
    psd = p_re + p_im
    ref = np.interp(np.abs(w), spec.freq_grid, spec.psd_sites[0])
    pk = np.argmax(psd)
    assert abs(abs(w[pk]) - abs(spec.freq_grid[np.argmax(spec.psd_sites[0])])) < 0.03
    band = np.abs(np.abs(w) - abs(w[pk])) < 0.05
    assert psd[band].mean() == pytest.approx(ref[band].mean(), rel=0.15)
    inside = np.abs(w) <= spec.freq_grid[-1]
    pw_sim = np.trapezoid(psd[inside], w[inside]) / (2 * np.pi)
    pw_ref = np.trapezoid(ref[inside], w[inside]) / (2 * np.pi)
    assert pw_sim == pytest.approx(pw_ref, rel=0.10)


def test_stationary_variance_matches_lyapunov():
    # long stochastic record vs solve_continuous_lyapunov covariance
    p = one_site(0.3, 0.05, gamma=0.2)
    sigma2 = 1e-6
    m = meanfield.jacobian(p, np.zeros(1, complex))
    cov = fluctuations.stationary_covariance(m, sigma2)
    want = np.trace(cov)
    dt = 0.01
    steps = 10_000_000
    tr = langevin.integrate(p, langevin.NoiseSpec(sigma2, seed=12), [0.0],
                            dt, dt * steps)
    rec = tr.samples[200_000:, 0]
    got = rec.real.var() + rec.imag.var()
    assert got == pytest.approx(want, rel=0.03)


def test_probe_enforces_times():
    p = two_site(-0.2, 0.2)
    with pytest.raises(ValueError):
        langevin.pump_noisy_probe(p, langevin.NoiseSpec(1e-6, 1), [-0.2],
                                  kind="delta", settle_time=1.0)
    with pytest.raises(ValueError):
        langevin.pump_noisy_probe(p, langevin.NoiseSpec(1e-6, 1), [-0.2],
                                  kind="delta", record_time=10.0)


def test_probe_zero_noise_spectra_vanish():
    p = two_site(-0.6, 0.1, gamma=1.0)
    res = langevin.pump_noisy_probe(p, langevin.NoiseSpec(0.0, 1), [-0.6],
                                    kind="delta")
    pt = res.points[0]
    assert pt.branch_symmetry == meanfield.LABEL_ZERO
    assert np.allclose(pt.psd_sites, 0.0)
    assert np.allclose(pt.psd_s, 0.0) and np.allclose(pt.psd_a, 0.0)
    assert not pt.jump_flag


def test_probe_tracks_branch_and_hysteresis():
    # sweeping delta out of the symmetric lobe keeps the locked branch
    # (carried state), while a fresh start at the same point stays at zero
    p = two_site(0.0, 0.2, kerr=1.0, j=-0.25)
    noise = langevin.NoiseSpec(1e-7, seed=21)
    up = langevin.pump_noisy_probe(p, noise, [-0.1, 0.0, 0.1, 0.2],
                                   kind="delta")
    labels = [pt.branch_symmetry for pt in up.points]
    assert labels[0] == meanfield.LABEL_SYM
    assert labels[-1] == meanfield.LABEL_SYM
    # at the endpoint the antisymmetric lobe is the active instability, so a
    # fresh start relaxes onto A; the carried state stays locked on S
    fresh = langevin.pump_noisy_probe(p, noise, [0.2], kind="delta")
    assert fresh.points[0].branch_symmetry == meanfield.LABEL_ANTI
    assert up.freq_grid.shape == fresh.points[0].psd_s.shape
    amp = np.abs(up.points[-1].branch_amplitudes)
    assert np.all(amp > 0.1)
    assert not up.points[0].jump_flag and not up.points[-1].jump_flag


def test_probe_spectrum_matches_linearized():
    # below threshold the probe spectra agree with the analytic bundle
    p = two_site(-0.6, 0.1, gamma=0.2)
    sigma2 = 1e-8
    res = langevin.pump_noisy_probe(
        p, langevin.NoiseSpec(sigma2, seed=8), [-0.6], kind="delta",
        record_time=8000.0)
    spec = fluctuations.fluctuation_spectrum(p, np.zeros(2, complex), sigma2)
    pt = res.points[0]
    w = res.freq_grid
    for got, ref_curve in ((pt.psd_s, spec.psd_s), (pt.psd_a, spec.psd_a)):
        ref = np.interp(np.abs(w), spec.freq_grid, ref_curve)
        pk = np.argmax(got)
        pk_ref = spec.freq_grid[np.argmax(ref_curve)]
        dw = w[1] - w[0]
        assert abs(abs(w[pk]) - abs(pk_ref)) < 3 * dw
        inside = np.abs(w) <= spec.freq_grid[-1]
        pw_sim = np.trapezoid(got[inside], w[inside]) / (2 * np.pi)
        pw_ref = np.trapezoid(ref[inside], w[inside]) / (2 * np.pi)
        assert pw_sim == pytest.approx(pw_ref, rel=0.10)
