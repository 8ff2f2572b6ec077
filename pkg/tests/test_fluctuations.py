from __future__ import annotations

import numpy as np
import pytest

from kponet import fluctuations as fl
from kponet import meanfield as mf
from kponet.params import NetworkParams


def two_site(delta, drive, gamma=0.1, coupling=-0.25, kerr=1.0, delta_offset=0.0):
    J = np.array([[0.0, coupling], [coupling, 0.0]])
    omega = np.array([1.0, 1.0 + delta_offset])
    return NetworkParams(2, omega=omega, kerr=kerr, drive=drive,
                         drive_freq=2.0 * (delta + 1.0 + (kerr if np.isscalar(kerr) else kerr)),
                         coupling=J, damping=gamma)


def one_site(delta, drive, gamma=0.1, kerr=1.0):
    return NetworkParams(1, omega=1.0, kerr=kerr, drive=drive,
                         drive_freq=2.0 * (delta + 1.0 + kerr),
                         coupling=np.zeros((1, 1)), damping=gamma)


# ---------------------------------------------------------------------------
# bilinear blocks


def test_blocks_at_origin_uncoupled():
    # symbolic expansion oracle: alpha=0, J=0 gives Omega=-Delta*I, S=-G*I
    p = one_site(0.3, 0.2)
    b = fl.bdg_matrix(p, np.zeros(1))
    assert np.allclose(b.omega_block, -0.3 * np.eye(1), atol=1e-14)
    assert np.allclose(b.squeeze_block, -0.2 * np.eye(1), atol=1e-14)


def test_blocks_structure_at_origin_coupled():
    p = two_site(0.1, 0.3)
    b = fl.bdg_matrix(p, np.zeros(2))
    assert np.allclose(np.diag(b.omega_block), [-0.1, -0.1], atol=1e-14)
    assert b.omega_block[0, 1] == pytest.approx(-0.25)
    assert np.allclose(b.squeeze_block, -0.3 * np.eye(2), atol=1e-14)
    assert np.allclose(b.squeeze_block, b.squeeze_block.T, atol=0)


def test_blocks_reject_nonstationary():
    p = two_site(0.1, 0.3)
    with pytest.raises(ValueError):
        fl.bdg_matrix(p, np.array([0.5 + 0.1j, 0.2]))


def test_block_exponents_match_jacobian_random_states():
    # equivalence of the complex-linearization and real-Jacobian spectra,
    # 100 random stable states with N <= 3
    rng = np.random.default_rng(23)
    collected = 0
    while collected < 100:
        n = int(rng.integers(1, 4))
        J = rng.uniform(-0.4, 0.4, size=(n, n))
        J = 0.5 * (J + J.T)
        np.fill_diagonal(J, 0.0)
        p = NetworkParams(n, omega=1.0, kerr=1.0,
                          drive=float(rng.uniform(0.0, 0.8)),
                          drive_freq=2.0 * (float(rng.uniform(-0.6, 0.6)) + 2.0),
                          coupling=J, damping=float(rng.uniform(0.05, 0.4)))
        for s in mf.find_steady_states(p, n_random=32):
            if not s.stable:
                continue
            mu_blocks = fl.bdg_exponents(fl.bdg_matrix(p, s.amplitudes), p.damping)
            a = np.sort_complex(np.round(mu_blocks, 10))
            b = np.sort_complex(np.round(s.exponents, 10))
            assert np.abs(a - b).max() < 1e-9
            collected += 1
    assert collected >= 100


# ---------------------------------------------------------------------------
# sa transform


def test_sa_transform_trivials():
    s, a = fl.sa_transform(np.array([1.0]), np.array([1.0]))
    assert s[0] == pytest.approx(np.sqrt(2)) and a[0] == pytest.approx(0.0)
    s, a = fl.sa_transform(np.array([1.0]), np.array([-1.0]))
    assert s[0] == pytest.approx(0.0) and a[0] == pytest.approx(np.sqrt(2))
    with pytest.raises(ValueError):
        fl.sa_transform(np.zeros(3), np.zeros(4))


def test_sa_transform_involution_and_parseval():
    rng = np.random.default_rng(5)
    z1 = rng.normal(size=50) + 1j * rng.normal(size=50)
    z2 = rng.normal(size=50) + 1j * rng.normal(size=50)
    s, a = fl.sa_transform(z1, z2)
    b1, b2 = fl.sa_transform(s, a)
    assert np.allclose(b1, z1, atol=1e-14) and np.allclose(b2, z2, atol=1e-14)
    assert np.allclose(np.abs(z1) ** 2 + np.abs(z2) ** 2,
                       np.abs(s) ** 2 + np.abs(a) ** 2, atol=1e-12)


# ---------------------------------------------------------------------------
# analytic PSD vs transfer function


def test_psd_scaling_in_sigma2():
    grid = np.linspace(0, 2, 100)
    mu, e = -0.05 + 0.8j, 0.3 + 1.2j
    a = fl.analytic_psd(mu, e, 1.0, grid)
    b = fl.analytic_psd(mu, e, 2.0, grid)
    assert np.allclose(b, 2 * a, rtol=1e-14)


def test_analytic_psd_singular_for_real_eigvec():
    with pytest.raises(ValueError):
        fl.analytic_psd(-0.05 + 0.3j, 1.0 + 0j, 1.0, np.linspace(0, 1, 10))


def test_closed_form_equals_transfer_below_threshold():
    p = two_site(0.6, 0.15)
    spec = fl.fluctuation_spectrum(p, np.zeros(2), sigma2=1.0)
    assert spec.methods["S"] == "c3" and spec.methods["A"] == "c3"
    assert np.allclose(spec.psd_s, spec.psd_s_transfer, rtol=1e-8)
    assert np.allclose(spec.psd_a, spec.psd_a_transfer, rtol=1e-8)
    assert np.allclose(spec.psd_sites, spec.psd_sites_transfer, rtol=1e-8)
    # distinct S/A peak frequencies at the |Im mu| values
    ws = spec.freq_grid[np.argmax(spec.psd_s)]
    wa = spec.freq_grid[np.argmax(spec.psd_a)]
    ims = np.unique(np.round(np.abs(spec.exponents.imag), 6))
    ims = ims[ims > 0]
    assert abs(ws - wa) > 0.1
    dw = spec.freq_grid[1] - spec.freq_grid[0]
    assert min(abs(ws - i) for i in ims) <= 2 * dw
    assert min(abs(wa - i) for i in ims) <= 2 * dw


def test_closed_form_equals_transfer_above_threshold():
    p = two_site(-0.15, 0.35)
    states = [s for s in mf.find_steady_states(p) if s.stable and s.symmetry == "S"]
    spec = fl.fluctuation_spectrum(p, states[0].amplitudes, sigma2=0.01)
    for name in ("S", "A"):
        if spec.methods[name] == "c3":
            prim = spec.psd_s if name == "S" else spec.psd_a
            tr = spec.psd_s_transfer if name == "S" else spec.psd_a_transfer
            assert np.allclose(prim, tr, rtol=1e-8)
    assert any(m == "c3" for m in spec.methods.values())


def test_psd_nonnegative_and_even():
    p = two_site(0.6, 0.15)
    grid = np.linspace(-3, 3, 401)
    spec = fl.fluctuation_spectrum(p, np.zeros(2), 1.0, freq_grid=grid)
    for arr in (spec.psd_s, spec.psd_a, spec.psd_sites[0], spec.psd_sites_transfer[0]):
        assert np.all(arr >= 0)
        assert np.allclose(arr, arr[::-1], rtol=1e-10)


def test_overdamped_channel_falls_back():
    # sliver between the exceptional point and the instability edge:
    # A pair real (overdamped) while S stays complex
    p = two_site(0.445, 0.2)
    spec = fl.fluctuation_spectrum(p, np.zeros(2), 1.0)
    assert spec.methods["S"] == "c3"
    assert spec.methods["A"] == "transfer"
    assert any("overdamped" in f for f in spec.flags)
    assert np.allclose(spec.psd_a, spec.psd_a_transfer, rtol=0)


def test_inhomogeneous_network_uses_transfer():
    p = two_site(0.6, 0.15, delta_offset=0.07)
    spec = fl.fluctuation_spectrum(p, np.zeros(2), 1.0)
    assert all(m == "transfer" for m in spec.methods.values())
    assert any("decouple" in f for f in spec.flags)
    assert np.all(np.isnan(spec.eigvec_params.real))


def test_unstable_state_rejected():
    p = two_site(-0.15, 0.35)  # origin unstable here
    with pytest.raises(ValueError):
        fl.fluctuation_spectrum(p, np.zeros(2), 1.0)


# ---------------------------------------------------------------------------
# variance consistency (Lyapunov oracle)


def lyapunov_channel_variances(p, alpha, sigma2):
    m = mf.jacobian(p, alpha)
    cov = fl.stationary_covariance(m, sigma2)
    n = p.n_sites
    out = {}
    for j in range(n):
        out[f"site_{j + 1}"] = cov[2 * j, 2 * j] + cov[2 * j + 1, 2 * j + 1]
    if n == 2:
        t = fl._sa_matrix()
        cs = t @ cov @ t.T
        out["S"] = cs[0, 0] + cs[1, 1]
        out["A"] = cs[2, 2] + cs[3, 3]
    return out


def integrate_psd(grid, psd):
    return np.trapezoid(psd, grid) / (2 * np.pi)


def test_psd_integrates_to_lyapunov_variance_single_site():
    p = one_site(0.3, 0.05, gamma=0.1)
    sigma2 = 0.7
    mu = mf.characteristic_exponents(p, np.zeros(1))
    span = 20 * np.abs(mu).max()
    grid = np.linspace(-span, span, 40001)
    spec = fl.fluctuation_spectrum(p, np.zeros(1), sigma2, freq_grid=grid)
    var = lyapunov_channel_variances(p, np.zeros(1), sigma2)
    got = integrate_psd(grid, spec.psd_sites[0])
    assert abs(got - var["site_1"]) <= 0.02 * var["site_1"]


def test_psd_integrates_to_lyapunov_variance_two_site():
    p = two_site(0.6, 0.15)
    sigma2 = 0.3
    mu = mf.characteristic_exponents(p, np.zeros(2))
    span = 20 * np.abs(mu).max()
    grid = np.linspace(-span, span, 60001)
    spec = fl.fluctuation_spectrum(p, np.zeros(2), sigma2, freq_grid=grid)
    var = lyapunov_channel_variances(p, np.zeros(2), sigma2)
    assert abs(integrate_psd(grid, spec.psd_s) - var["S"]) <= 0.02 * var["S"]
    assert abs(integrate_psd(grid, spec.psd_a) - var["A"]) <= 0.02 * var["A"]
    got = integrate_psd(grid, spec.psd_sites[0])
    assert abs(got - var["site_1"]) <= 0.02 * var["site_1"]


def test_single_site_lorentzian_far_below_threshold():
    # gamma << Delta, tiny drive: Lorentzian pair at +/-Delta, half-width gamma/2
    delta, gamma = 0.5, 0.02
    p = one_site(delta, 1e-4, gamma=gamma)
    grid = np.linspace(-1, 1, 20001)
    spec = fl.fluctuation_spectrum(p, np.zeros(1), 1.0, freq_grid=grid)
    psd = spec.psd_sites[0]
    w_pk = grid[np.argmax(psd)]
    assert abs(abs(w_pk) - delta) < 0.01 * delta
    pk = psd.max()
    for sign in (+1, -1):
        w_half = delta + sign * gamma / 2
        v = np.interp(w_half, grid, psd)
        assert abs(v - pk / 2) < 0.05 * pk
