from __future__ import annotations

import numpy as np
import pytest

from kponet.params import (
    CalibrationInputs,
    NetworkParams,
    calibrate_drive,
    calibrate_noise,
    detunings,
    linear_matrix,
    lobe_threshold,
    normal_mode_basis,
    normal_mode_drives,
)

SQRT2 = np.sqrt(2.0)


def chain_coupling(n, j):
    J = np.zeros((n, n))
    for i in range(n - 1):
        J[i, i + 1] = J[i + 1, i] = j
    return J


def test_detunings_arithmetic():
    # Delta_j = omega_G/2 - omega_j - V_j, elementwise
    d = detunings(omega=[1.0, 1.1], kerr=[0.01, 0.02], drive_freq=2.4)
    assert np.allclose(d, [2.4 / 2 - 1.0 - 0.01, 2.4 / 2 - 1.1 - 0.02], atol=0, rtol=1e-15)


def test_network_params_validation():
    J = np.array([[0.0, -0.25], [-0.25, 0.0]])
    p = NetworkParams(2, omega=1.0, kerr=1.0, drive=0.3, drive_freq=2.0, coupling=J, damping=0.1)
    assert p.omega.shape == (2,)
    assert not p.coupling.flags.writeable
    with pytest.raises(ValueError):
        NetworkParams(2, 1.0, 1.0, 0.3, 2.0, np.array([[0.0, 0.1], [0.2, 0.0]]), 0.1)
    with pytest.raises(ValueError):
        NetworkParams(2, 1.0, 1.0, 0.3, 2.0, np.array([[0.5, 0.1], [0.1, 0.0]]), 0.1)
    with pytest.raises(ValueError):
        NetworkParams(2, 1.0, 1.0, 0.3, 2.0, J, damping=-0.1)
    with pytest.raises(ValueError):
        NetworkParams(0, 1.0, 1.0, 0.3, 2.0, np.zeros((0, 0)), 0.1)


def test_uncoupled_modes_are_trivial():
    # J = 0: eigen-detunings equal the site detunings, basis is a permutation
    delta = np.array([0.3, -0.2, 0.1])
    basis = normal_mode_basis(delta, np.zeros((3, 3)))
    assert np.allclose(np.sort(delta), basis.eigen_detunings, atol=1e-14)
    assert np.allclose(np.abs(basis.matrix), np.eye(3)[:, np.argsort(delta)], atol=1e-14)


def test_two_site_splitting():
    # identical sites: eigen-detunings Delta -/+ J with (1,1)/sqrt2 and (1,-1)/sqrt2 vectors
    delta, J = 0.1, -0.25
    basis = normal_mode_basis([delta, delta], np.array([[0.0, J], [J, 0.0]]))
    assert np.allclose(basis.eigen_detunings, [delta + J, delta - J], atol=1e-14)
    cols = basis.matrix
    # J < 0 puts the antisymmetric mode first (ascending eigen-detuning)
    assert np.allclose(cols[:, 0], [1 / SQRT2, -1 / SQRT2], atol=1e-14)
    assert np.allclose(cols[:, 1], [1 / SQRT2, 1 / SQRT2], atol=1e-14)


def test_three_site_chain_frozen_values():
    # open chain, Delta = 0, J = -0.25: spectrum of J*[[0,1,0],[1,0,1],[0,1,0]]
    # is {-sqrt2, 0, +sqrt2}*J, so eigen-detunings are {-sqrt2*0.25, 0, +sqrt2*0.25}
    basis = normal_mode_basis(np.zeros(3), chain_coupling(3, -0.25))
    expected = np.array([-SQRT2 * 0.25, 0.0, SQRT2 * 0.25])
    assert np.allclose(basis.eigen_detunings, expected, atol=1e-14)


def test_basis_orthogonal_and_diagonalising():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(1, 9))
        delta = rng.normal(size=n)
        J = rng.normal(size=(n, n))
        J = 0.5 * (J + J.T)
        np.fill_diagonal(J, 0.0)
        basis = normal_mode_basis(delta, J)
        U = basis.matrix
        assert np.abs(U.T @ U - np.eye(n)).max() < 1e-12
        h = linear_matrix(delta, J)
        d = U.T @ h @ U
        assert np.abs(d - np.diag(-basis.eigen_detunings)).max() < 1e-11
        assert np.all(np.diff(basis.eigen_detunings) >= -1e-14)
        # sign convention: first largest-magnitude component positive
        for k in range(n):
            i = int(np.argmax(np.abs(U[:, k])))
            assert U[i, k] > 0


def test_homogeneous_drive_stays_diagonal():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 9))
        J = rng.normal(size=(n, n))
        J = 0.5 * (J + J.T)
        np.fill_diagonal(J, 0.0)
        basis = normal_mode_basis(rng.normal(size=n), J)
        g = float(rng.uniform(0.1, 2.0))
        gt = normal_mode_drives(basis, g)
        assert np.abs(gt - g * np.eye(n)).max() < 1e-12


def test_single_site_drive_splits_evenly():
    basis = normal_mode_basis([0.0, 0.0], np.array([[0.0, -0.25], [-0.25, 0.0]]))
    g = 0.8
    gt = normal_mode_drives(basis, [g, 0.0])
    assert np.allclose(np.abs(gt), g / 2 * np.ones((2, 2)), atol=1e-14)
    assert np.allclose(gt, gt.T, atol=1e-15)


def test_lobe_threshold_values():
    assert lobe_threshold(0.0, 0.1) == pytest.approx(0.05, rel=1e-15)
    assert lobe_threshold(0.3, 0.0) == pytest.approx(0.3, rel=1e-15)
    th = lobe_threshold(np.array([-0.25, 0.25]), 0.1)
    assert np.allclose(th, np.sqrt(0.25**2 + 0.05**2), rtol=1e-15)
    # monotone in |eigen-detuning|
    d = np.linspace(0, 2, 50)
    assert np.all(np.diff(lobe_threshold(d, 0.3)) > 0)


def test_calibrations():
    cal = CalibrationInputs(u_drive=1.5, u_threshold=1.95, gamma0=7.0e4, noise_psd_in=1.1e-9)
    assert calibrate_drive(cal) == pytest.approx(7.0e4 * 1.5 / (2 * 1.95), rel=1e-15)
    with pytest.raises(ValueError):
        calibrate_drive(CalibrationInputs(1.5, 0.0, 7.0e4, 1.1e-9))
    varsigma2, sigma2 = calibrate_noise(cal, drive_freq=4.0e6)
    assert varsigma2 == pytest.approx(0.0035 * 1.1e-9, rel=1e-15)
    assert sigma2 == pytest.approx(varsigma2 / (2 * (2.0e6) ** 2), rel=1e-15)
    with pytest.raises(ValueError):
        calibrate_noise(cal, drive_freq=0.0)
