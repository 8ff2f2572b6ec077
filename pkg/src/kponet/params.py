"""Model parameters, normal modes and instability thresholds.

A network of parametrically driven Kerr resonators is described in the
frame rotating at half the drive frequency.  Everything downstream (state
finding, fluctuation spectra, stochastic and quantum dynamics) consumes
the :class:`NetworkParams` container defined here.

Conventions
-----------
* All frequencies are angular (rad/s) unless explicitly converted.
* The two-photon drive amplitude ``G_j`` is real; a drive phase is
  absorbed into the phase of the mode amplitudes, so ``G_j >= 0`` is the
  canonical choice but negative values are accepted (they differ by a
  pi/2 rotation of the amplitude plane).
* ``hbar = 1`` throughout; lab-frame helpers take an explicit ``hbar``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_site_array(value, n_sites: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n_sites, float(arr))
    if arr.shape != (n_sites,):
        raise ValueError(f"{name} must be a scalar or length-{n_sites} array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NetworkParams:
    """Immutable parameter set for a driven Kerr resonator network.

    Parameters
    ----------
    n_sites : int
        Number of resonators, >= 1.
    omega : float or array
        Bare resonance frequencies ``omega_j`` (rad/s).
    kerr : float or array
        Kerr coefficients ``V_j`` (rad/s per photon).
    drive : float or array
        Two-photon drive amplitudes ``G_j`` (rad/s), real.
    drive_freq : float
        Parametric drive frequency ``omega_G`` (rad/s); the rotating
        frame runs at ``omega_G / 2``.
    coupling : array (n_sites, n_sites)
        Symmetric bilinear coupling ``J_jk`` (rad/s), zero diagonal.
    damping : float or array
        Energy decay rates ``gamma_j`` (rad/s), >= 0.
    """

    n_sites: int
    omega: np.ndarray
    kerr: np.ndarray
    drive: np.ndarray
    drive_freq: float
    coupling: np.ndarray
    damping: np.ndarray

    def __post_init__(self):
        n = int(self.n_sites)
        if n < 1:
            raise ValueError("n_sites must be >= 1")
        object.__setattr__(self, "n_sites", n)
        object.__setattr__(self, "omega", _as_site_array(self.omega, n, "omega"))
        object.__setattr__(self, "kerr", _as_site_array(self.kerr, n, "kerr"))
        object.__setattr__(self, "drive", _as_site_array(self.drive, n, "drive"))
        object.__setattr__(self, "drive_freq", float(self.drive_freq))
        object.__setattr__(self, "damping", _as_site_array(self.damping, n, "damping"))
        if np.any(self.damping < 0):
            raise ValueError("damping rates must be >= 0")
        J = np.asarray(self.coupling, dtype=float)
        if J.ndim == 0 and n == 1:
            J = np.zeros((1, 1))
        if J.shape != (n, n):
            raise ValueError(f"coupling must have shape ({n}, {n}), got {J.shape}")
        if not np.all(np.isfinite(J)):
            raise ValueError("coupling contains non-finite entries")
        if not np.allclose(J, J.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(J).max())):
            raise ValueError("coupling matrix must be symmetric")
        if np.any(np.abs(np.diag(J)) > 0):
            raise ValueError("coupling matrix must have zero diagonal")
        J = J.copy()
        J.setflags(write=False)
        object.__setattr__(self, "coupling", J)

    @property
    def detunings(self) -> np.ndarray:
        return detunings(self.omega, self.kerr, self.drive_freq)

    def with_drive_freq(self, drive_freq: float) -> "NetworkParams":
        return NetworkParams(self.n_sites, self.omega, self.kerr, self.drive,
                             float(drive_freq), self.coupling, self.damping)

    def with_drive(self, drive) -> "NetworkParams":
        return NetworkParams(self.n_sites, self.omega, self.kerr, drive,
                             self.drive_freq, self.coupling, self.damping)


@dataclass(frozen=True)
class NormalModeBasis:
    """Orthogonal basis diagonalising the linear (drive-free) network.

    ``matrix`` columns are eigenvectors of ``-diag(Delta) + J``;
    ``eigen_detunings`` holds the mode detunings in ascending order.
    """

    matrix: np.ndarray
    eigen_detunings: np.ndarray

    def __post_init__(self):
        for name in ("matrix", "eigen_detunings"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class CalibrationInputs:
    """Drive-chain and noise-floor calibration of an experimental run.

    ``u_drive``/``u_threshold`` are drive voltages, ``gamma0`` the
    single-site energy decay rate (rad/s), ``noise_psd_in`` the measured
    voltage noise floor (V^2/Hz) and ``coupling_const`` the transducer
    constant turning it into a force-noise density (Hz^4/V^2 scale).
    """

    u_drive: float
    u_threshold: float
    gamma0: float
    noise_psd_in: float
    coupling_const: float = 0.0035


def detunings(omega, kerr, drive_freq: float) -> np.ndarray:
    """Rotating-frame detunings ``Delta_j = omega_G/2 - omega_j - V_j``.

    The Kerr shift is included so that ``Delta_j = 0`` sits at the
    single-photon resonance of the weakly occupied oscillator.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    kerr = np.broadcast_to(np.asarray(kerr, dtype=float), omega.shape)
    return 0.5 * float(drive_freq) - omega - kerr


def linear_matrix(delta, coupling) -> np.ndarray:
    """Single-particle matrix ``-diag(Delta) + J`` of the linear network."""
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    J = np.asarray(coupling, dtype=float)
    return -np.diag(delta) + J


def normal_mode_basis(delta, coupling) -> NormalModeBasis:
    """Diagonalise the linear network.

    Returns a :class:`NormalModeBasis` whose columns satisfy
    ``(-diag(Delta) + J) u_k = -tilde(Delta)_k u_k`` with eigen-detunings
    sorted ascending.  The sign of each column is fixed by making its
    first largest-magnitude component positive, so the basis is unique.
    """
    h = linear_matrix(delta, coupling)
    evals, evecs = np.linalg.eigh(h)
    eigen_det = -evals
    order = np.argsort(eigen_det, kind="stable")
    eigen_det = eigen_det[order]
    U = evecs[:, order]
    for k in range(U.shape[1]):
        i = int(np.argmax(np.abs(U[:, k])))
        if U[i, k] < 0:
            U[:, k] = -U[:, k]
    return NormalModeBasis(matrix=U, eigen_detunings=eigen_det)


def normal_mode_drives(basis: NormalModeBasis, drive) -> np.ndarray:
    """Drive matrix in the normal-mode basis, ``U^T diag(G) U``.

    Site-homogeneous drive stays diagonal; inhomogeneous drive acquires
    off-diagonal (mode-mixing) two-photon terms.
    """
    U = basis.matrix
    g = np.broadcast_to(np.asarray(drive, dtype=float), (U.shape[0],))
    return U.T @ (g[:, None] * U)


def lobe_threshold(eigen_detuning, damping) -> np.ndarray:
    """Parametric instability threshold ``sqrt(tilde(Delta)^2 + (gamma/2)^2)``.

    A normal mode with detuning ``tilde(Delta)_k`` loses stability at the
    origin when its diagonal drive exceeds this value.
    """
    d = np.asarray(eigen_detuning, dtype=float)
    g = np.asarray(damping, dtype=float)
    return np.sqrt(d * d + 0.25 * g * g)


def calibrate_drive(cal: CalibrationInputs) -> float:
    """Drive amplitude ``G = gamma0 * U_d / (2 U_th)`` from voltages."""
    if cal.u_threshold <= 0:
        raise ValueError("threshold voltage must be positive")
    return cal.gamma0 * cal.u_drive / (2.0 * cal.u_threshold)


def calibrate_noise(cal: CalibrationInputs, drive_freq: float) -> tuple[float, float]:
    """Noise calibration: force-noise density and quadrature noise PSD.

    Returns ``(varsigma2, sigma2)`` where ``varsigma2 = c * S_n`` is the
    displacement-domain force-noise density and
    ``sigma2 = varsigma2 / (2 (omega_G/2)^2)`` the two-sided white PSD
    per real quadrature that enters the rotating-frame Langevin equation.
    """
    if drive_freq <= 0:
        raise ValueError("drive_freq must be positive")
    varsigma2 = cal.coupling_const * cal.noise_psd_in
    sigma2 = varsigma2 / (2.0 * (0.5 * drive_freq) ** 2)
    return varsigma2, sigma2
