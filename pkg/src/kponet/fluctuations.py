"""Linearized fluctuation theory around a mean-field steady state.

Small deviations delta-a_j from a fixed point obey a bilinear (Bogoliubov)
generator built from an N x N frequency block Omega and a squeezing block
S.  Equivalently, the real quadrature vector delta-Y follows
d(delta-Y)/dt = M_J delta-Y + Xi with M_J the mean-field Jacobian and Xi
white noise of two-sided PSD sigma^2 per component.  This module provides

* the (Omega, S) blocks and their eigenvalue equivalence with M_J,
* the closed-form fluctuation PSD per exponent (valid when exponents come
  in conjugate pairs and the eigenvectors factor as w (x) (e, 1)),
* the exact transfer-function PSD (direct linear solve per frequency),
  always computed alongside as ground truth,
* the symmetric/antisymmetric channel decomposition for N = 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import meanfield
from .params import NetworkParams

METHOD_CLOSED_FORM = "c3"
METHOD_TRANSFER = "transfer"


@dataclass(frozen=True)
class BdgBlocks:
    """Bilinear-expansion blocks around a steady state.

    omega_block carries detuning, Kerr shift and coupling; squeeze_block
    the (symmetric) anomalous terms from drive and Kerr.
    """

    omega_block: np.ndarray
    squeeze_block: np.ndarray


def bdg_matrix(params: NetworkParams, alpha) -> BdgBlocks:
    """(Omega, S) blocks at ``alpha``; rejects non-stationary points.

    Omega_jj = -Delta_j + 2 V_j |alpha_j|^2, Omega_jk = J_jk,
    S_jj = V_j alpha_j^2 - G_j.  Sign conventions are pinned by the
    requirement that the complex-linearization eigenvalues reproduce the
    Jacobian spectrum (see bdg_exponents).
    """
    alpha = np.asarray(alpha, dtype=complex)
    res = float(np.abs(meanfield.drift(params, alpha)).max())
    a = max(meanfield.amplitude_scale(params), 1.0)
    res_scale = float(np.max(np.abs(params.kerr))) * a ** 3
    if res > 1e-8 * max(res_scale, 1e-300):
        raise ValueError(
            f"alpha is not a steady state (residual {res:.3g} > 1e-8 scale)")
    delta, v, g = params.detunings, params.kerr, params.drive
    omega_block = np.diag(-delta + 2.0 * v * np.abs(alpha) ** 2).astype(complex)
    omega_block += params.coupling
    squeeze_block = np.diag(v * alpha ** 2 - g)
    return BdgBlocks(omega_block=omega_block, squeeze_block=squeeze_block)


def bdg_exponents(blocks: BdgBlocks, damping) -> np.ndarray:
    """Eigenvalues of the complex linearization built from (Omega, S).

    The doubled system for (delta-a, delta-a*) with -gamma/2 damping on
    the diagonal has the same 2N eigenvalues as the real Jacobian M_J.
    """
    om, sq = blocks.omega_block, blocks.squeeze_block
    n = om.shape[0]
    gd = np.diag(np.broadcast_to(np.asarray(damping, dtype=float), (n,)))
    a = np.block([
        [-1j * om - 0.5 * gd, -1j * sq],
        [1j * np.conj(sq), 1j * np.conj(om) - 0.5 * gd],
    ])
    return meanfield._sort_exponents(np.linalg.eigvals(a))


def sa_transform(series_1, series_2):
    """Symmetric/antisymmetric combinations (z1 +/- z2)/sqrt(2).

    Accepts real or complex series (a complex value packs the Re and Im
    quadratures); applying the transform twice returns the input.
    """
    z1 = np.asarray(series_1)
    z2 = np.asarray(series_2)
    if z1.shape != z2.shape:
        raise ValueError(f"length mismatch: {z1.shape} vs {z2.shape}")
    inv = 1.0 / np.sqrt(2.0)
    return inv * (z1 + z2), inv * (z1 - z2)


def analytic_psd(mu: complex, e: complex, sigma2: float, freq_grid) -> np.ndarray:
    """Closed-form channel PSD for one conjugate exponent pair.

    ``mu`` is either member of the pair and ``e`` the corresponding
    eigenvector parameter from the factorization w (x) (e, 1).  The
    returned array combines the Re and Im quadratures of the channel.
    Raises for Im(e) = 0 where the formula is singular (overdamped
    exponents); callers fall back to transfer_psd.
    """
    w = np.asarray(freq_grid, dtype=float)
    mre, mim = float(np.real(mu)), float(np.imag(mu))
    ere, eim = float(np.real(e)), float(np.imag(e))
    if eim == 0.0:
        raise ValueError("Im(e) = 0: closed form singular, use transfer_psd")
    num = sigma2 * (
        mim ** 2 * (2.0 * eim ** 2 * ere ** 2 + eim ** 4 + (ere ** 2 + 1.0) ** 2)
        + 2.0 * eim ** 2 * (mre ** 2 + w ** 2)
    )
    den = eim ** 2 * (
        (mim ** 2 - w ** 2) ** 2
        + mre ** 2 * (2.0 * mim ** 2 + mre ** 2 + 2.0 * w ** 2)
    )
    return num / den


def transfer_psd(m_j, sigma2: float, freq_grid, transform=None) -> np.ndarray:
    """Exact per-coordinate PSDs sigma^2 sum_k |[T (-i w - M_J)^-1]_rk|^2.

    Returns an array (n_rows, n_freq); ``transform`` selects linear
    combinations of the quadratures (identity when omitted).
    """
    m = np.asarray(m_j, dtype=float)
    dim = m.shape[0]
    t = np.eye(dim) if transform is None else np.asarray(transform, dtype=float)
    w = np.asarray(freq_grid, dtype=float)
    a = -1j * w[:, None, None] * np.eye(dim) - m[None, :, :]
    r = np.linalg.inv(a)
    tr = np.einsum("rj,fjk->frk", t, r)
    return (sigma2 * np.sum(np.abs(tr) ** 2, axis=2)).T


def stationary_covariance(m_j, sigma2: float) -> np.ndarray:
    """Covariance P of the linear Langevin system, M P + P M^T = -sigma^2 I."""
    m = np.asarray(m_j, dtype=float)
    return scipy.linalg.solve_continuous_lyapunov(m, -sigma2 * np.eye(m.shape[0]))


def _sa_matrix():
    inv = 1.0 / np.sqrt(2.0)
    return inv * np.array([
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [1.0, 0.0, -1.0, 0.0],
        [0.0, 1.0, 0.0, -1.0],
    ])


def _block_eigendata(block):
    """(mu, e) of a real 2x2 block when its pair is complex, else None."""
    evals, evecs = np.linalg.eig(block)
    if np.abs(evals.imag).max() <= 1e-12 * max(np.abs(evals).max(), 1e-300):
        return None
    k = int(np.argmax(evals.imag))
    mu = complex(evals[k])
    v = evecs[:, k]
    if abs(v[1]) < 1e-300:
        return None
    return mu, complex(v[0] / v[1])


@dataclass(frozen=True)
class FluctuationSpectrum:
    """PSDs of the fluctuations around one stable state.

    ``psd_sites[j]`` is the combined Re+Im quadrature PSD of site j;
    ``psd_s``/``psd_a`` the symmetric/antisymmetric channels (None when
    N != 2).  ``methods`` records per channel whether the closed form or
    the transfer-function route produced the primary arrays; the
    ``*_transfer`` arrays always hold the transfer-function result.
    ``eigvec_params``/``symmetry_tags`` align with ``exponents``; entries
    are NaN/None when the eigenvectors do not factor (inhomogeneous
    networks).
    """

    exponents: np.ndarray
    eigvec_params: np.ndarray
    symmetry_tags: tuple
    freq_grid: np.ndarray
    psd_sites: np.ndarray
    psd_s: np.ndarray | None
    psd_a: np.ndarray | None
    psd_sites_transfer: np.ndarray
    psd_s_transfer: np.ndarray | None
    psd_a_transfer: np.ndarray | None
    methods: dict
    flags: tuple = ()


def default_freq_grid(exponents, damping, n_points: int = 2048) -> np.ndarray:
    """2048 points over [0, 4 max(|Im mu|, gamma)]."""
    im = float(np.abs(np.imag(exponents)).max()) if len(exponents) else 0.0
    g = float(np.max(damping))
    top = 4.0 * max(im, g)
    if top <= 0:
        top = 4.0 * max(float(np.abs(exponents).max()), 1.0)
    return np.linspace(0.0, top, n_points)


def fluctuation_spectrum(params: NetworkParams, alpha, sigma2: float,
                         freq_grid=None) -> FluctuationSpectrum:
    """Full PSD bundle around the stable state ``alpha``.

    Uses the closed-form PSD per channel whenever the Jacobian decouples
    into S/A blocks with complex conjugate pairs (homogeneous N = 2, or
    N = 1); otherwise, and always in parallel, the exact transfer
    function.  Site PSDs for homogeneous N = 2 are (S + A)/2.
    """
    alpha = np.asarray(alpha, dtype=complex)
    n = params.n_sites
    m_j = meanfield.jacobian(params, alpha)
    bdg_matrix(params, alpha)  # enforce stationarity precondition
    exponents = meanfield._sort_exponents(np.linalg.eigvals(m_j))
    if exponents[0].real >= 0:
        raise ValueError("state is not linearly stable; PSD undefined")
    if freq_grid is None:
        freq_grid = default_freq_grid(exponents, params.damping)
    freq_grid = np.asarray(freq_grid, dtype=float)

    flags: list[str] = []
    methods: dict[str, str] = {}
    evec = np.full(2 * n, np.nan + 0j)
    tags: list = [None] * (2 * n)

    site_rows = transfer_psd(m_j, sigma2, freq_grid)
    psd_sites_tr = np.stack([site_rows[2 * j] + site_rows[2 * j + 1]
                             for j in range(n)])
    psd_s_tr = psd_a_tr = None
    psd_s = psd_a = None
    psd_sites = psd_sites_tr
    for j in range(n):
        methods[f"site_{j + 1}"] = METHOD_TRANSFER

    def tag_pair(mu, e, label):
        # attach (e, label) to the two sorted exponents matching mu, conj(mu)
        for target, ev in ((mu, e), (np.conj(mu), np.conj(e))):
            k = int(np.argmin(np.abs(exponents - target)))
            evec[k] = ev
            tags[k] = label

    if n == 2:
        t = _sa_matrix()
        sa_rows = transfer_psd(m_j, sigma2, freq_grid, transform=t)
        psd_s_tr = sa_rows[0] + sa_rows[1]
        psd_a_tr = sa_rows[2] + sa_rows[3]
        psd_s, psd_a = psd_s_tr, psd_a_tr
        methods["S"] = methods["A"] = METHOD_TRANSFER
        mt = t @ m_j @ t.T
        off = max(np.abs(mt[:2, 2:]).max(), np.abs(mt[2:, :2]).max())
        if off <= 1e-9 * max(np.abs(mt).max(), 1e-300):
            for label, block in (("S", mt[:2, :2]), ("A", mt[2:, 2:])):
                data = _block_eigendata(block)
                if data is None:
                    flags.append(f"{label} pair overdamped: transfer PSD used")
                    continue
                mu, e = data
                tag_pair(mu, e, label)
                if e.imag == 0.0:
                    flags.append(f"Im(e)=0 on {label}: transfer PSD used")
                    continue
                curve = analytic_psd(mu, e, sigma2, freq_grid)
                if label == "S":
                    psd_s = curve
                else:
                    psd_a = curve
                methods[label] = METHOD_CLOSED_FORM
            if methods["S"] == METHOD_CLOSED_FORM and methods["A"] == METHOD_CLOSED_FORM:
                psd_sites = np.stack([0.5 * (psd_s + psd_a)] * 2)
                methods["site_1"] = methods["site_2"] = METHOD_CLOSED_FORM
        else:
            flags.append("Jacobian does not decouple into S/A blocks: "
                         "transfer PSD used for all channels")
    elif n == 1:
        data = _block_eigendata(m_j)
        if data is not None and data[1].imag != 0.0:
            mu, e = data
            tag_pair(mu, e, "site")
            psd_sites = analytic_psd(mu, e, sigma2, freq_grid)[None, :]
            methods["site_1"] = METHOD_CLOSED_FORM
        else:
            flags.append("site pair overdamped: transfer PSD used")
    else:
        flags.append("N > 2: transfer PSD used for all channels")

    return FluctuationSpectrum(
        exponents=exponents, eigvec_params=evec, symmetry_tags=tuple(tags),
        freq_grid=freq_grid, psd_sites=psd_sites, psd_s=psd_s, psd_a=psd_a,
        psd_sites_transfer=psd_sites_tr, psd_s_transfer=psd_s_tr,
        psd_a_transfer=psd_a_tr, methods=methods, flags=tuple(flags))
