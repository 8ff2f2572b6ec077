"""Stochastic (Langevin) integration of the mean-field equations.

The deterministic drift from :mod:`kponet.meanfield` is driven by
uncorrelated Gaussian white noise of two-sided PSD sigma^2 on each real
quadrature.  An Euler-Maruyama stepper (additive noise, strong order 1)
produces trajectories; Welch estimation turns them into spectra; the
pump-noisy-probe protocol sweeps the drive frequency while carrying the
state across points, reproducing hysteretic frequency scans.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal
from numba import njit

from . import meanfield
from .params import NetworkParams

_CHUNK = 1 << 20


class DivergedError(RuntimeError):
    """Trajectory left the finite domain (unstable step size or blow-up)."""


@dataclass(frozen=True)
class NoiseSpec:
    """White-noise level and RNG seed.

    ``psd`` is the two-sided PSD sigma^2 per real quadrature
    (quadrature^2 * s); ``seed`` the 64-bit master seed.
    """

    psd: float
    seed: int = 0

    def __post_init__(self):
        if self.psd < 0:
            raise ValueError("noise psd must be >= 0")


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled complex amplitudes; samples[k] is the state after
    step k+1, i.e. at time t0 + (k+1)*dt."""

    dt: float
    samples: np.ndarray
    t0: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(1, self.samples.shape[0] + 1)


@njit(cache=True)
def _em_chunk(delta, v, g, gamma, J, alpha, noise, dt, amp, out):
    steps, n = out.shape
    for s in range(steps):
        for j in range(n):
            lin = 0.0 + 0.0j
            for k in range(n):
                lin += J[j, k] * alpha[k]
            a = alpha[j]
            d = 1j * (delta[j] * a - v[j] * (a.real * a.real + a.imag * a.imag) * a
                      + g[j] * np.conj(a) - lin) - 0.5 * gamma[j] * a
            out[s, j] = a + dt * d + amp * (noise[s, j, 0] + 1j * noise[s, j, 1])
        for j in range(n):
            alpha[j] = out[s, j]
    return alpha


def max_rate(params: NetworkParams, alpha0) -> float:
    """Stiffness estimate used by the step-size bound."""
    a2 = float(np.max(np.abs(np.asarray(alpha0, dtype=complex))) ** 2)
    delta = params.detunings
    per_site = np.abs(delta) + 2.0 * np.abs(params.drive) + 2.0 * np.abs(params.kerr) * a2
    r = max(float(np.max(params.damping)), float(np.max(per_site)))
    if params.n_sites > 1:
        r = max(r, float(np.abs(params.coupling).max()))
    return r


def default_dt(params: NetworkParams, amp_scale: float | None = None) -> float:
    """dt = 0.01 / max-rate, with the Kerr term evaluated at the saturation
    amplitude (or ``amp_scale`` when given)."""
    a = meanfield.amplitude_scale(params) if amp_scale is None else amp_scale
    return 0.01 / max_rate(params, [2.0 * a])


def integrate(params: NetworkParams, noise: NoiseSpec, alpha0, dt: float,
              duration: float) -> Trajectory:
    """Euler-Maruyama integration over floor(duration/dt) steps.

    Each real quadrature receives an independent Gaussian increment of
    standard deviation sqrt(psd*dt) per step; the noise value consumed at
    (step, site, quadrature) is fixed by the seed alone, so identical
    seeds give bit-identical trajectories.
    """
    alpha0 = np.asarray(alpha0, dtype=complex).copy()
    n = params.n_sites
    if alpha0.shape != (n,):
        raise ValueError(f"alpha0 must have shape ({n},)")
    bound = 0.05 / max_rate(params, alpha0)
    if dt > bound:
        raise ValueError(f"dt={dt:.3g} exceeds stability bound {bound:.3g}")
    if duration < dt:
        raise ValueError("duration must be at least dt")
    steps = int(np.floor(duration / dt))
    rng = np.random.default_rng(noise.seed)
    amp = float(np.sqrt(noise.psd * dt))
    out = np.empty((steps, n), dtype=np.complex128)
    delta = np.ascontiguousarray(params.detunings)
    v = np.ascontiguousarray(params.kerr)
    g = np.ascontiguousarray(params.drive)
    gamma = np.ascontiguousarray(params.damping)
    J = np.ascontiguousarray(params.coupling)
    alpha = alpha0
    done = 0
    while done < steps:
        m = min(_CHUNK, steps - done)
        if amp > 0.0:
            xi = rng.standard_normal((m, n, 2))
        else:
            xi = np.zeros((m, n, 2))
        alpha = _em_chunk(delta, v, g, gamma, J, alpha, xi, dt,
                          amp, out[done:done + m])
        if not np.all(np.isfinite(alpha)):
            bad = np.argwhere(~np.isfinite(out[:done + m]).all(axis=1))
            first = int(bad[0, 0]) if len(bad) else done
            raise DivergedError(
                f"trajectory diverged near step {first} (t={first * dt:.3g}); "
                f"max |alpha| before failure "
                f"{np.nanmax(np.abs(out[:first + 1])) if first else 0:.3g}")
        done += m
    return Trajectory(dt=dt, samples=out)


def _integrate_from(params, psd, rng, alpha, dt, steps):
    # internal variant sharing one rng across settle/record segments
    n = params.n_sites
    amp = float(np.sqrt(psd * dt))
    out = np.empty((steps, n), dtype=np.complex128)
    delta = np.ascontiguousarray(params.detunings)
    v = np.ascontiguousarray(params.kerr)
    g = np.ascontiguousarray(params.drive)
    gamma = np.ascontiguousarray(params.damping)
    J = np.ascontiguousarray(params.coupling)
    a = np.asarray(alpha, dtype=complex).copy()
    done = 0
    while done < steps:
        m = min(_CHUNK, steps - done)
        xi = rng.standard_normal((m, n, 2)) if amp > 0 else np.zeros((m, n, 2))
        a = _em_chunk(delta, v, g, gamma, J, a, xi, dt, amp, out[done:done + m])
        if not np.all(np.isfinite(a)):
            raise DivergedError(f"probe trajectory diverged near step {done + m}")
        done += m
    return out, a


def welch_psd(series, dt: float, segment_len: int | None = None,
              overlap_frac: float = 0.5, window: str = "hann"):
    """Two-sided Welch PSD on an angular-frequency axis.

    Normalized so that white noise of two-sided PSD sigma^2 returns a
    flat sigma^2.  Defaults: Hann window, 50% overlap, segments of 1/16
    of the record.  Returns (omega, psd) with omega ascending.
    """
    x = np.asarray(series)
    if segment_len is None:
        segment_len = max(len(x) // 16, 8)
    if segment_len > len(x):
        raise ValueError("segment_len exceeds series length")
    if not 0.0 <= overlap_frac < 1.0:
        raise ValueError("overlap_frac must be in [0, 1)")
    f, pxx = scipy.signal.welch(
        x, fs=1.0 / dt, window=window, nperseg=segment_len,
        noverlap=int(overlap_frac * segment_len), detrend=False,
        return_onesided=False, scaling="density")
    order = np.argsort(f, kind="stable")
    # angular axis: omega = 2 pi f; density per (rad/s)/(2 pi) keeps the
    # white-noise plateau at sigma^2 under Var = (1/2pi) int S domega
    return 2.0 * np.pi * f[order], pxx[order]


@dataclass(frozen=True)
class ProbePoint:
    """One sweep point of the pump-noisy-probe protocol."""

    sweep_value: float
    branch_symmetry: str
    branch_amplitudes: np.ndarray
    mean_amplitudes: np.ndarray
    jump_flag: bool
    psd_sites: np.ndarray
    psd_s: np.ndarray | None
    psd_a: np.ndarray | None


@dataclass(frozen=True)
class ProbeResult:
    kind: str
    freq_grid: np.ndarray
    dt: float
    points: list[ProbePoint]


def pump_noisy_probe(params: NetworkParams, noise: NoiseSpec, values,
                     kind: str = "f_d", settle_time: float | None = None,
                     record_time: float | None = None, dt: float | None = None,
                     segment_frac: float = 1.0 / 16.0,
                     alpha0=None) -> ProbeResult:
    """Hysteretic drive-frequency sweep with spectra per point.

    At each sweep value the detunings are recomputed, the system settles
    under noise (>= 10/gamma enforced), then a record (>= 100/gamma) is
    taken; the mean over the record is subtracted, S/A channels formed,
    and Welch PSDs emitted together with the label of the steady-state
    branch nearest to the mean.  The final state carries over to the
    next point, as in the experiment's frequency sweeps.  Jumps between
    attractors during the record are flagged (mean shift between record
    halves > 3x fluctuation RMS).
    """
    gmin = float(np.min(params.damping))
    if gmin <= 0:
        raise ValueError("probe protocol requires positive damping")
    if settle_time is None:
        settle_time = 10.0 / gmin
    if record_time is None:
        record_time = 100.0 / gmin
    if settle_time < 10.0 / gmin - 1e-12:
        raise ValueError(f"settle_time must be >= 10/gamma = {10.0 / gmin:.3g}")
    if record_time < 100.0 / gmin - 1e-12:
        raise ValueError(f"record_time must be >= 100/gamma = {100.0 / gmin:.3g}")
    values = np.asarray(values, dtype=float)
    n = params.n_sites

    swept = [meanfield.params_at(params, float(v), kind) for v in values]
    if dt is None:
        worst = 0.0
        for p in swept:
            worst = max(worst, max_rate(p, [2.0 * meanfield.amplitude_scale(p)]))
        dt = 0.01 / worst
    settle_steps = int(np.floor(settle_time / dt))
    record_steps = int(np.floor(record_time / dt))
    segment = max(int(record_steps * segment_frac), 8)

    state = np.zeros(n, dtype=complex) if alpha0 is None else \
        np.asarray(alpha0, dtype=complex).copy()
    points: list[ProbePoint] = []
    freq_grid = None
    prev_states = None
    for i, p in enumerate(swept):
        rng = np.random.default_rng(np.random.SeedSequence(noise.seed, spawn_key=(i,)))
        bound = 0.05 / max_rate(p, state)
        if dt > bound:
            raise ValueError(f"dt={dt:.3g} exceeds stability bound {bound:.3g} "
                             f"at sweep point {i}")
        _, state = _integrate_from(p, noise.psd, rng, state, dt, settle_steps)
        rec, state = _integrate_from(p, noise.psd, rng, state, dt, record_steps)
        mean = rec.mean(axis=0)
        delta_rec = rec - mean
        # nearest steady-state branch to the recorded mean
        states = meanfield.find_steady_states(p, seeds=prev_states, n_random=32)
        prev_states = np.array([s.amplitudes for s in states])
        d = [float(np.linalg.norm(mean - s.amplitudes)) for s in states]
        nearest = states[int(np.argmin(d))]
        # jump detection: half-record mean shift vs fluctuation RMS
        h = record_steps // 2
        m1 = rec[:h].mean(axis=0)
        m2 = rec[h:].mean(axis=0)
        rms = float(np.sqrt(np.mean(np.sum(np.abs(delta_rec) ** 2, axis=1))))
        shift = float(np.linalg.norm(m1 - m2))
        jump = bool(shift > 3.0 * rms) if rms > 0 else bool(shift > 0)

        psd_sites = []
        for j in range(n):
            w, p_re = welch_psd(delta_rec[:, j].real, dt, segment)
            _, p_im = welch_psd(delta_rec[:, j].imag, dt, segment)
            psd_sites.append(p_re + p_im)
        psd_sites = np.stack(psd_sites)
        psd_s = psd_a = None
        if n == 2:
            zs, za = np.sqrt(0.5) * (delta_rec[:, 0] + delta_rec[:, 1]), \
                np.sqrt(0.5) * (delta_rec[:, 0] - delta_rec[:, 1])
            _, s_re = welch_psd(zs.real, dt, segment)
            _, s_im = welch_psd(zs.imag, dt, segment)
            _, a_re = welch_psd(za.real, dt, segment)
            _, a_im = welch_psd(za.imag, dt, segment)
            psd_s, psd_a = s_re + s_im, a_re + a_im
        if freq_grid is None:
            freq_grid = w
        points.append(ProbePoint(
            sweep_value=float(values[i]), branch_symmetry=nearest.symmetry,
            branch_amplitudes=nearest.amplitudes, mean_amplitudes=mean,
            jump_flag=jump, psd_sites=psd_sites, psd_s=psd_s, psd_a=psd_a))
    return ProbeResult(kind=kind, freq_grid=freq_grid, dt=dt, points=points)
