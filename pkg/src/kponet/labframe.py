"""Full (non-RWA) classical dynamics of the driven oscillator network.

The lab-frame model is a set of damped Duffing oscillators with a
parametrically modulated spring constant and bilinear position coupling:

    x''_j + gamma_j x'_j + omega_j^2 (1 - lambda_j cos(omega_G t)) x_j
          + A_j x_j^3 + sum_k C_jk x_k = 0,   C_jk = J_jk sqrt(omega_j omega_k)

integrated with fixed-step RK4.  A numerical lock-in (demodulation at
omega_G/2) recovers the rotating-frame coordinates, and a Floquet
monodromy bisection locates the parametric instability threshold in the
modulation depth.  Together these validate the rotating-wave reduction:
amplitudes map as x = sqrt(2 hbar/omega) Re(alpha e^{-i omega_G t/2}),
so the demodulated phasor equals sqrt(2 hbar/omega) conj(alpha).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal
from numba import njit

from .langevin import DivergedError
from .params import NetworkParams, _as_site_array

_CHUNK = 1 << 20


@dataclass(frozen=True)
class LabParams:
    """Lab-frame oscillator network parameters.

    mod_depth is the dimensionless depth of the spring-constant
    modulation; coupling holds the raw position-position coefficients
    (the force on site j includes -coupling[j, k] x_k); hbar enters
    only the Duffing<->Kerr map.
    """

    n_sites: int
    omega: np.ndarray
    mod_depth: np.ndarray
    duffing: np.ndarray
    coupling: np.ndarray
    damping: np.ndarray
    drive_freq: float
    hbar: float = 1.0

    def __post_init__(self):
        n = self.n_sites
        for name in ("omega", "mod_depth", "duffing", "damping"):
            object.__setattr__(self, name, _as_site_array(getattr(self, name), n, name))
        c = np.asarray(self.coupling, dtype=float)
        if c.shape != (n, n):
            raise ValueError(f"coupling must have shape ({n}, {n})")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coupling", c)
        if np.any(self.omega <= 0) or self.drive_freq <= 0:
            raise ValueError("frequencies must be positive")
        if np.any(self.mod_depth < 0):
            raise ValueError("mod_depth must be >= 0")
        if np.any(self.damping < 0):
            raise ValueError("damping must be >= 0")


def lab_params(params: NetworkParams, hbar: float = 1.0) -> LabParams:
    """Map rotating-frame network parameters to the lab frame.

    mod_depth = 4 G/omega, duffing = 4 omega^2 V/(3 hbar), coupling
    2 J_jk sqrt(omega_j omega_k); damping and pump frequency carry over.
    The position-position coefficient needs the factor 2 so the slow
    envelope reproduces hopping J: a term c x_j x_k splits the normal
    modes by c/omega, while hopping J splits them by 2J.
    """
    w = params.omega
    if np.any(w <= 0):
        raise ValueError("lab mapping needs omega > 0")
    c = 2.0 * params.coupling * np.sqrt(np.outer(w, w))
    return LabParams(
        n_sites=params.n_sites, omega=w, mod_depth=4.0 * params.drive / w,
        duffing=4.0 * w ** 2 * params.kerr / (3.0 * hbar), coupling=c,
        damping=params.damping, drive_freq=params.drive_freq, hbar=hbar)


@dataclass(frozen=True)
class LabTrajectory:
    """Positions and velocities sampled after each RK4 step."""

    dt: float
    x: np.ndarray
    v: np.ndarray
    t0: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(1, self.x.shape[0] + 1)


@njit(cache=True)
def _accel(omega2, lam, gamma, duff, coup, wg, t, x, v, out):
    n = x.shape[0]
    mod = np.cos(wg * t)
    for j in range(n):
        lin = 0.0
        for k in range(n):
            lin += coup[j, k] * x[k]
        out[j] = (-gamma[j] * v[j]
                  - omega2[j] * (1.0 - lam[j] * mod) * x[j]
                  - duff[j] * x[j] ** 3 - lin)


@njit(cache=True)
def _rk4_chunk(omega2, lam, gamma, duff, coup, wg, x, v, t0, dt, out_x, out_v):
    steps, n = out_x.shape
    k1x = np.empty(n)
    k2x = np.empty(n)
    k3x = np.empty(n)
    k4x = np.empty(n)
    k1v = np.empty(n)
    k2v = np.empty(n)
    k3v = np.empty(n)
    k4v = np.empty(n)
    xt = np.empty(n)
    vt = np.empty(n)
    for s in range(steps):
        t = t0 + s * dt
        _accel(omega2, lam, gamma, duff, coup, wg, t, x, v, k1v)
        for j in range(n):
            k1x[j] = v[j]
            xt[j] = x[j] + 0.5 * dt * k1x[j]
            vt[j] = v[j] + 0.5 * dt * k1v[j]
            k2x[j] = vt[j]
        _accel(omega2, lam, gamma, duff, coup, wg, t + 0.5 * dt, xt, vt, k2v)
        for j in range(n):
            xt[j] = x[j] + 0.5 * dt * k2x[j]
            vt[j] = v[j] + 0.5 * dt * k2v[j]
            k3x[j] = vt[j]
        _accel(omega2, lam, gamma, duff, coup, wg, t + 0.5 * dt, xt, vt, k3v)
        for j in range(n):
            xt[j] = x[j] + dt * k3x[j]
            vt[j] = v[j] + dt * k3v[j]
            k4x[j] = vt[j]
        _accel(omega2, lam, gamma, duff, coup, wg, t + dt, xt, vt, k4v)
        for j in range(n):
            x[j] += dt / 6.0 * (k1x[j] + 2.0 * k2x[j] + 2.0 * k3x[j] + k4x[j])
            v[j] += dt / 6.0 * (k1v[j] + 2.0 * k2v[j] + 2.0 * k3v[j] + k4v[j])
            out_x[s, j] = x[j]
            out_v[s, j] = v[j]


def integrate_lab(lab: LabParams, x0, v0, dt: float,
                  duration: float, t0: float = 0.0) -> LabTrajectory:
    """Fixed-step RK4 integration over floor(duration/dt) steps.

    Requires at least 40 steps per fast oscillation period; aborts with
    a diagnostic if the state leaves the finite domain.
    """
    bound = 2.0 * np.pi / (40.0 * float(np.max(lab.omega)))
    if dt > bound:
        raise ValueError(f"dt={dt:.3g} exceeds resolution bound {bound:.3g}")
    if duration < dt:
        raise ValueError("duration must be at least dt")
    n = lab.n_sites
    x = np.asarray(x0, dtype=float).copy()
    v = np.asarray(v0, dtype=float).copy()
    if x.shape != (n,) or v.shape != (n,):
        raise ValueError(f"x0 and v0 must have shape ({n},)")
    steps = int(np.floor(duration / dt))
    out_x = np.empty((steps, n))
    out_v = np.empty((steps, n))
    omega2 = lab.omega ** 2
    done = 0
    while done < steps:
        m = min(_CHUNK, steps - done)
        _rk4_chunk(omega2, lab.mod_depth, lab.damping, lab.duffing,
                   lab.coupling, lab.drive_freq, x, v, t0 + done * dt, dt,
                   out_x[done:done + m], out_v[done:done + m])
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise DivergedError(
                f"lab trajectory diverged before t={t0 + (done + m) * dt:.3g}")
        done += m
    return LabTrajectory(dt=dt, x=out_x, v=out_v, t0=t0)


def demodulate(series, dt: float, ref_freq: float, bandwidth: float,
               t0: float = 0.0):
    """Numerical lock-in at ref_freq with a single-pole low-pass filter.

    Returns the complex phasor y(t) = u + i v with the convention
    x = cos(ref t) -> 1 and x = sin(ref t) -> -i.  Sample k of the input
    is taken at time t0 + (k+1) dt, matching integrate_lab.
    """
    if bandwidth >= ref_freq / 5.0:
        raise ValueError("bandwidth must be below ref_freq/5")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    x = np.asarray(series, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    t = t0 + dt * np.arange(1, x.shape[0] + 1)
    z = 2.0 * x * np.exp(-1j * ref_freq * t)[:, None]
    # exact single-pole discretization of y' = bw (z - y), from rest
    a = float(np.exp(-bandwidth * dt))
    out = scipy.signal.lfilter([1.0 - a], [1.0, -a], z, axis=0)
    return out[:, 0] if squeeze else out


def _monodromy(lab: LabParams, mod_depth: np.ndarray, steps_per_period: int
               ) -> np.ndarray:
    """Fundamental matrix of the linearized (A=0) system over one pump
    period, by RK4 on the matrix equation."""
    n = lab.n_sites
    wg = lab.drive_freq
    period = 2.0 * np.pi / wg
    h = period / steps_per_period
    omega2 = lab.omega ** 2

    def rhs(t, y):
        x, v = y[:n], y[n:]
        stiff = omega2 * (1.0 - mod_depth * np.cos(wg * t))
        a = -(stiff[:, None] * x) - lab.coupling @ x - lab.damping[:, None] * v
        return np.vstack([v, a])

    y = np.eye(2 * n)
    t = 0.0
    for _ in range(steps_per_period):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y


def floquet_growth(lab: LabParams, mod_depth=None,
                   steps_per_period: int = 256) -> float:
    """log spectral radius of the monodromy matrix per pump period;
    positive means parametric instability of the zero state."""
    lam = lab.mod_depth if mod_depth is None else \
        _as_site_array(mod_depth, lab.n_sites, "mod_depth")
    m = _monodromy(lab, lam, steps_per_period)
    return float(np.log(np.max(np.abs(np.linalg.eigvals(m)))))


def lab_instability_threshold(lab: LabParams, lam_max: float,
                              tol: float = 1e-5,
                              steps_per_period: int = 256) -> float:
    """Smallest uniform modulation depth destabilizing the rest state.

    Bisects the Floquet growth exponent between 0 and lam_max; the
    site-resolved profile of lab.mod_depth is ignored (the scan is over
    a uniform depth, matching a uniform parametric drive).
    """
    lo, hi = 0.0, float(lam_max)
    g_lo = floquet_growth(lab, np.zeros(lab.n_sites), steps_per_period)
    g_hi = floquet_growth(lab, np.full(lab.n_sites, hi), steps_per_period)
    if g_lo >= 0:
        raise ValueError("rest state is already unstable at zero depth")
    if g_hi <= 0:
        raise ValueError(f"no instability below lam_max={lam_max}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if floquet_growth(lab, np.full(lab.n_sites, mid), steps_per_period) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
