"""Classical steady states of the driven Kerr network.

The mean-field amplitudes obey

    d(alpha_j)/dt = i*(Delta_j*alpha_j - V_j*|alpha_j|^2*alpha_j
                       + G_j*conj(alpha_j) - sum_k J_jk*alpha_k)
                    - gamma_j/2 * alpha_j

in the frame rotating at half the drive frequency.  This module finds
all fixed points by a deflated multi-start Newton search, classifies
their symmetry, computes linear stability, and scans parameter grids
(bifurcation sweeps, two-parameter phase diagrams, exceptional points).
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import qmc

from .params import NetworkParams, normal_mode_basis, normal_mode_drives

# symmetry labels of a steady state (two-site networks resolve S/A)
LABEL_ZERO = "Zero"
LABEL_SYM = "S"
LABEL_ANTI = "A"
LABEL_MIXED = "M"

_LABEL_RANK = {LABEL_ZERO: 0, LABEL_SYM: 1, LABEL_ANTI: 2, LABEL_MIXED: 3}

# phase-diagram color codes, keyed by the set of stable nonzero labels
CODE_NONE = -1      # no stable state found at all (flagged)
CODE_ZERO = 0       # only the 0-state is stable (white)
CODE_S = 1          # S pair stable (blue)
CODE_SA = 2         # S and A stable (red)
CODE_SM = 3         # S and mixed stable (purple)
CODE_SAM = 4        # S, A and mixed stable (dark red)
CODE_OTHER = 5      # any other combination (flagged)


@dataclass(frozen=True)
class SteadyState:
    """A fixed point of the mean-field flow.

    ``amplitudes`` are the complex site amplitudes, ``exponents`` the
    eigenvalues of the real Jacobian sorted by descending real part
    (ties broken by ascending imaginary part).  ``residual`` is the max
    norm of the drift at the reported point.
    """

    amplitudes: np.ndarray
    stable: bool
    exponents: np.ndarray
    symmetry: str
    residual: float

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)
        e = np.asarray(self.exponents, dtype=complex)
        e.setflags(write=False)
        object.__setattr__(self, "exponents", e)


def _model_arrays(params: NetworkParams):
    return (params.detunings, params.kerr, params.drive, params.damping,
            params.coupling)


def amplitude_scale(params: NetworkParams) -> float:
    """Characteristic amplitude sqrt(max|G|/min V), 0 if undriven."""
    v = np.abs(params.kerr)
    if np.any(v == 0):
        return 0.0
    return float(np.sqrt(np.max(np.abs(params.drive) / v)))


def drift(params: NetworkParams, alpha) -> np.ndarray:
    """Complex mean-field velocity d(alpha)/dt at amplitudes ``alpha``."""
    alpha = np.asarray(alpha, dtype=complex)
    delta, v, g, gamma, J = _model_arrays(params)
    n2 = np.abs(alpha) ** 2
    lin = alpha @ J  # sum_k J_jk alpha_k, J symmetric
    return 1j * (delta * alpha - v * n2 * alpha + g * np.conj(alpha) - lin) \
        - 0.5 * gamma * alpha


def _drift_real(delta, v, g, gamma, J, y):
    # y[..., 0::2] = Re alpha, y[..., 1::2] = Im alpha
    u = y[..., 0::2]
    w = y[..., 1::2]
    n2 = u * u + w * w
    du = (-delta + v * n2 + g) * w + w @ J - 0.5 * gamma * u
    dw = (delta - v * n2 + g) * u - u @ J - 0.5 * gamma * w
    out = np.empty_like(y)
    out[..., 0::2] = du
    out[..., 1::2] = dw
    return out


def _jacobian_real(delta, v, g, gamma, J, y):
    # batched real Jacobian, interleaved (Re1, Im1, Re2, Im2, ...) ordering
    y = np.atleast_2d(y)
    s, n2dim = y.shape
    n = n2dim // 2
    u = y[:, 0::2]
    w = y[:, 1::2]
    idx = np.arange(n)
    auu = np.zeros((s, n, n))
    aww = np.zeros((s, n, n))
    auu[:, idx, idx] = 2.0 * v * u * w - 0.5 * gamma
    aww[:, idx, idx] = -2.0 * v * u * w - 0.5 * gamma
    auw = np.broadcast_to(J, (s, n, n)).copy()
    auw[:, idx, idx] += -delta + v * (u * u + 3.0 * w * w) + g
    awu = np.broadcast_to(-J, (s, n, n)).copy()
    awu[:, idx, idx] += delta - v * (3.0 * u * u + w * w) + g
    out = np.zeros((s, 2 * n, 2 * n))
    out[:, 0::2, 0::2] = auu
    out[:, 0::2, 1::2] = auw
    out[:, 1::2, 0::2] = awu
    out[:, 1::2, 1::2] = aww
    return out


def jacobian(params: NetworkParams, alpha) -> np.ndarray:
    """Real 2N x 2N Jacobian of the flow at ``alpha``.

    Coordinates are ordered (Re a_1, Im a_1, Re a_2, Im a_2, ...).
    """
    y = _complex_to_real(np.asarray(alpha, dtype=complex))
    delta, v, g, gamma, J = _model_arrays(params)
    return _jacobian_real(delta, v, g, gamma, J, y[None, :])[0]


def characteristic_exponents(params: NetworkParams, alpha) -> np.ndarray:
    """Eigenvalues of the Jacobian, Re descending then Im ascending."""
    mu = np.linalg.eigvals(jacobian(params, alpha))
    return _sort_exponents(mu)


def _sort_exponents(mu):
    # Re descending then Im ascending; the Re key is rounded at 1e-11
    # relative so that numerically tied pairs order deterministically
    scale = max(np.abs(mu).max(), 1e-300)
    key = np.round(mu.real / (1e-11 * scale))
    order = np.lexsort((mu.imag, -key))
    return mu[order]


def _complex_to_real(alpha):
    y = np.empty(alpha.shape[:-1] + (2 * alpha.shape[-1],))
    y[..., 0::2] = alpha.real
    y[..., 1::2] = alpha.imag
    return y


def _real_to_complex(y):
    return y[..., 0::2] + 1j * y[..., 1::2]


def classify_state(amplitudes, zero_scale: float, tol: float = 1e-3) -> str:
    """Symmetry label of a state: Zero, S, A or M.

    A state is Zero when every |alpha_j| < tol * zero_scale.  For two
    sites, S/A compare the amplitude sum and difference at relative
    tolerance ``tol``; larger networks only distinguish Zero from M.
    """
    a = np.asarray(amplitudes, dtype=complex)
    scale = zero_scale if zero_scale > 0 else 1.0
    if np.max(np.abs(a)) < tol * scale:
        return LABEL_ZERO
    if a.shape[-1] == 2:
        s = abs(a[0] + a[1])
        d = abs(a[0] - a[1])
        if d < tol * s:
            return LABEL_SYM
        if s < tol * d:
            return LABEL_ANTI
    return LABEL_MIXED


def _residual_tol(params: NetworkParams) -> float:
    a = max(amplitude_scale(params), 1.0)
    return 1e-10 * float(np.max(np.abs(params.kerr))) * a ** 3


def _deflation(yy, roots, dist_unit):
    """Shifted deflation factor m(y) = prod(1 + unit^2/|y-r|^2) and grad(log m)."""
    if len(roots) == 0:
        return np.ones(yy.shape[0]), np.zeros_like(yy)
    diff = yy[:, None, :] - roots[None, :, :]               # (s, R, dim)
    d2 = np.einsum("srk,srk->sr", diff, diff) / dist_unit ** 2
    d2 = np.maximum(d2, 1e-30)
    gfac = 1.0 + 1.0 / d2
    m = np.prod(gfac, axis=1)
    grad = np.einsum("sr,srk->sk", -2.0 / (d2 * d2 * gfac), diff) / dist_unit ** 2
    return m, grad


def _newton(delta, v, g, gamma, J, y0, roots, tol, dist_unit, max_iter=60):
    """Damped Newton on the (optionally deflated) drift, batched over starts.

    ``roots``: (R, 2N) known roots to deflate against (may be empty).
    Returns (y, ok) with ok marking starts that converged on the raw drift.
    """
    y = np.array(y0, dtype=float)
    s, dim = y.shape
    eye = np.eye(dim)
    step_cap = 5.0 * dist_unit
    active = np.arange(s)
    for _ in range(max_iter):
        if len(active) == 0:
            break
        ya = y[active]
        fr = _drift_real(delta, v, g, gamma, J, ya)
        m, grad = _deflation(ya, roots, dist_unit)
        f = m[:, None] * fr
        jac = _jacobian_real(delta, v, g, gamma, J, ya)
        jd = m[:, None, None] * jac \
            + fr[:, :, None] * (m[:, None] * grad)[:, None, :]
        jnorm = np.abs(jd).max(axis=(1, 2), keepdims=True)
        jd = jd + 1e-13 * np.maximum(jnorm, 1e-30) * eye
        try:
            step = np.linalg.solve(jd, -f[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.empty_like(f)
            for i in range(len(active)):
                try:
                    step[i] = np.linalg.solve(jd[i], -f[i])
                except np.linalg.LinAlgError:
                    step[i] = np.linalg.lstsq(jd[i], -f[i], rcond=None)[0]
        step = np.nan_to_num(step, nan=0.0, posinf=0.0, neginf=0.0)
        slen = np.linalg.norm(step, axis=1)
        big = slen > step_cap
        step[big] *= (step_cap / slen[big])[:, None]
        fn0 = np.abs(f).max(axis=1) + 1e-300
        lam = np.ones(len(active))
        ynew = ya + step
        for _ in range(6):
            frn = _drift_real(delta, v, g, gamma, J, ynew)
            mn, _ = _deflation(ynew, roots, dist_unit)
            fn = np.abs(mn[:, None] * frn).max(axis=1)
            bad = ~np.isfinite(fn) | (fn > (1.0 - 0.1 * lam) * fn0)
            bad &= lam > 1e-3
            if not bad.any():
                break
            lam[bad] *= 0.5
            ynew[bad] = ya[bad] + lam[bad, None] * step[bad]
        y[active] = ynew
        res = np.abs(_drift_real(delta, v, g, gamma, J, ynew)).max(axis=1)
        moved = lam * slen
        done = (res <= 0.1 * tol) | (moved < 1e-14 * dist_unit) \
            | ~np.isfinite(res) | (np.abs(ynew).max(axis=1) > 50.0 * dist_unit)
        active = active[~done]
    res = np.abs(_drift_real(delta, v, g, gamma, J, y)).max(axis=1)
    ok = (res <= tol) & np.all(np.isfinite(y), axis=1)
    return y, ok


def _polish(delta, v, g, gamma, J, y, tol):
    y = np.atleast_2d(np.array(y, dtype=float))
    for _ in range(30):
        f = _drift_real(delta, v, g, gamma, J, y)
        if np.abs(f).max() <= 0.01 * tol:
            break
        jac = _jacobian_real(delta, v, g, gamma, J, y)
        try:
            y = y + np.linalg.solve(jac, -f[..., None])[..., 0]
        except np.linalg.LinAlgError:
            break
    return y


def _sobol_starts(n_sites, radius, n_random):
    if n_random <= 0 or radius <= 0:
        return np.zeros((0, 2 * n_sites))
    sampler = qmc.Sobol(d=2 * n_sites, scramble=False)
    x = sampler.random(n_random)
    t = x[:, 0::2]
    phase = 2.0 * np.pi * x[:, 1::2]
    r = radius * np.sqrt(t)
    alpha = r * np.exp(1j * phase)
    return _complex_to_real(alpha)


def find_steady_states(params: NetworkParams, seeds=None, n_random: int = 64,
                       tol_classify: float = 1e-3) -> list[SteadyState]:
    """All mean-field fixed points, with stability and symmetry labels.

    Starts Newton from the origin, optional ``seeds`` (complex (S, N)
    continuation guesses) and ``n_random`` quasi-random points in the
    polydisk |alpha_j| <= 2*sqrt(max|G|/V), then repeats with deflation
    against the accumulated roots until no new root appears.  Mirror
    images -alpha (exact Z2 partners) are completed if a start missed
    them.  Duplicates are merged at 1e-6 in sqrt(G/V) units.
    """
    if np.any(params.kerr == 0):
        raise ValueError("find_steady_states requires nonzero Kerr on every site")
    delta, v, g, gamma, J = _model_arrays(params)
    n = params.n_sites
    a_scale = amplitude_scale(params)
    dist_unit = max(a_scale, 1.0)
    tol_dist = 1e-6 * dist_unit
    tol_res = _residual_tol(params)

    starts = [np.zeros((1, 2 * n))]
    if seeds is not None:
        seeds = np.atleast_2d(np.asarray(seeds, dtype=complex))
        starts.append(_complex_to_real(seeds))
    starts.append(_sobol_starts(n, 2.0 * a_scale, n_random))
    # deterministic extra starts on the linear-mode fold rings: for modes with
    # positive eigen-detuning, phase states are born near V|alpha|^2 = dk and
    # can sit outside the Sobol disk when dk >> G
    basis = normal_mode_basis(delta, J)
    gt = normal_mode_drives(basis, g)
    v_eff = float(np.mean(np.abs(v)))
    ring = []
    for k in range(n):
        dk = float(basis.eigen_detunings[k])
        gk = abs(float(gt[k, k]))
        for x in (dk, dk + gk):
            if x <= 0 or v_eff == 0:
                continue
            r = np.sqrt(x / v_eff)
            for th in (0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4):
                ring.append(r * basis.matrix[:, k] * np.exp(1j * th))
    if ring:
        starts.append(_complex_to_real(np.array(ring)))
    y0 = np.concatenate(starts, axis=0)

    roots: list[np.ndarray] = []

    def try_add(y):
        for cand in np.atleast_2d(y):
            if not np.all(np.isfinite(cand)):
                continue
            if np.abs(_drift_real(delta, v, g, gamma, J, cand[None])).max() > tol_res:
                continue
            if any(np.linalg.norm(cand - r) <= tol_dist for r in roots):
                continue
            roots.append(cand)

    for round_idx in range(5):
        found_before = len(roots)
        rt = np.array(roots) if roots else np.zeros((0, 2 * n))
        y, ok = _newton(delta, v, g, gamma, J, y0, rt, tol_res, dist_unit)
        if ok.any():
            try_add(_polish(delta, v, g, gamma, J, y[ok], tol_res))
        if round_idx > 0 and len(roots) == found_before:
            break

    # Z2 completion: the flow is odd under alpha -> -alpha
    for r in list(roots):
        try_add(_polish(delta, v, g, gamma, J, -r[None], tol_res))

    states = []
    for r in roots:
        alpha = _real_to_complex(r)
        f = _drift_real(delta, v, g, gamma, J, r[None])[0]
        mu = _sort_exponents(np.linalg.eigvals(
            _jacobian_real(delta, v, g, gamma, J, r[None])[0]))
        states.append(SteadyState(
            amplitudes=alpha,
            stable=bool(mu[0].real < 0.0),
            exponents=mu,
            symmetry=classify_state(alpha, a_scale, tol_classify),
            residual=float(np.abs(f).max()),
        ))
    states.sort(key=_state_sort_key(dist_unit))
    return states


def _state_sort_key(unit):
    def key(st: SteadyState):
        y = _complex_to_real(st.amplitudes) / unit
        return (_LABEL_RANK.get(st.symmetry, 9),
                round(float(np.linalg.norm(y)), 9),
                tuple(np.round(y, 9)))
    return key


# ---------------------------------------------------------------------------
# parameter sweeps


def params_at(params: NetworkParams, value: float, kind: str) -> NetworkParams:
    """Copy of ``params`` with one swept quantity replaced.

    kind 'delta' sets the site-0 detuning to ``value`` by moving the
    drive frequency (relative detunings between sites are preserved);
    'drive_freq' sets omega_G directly; 'f_d' sets omega_G = 4*pi*f_d
    (drive at twice the probe frequency); 'drive' sets a homogeneous G.
    """
    if kind == "delta":
        wg = 2.0 * (value + params.omega[0] + params.kerr[0])
        return params.with_drive_freq(wg)
    if kind == "drive_freq":
        return params.with_drive_freq(value)
    if kind == "f_d":
        return params.with_drive_freq(4.0 * np.pi * value)
    if kind == "drive":
        return params.with_drive(value)
    raise ValueError(f"unknown sweep kind {kind!r}")


@dataclass(frozen=True)
class BranchPoint:
    """States at one sweep value, with branch bookkeeping.

    ``branch_ids[i]`` tags ``states[i]`` with a persistent branch label
    matched by nearest amplitude to the previous point; ``bifurcations``
    holds sweep values (between this point and its predecessor) where
    the stable/unstable solution count changed.
    """

    sweep_value: float
    states: list[SteadyState]
    branch_ids: list[int]
    bifurcations: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class BifurcationDiagram:
    kind: str
    points: list[BranchPoint]

    @property
    def bifurcations(self) -> list[float]:
        out: list[float] = []
        for p in self.points:
            out.extend(p.bifurcations)
        return out


def _count_sig(states):
    ns = sum(1 for s in states if s.stable)
    return ns, len(states) - ns


def bifurcation_sweep(params: NetworkParams, values, kind: str = "delta",
                      n_random: int = 64) -> BifurcationDiagram:
    """Continuation sweep of the steady-state set along one parameter.

    Each point is seeded with the previous point's amplitudes (plus the
    usual random starts).  Branches are matched between neighbouring
    points by nearest amplitude; a match farther than 10% of the branch
    amplitude emits a warning.  Bifurcation values (midpoints of grid
    intervals where the stable or unstable count changes) are recorded
    on the later point.
    """
    values = np.asarray(values, dtype=float)
    points: list[BranchPoint] = []
    prev_states: list[SteadyState] = []
    prev_ids: list[int] = []
    next_id = 0
    unit = 1.0
    for i, val in enumerate(values):
        p = params_at(params, float(val), kind)
        unit = max(amplitude_scale(p), 1.0)
        seeds = np.array([s.amplitudes for s in prev_states]) if prev_states else None
        states = find_steady_states(p, seeds=seeds, n_random=n_random)
        ids = [-1] * len(states)
        if prev_states and states:
            dist = np.zeros((len(prev_states), len(states)))
            for a, sa in enumerate(prev_states):
                for b, sb in enumerate(states):
                    dist[a, b] = np.linalg.norm(sa.amplitudes - sb.amplitudes)
            rows, cols = linear_sum_assignment(dist)
            for a, b in zip(rows, cols):
                amp = max(np.linalg.norm(prev_states[a].amplitudes),
                          np.linalg.norm(states[b].amplitudes), 1e-3 * unit)
                if dist[a, b] > 0.1 * amp:
                    warnings.warn(
                        f"branch match distance {dist[a, b]:.3g} exceeds 10% of "
                        f"branch amplitude at sweep value {val:.6g}", stacklevel=2)
                ids[b] = prev_ids[a]
        for b in range(len(states)):
            if ids[b] < 0:
                ids[b] = next_id
                next_id += 1
        bifs = []
        if i > 0 and _count_sig(states) != _count_sig(prev_states):
            bifs.append(0.5 * (float(values[i - 1]) + float(val)))
        points.append(BranchPoint(float(val), states, ids, bifs))
        prev_states, prev_ids = states, ids
    return BifurcationDiagram(kind=kind, points=points)


# ---------------------------------------------------------------------------
# phase diagram


@dataclass(frozen=True)
class PhaseDiagram:
    """Stability map over a (detuning, drive) grid.

    ``code[i, j]`` encodes the set of stable nonzero-state labels at
    delta_values[i], drive_values[j] (CODE_* constants); ``brighter``
    flags cells where the 0-state is simultaneously stable.
    """

    delta_values: np.ndarray
    drive_values: np.ndarray
    code: np.ndarray
    brighter: np.ndarray
    n_stable: np.ndarray


def _encode_labels(stable_labels: set[str]) -> tuple[int, bool]:
    zero = LABEL_ZERO in stable_labels
    nonzero = frozenset(stable_labels - {LABEL_ZERO})
    table = {
        frozenset(): CODE_ZERO if zero else CODE_NONE,
        frozenset({LABEL_SYM}): CODE_S,
        frozenset({LABEL_SYM, LABEL_ANTI}): CODE_SA,
        frozenset({LABEL_SYM, LABEL_MIXED}): CODE_SM,
        frozenset({LABEL_SYM, LABEL_ANTI, LABEL_MIXED}): CODE_SAM,
    }
    code = table.get(nonzero, CODE_OTHER)
    brighter = zero and bool(nonzero)
    return code, brighter


def phase_diagram(params: NetworkParams, delta_values, drive_values,
                  threads: int = 1, n_random: int = 32) -> PhaseDiagram:
    """Classify stable-state content on a 2D (delta, drive) grid.

    Rows (fixed delta) are independent tasks; within a row the drive
    axis is walked with continuation seeding.  The result is identical
    for any thread count.
    """
    delta_values = np.asarray(delta_values, dtype=float)
    drive_values = np.asarray(drive_values, dtype=float)
    nd, ng = len(delta_values), len(drive_values)
    code = np.zeros((nd, ng), dtype=np.int8)
    brighter = np.zeros((nd, ng), dtype=bool)
    n_stable = np.zeros((nd, ng), dtype=np.int16)

    def run_row(i):
        p_row = params_at(params, float(delta_values[i]), "delta")
        prev = None
        for j, gval in enumerate(drive_values):
            p = params_at(p_row, float(gval), "drive")
            states = find_steady_states(p, seeds=prev, n_random=n_random)
            stable = [s for s in states if s.stable]
            labels = {s.symmetry for s in stable}
            code[i, j], brighter[i, j] = _encode_labels(labels)
            n_stable[i, j] = len(stable)
            prev = np.array([s.amplitudes for s in states]) if states else None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(run_row, range(nd)))
    else:
        for i in range(nd):
            run_row(i)
    return PhaseDiagram(delta_values, drive_values, code, brighter, n_stable)


# ---------------------------------------------------------------------------
# exceptional points


@dataclass(frozen=True)
class ExceptionalPoint:
    """Collision of a conjugate exponent pair with the real axis."""

    value: float
    index: int          # grid interval (index, index+1) bracketing the EP
    im_before: float    # |Im mu| of the colliding pair just before collision
    re_split_after: float  # real-part split just after


def detect_exceptional_points(values, exponents, rel_tol: float = 1e-6) -> list[ExceptionalPoint]:
    """Find conjugate-pair -> real-pair transitions along a 1D scan.

    ``exponents``: array (M, K) of characteristic exponents per scan
    point.  A transition is an exceptional point when the number of
    complex pairs drops between neighbouring points and the vanishing
    pair's |Im mu| decreases continuously into the collision.
    """
    values = np.asarray(values, dtype=float)
    exps = np.asarray(exponents, dtype=complex)
    scale = max(np.abs(exps).max(), 1e-300)
    tol = rel_tol * scale
    out = []
    n_cplx = np.sum(np.abs(exps.imag) > tol, axis=1) // 2
    for i in range(len(values) - 1):
        if n_cplx[i + 1] >= n_cplx[i] or n_cplx[i] == 0:
            continue
        ims = np.sort(np.abs(exps[i].imag))
        im_small = ims[ims > tol][0] if np.any(ims > tol) else 0.0
        # continuity: the soon-to-vanish pair is already the softest one
        # and has been shrinking over the preceding points
        hist = []
        for k in range(max(0, i - 2), i + 1):
            h = np.abs(exps[k].imag)
            h = h[h > tol]
            hist.append(h.min() if len(h) else 0.0)
        if len(hist) >= 2 and not np.all(np.diff(hist) <= tol):
            continue
        if im_small > 0.5 * np.abs(exps.imag).max():
            continue
        split = 0.0
        for k in range(i + 1, min(i + 4, len(values))):
            re = exps[k].real[np.abs(exps[k].imag) <= tol]
            if len(re) >= 2:
                split = max(split, float(re.max() - re.min()))
        out.append(ExceptionalPoint(
            value=0.5 * (values[i] + values[i + 1]),
            index=i, im_before=float(im_small), re_split_after=split))
    return out
