"""Open-quantum-system treatment of small KPO networks.

Builds the rotating-frame Liouvillian (detuning, Kerr, two-photon drive,
hopping, single-photon loss at rate gamma/2 per site) on a truncated Fock
space, solves for the stationary density matrix, and projects it onto
joint quadrature distributions whose hot spots sit at the mean-field
attractors.  Cat-state helpers cover the symmetry-restoration picture:
the stationary mixture has vanishing mean amplitude even though every
contributing state breaks the subharmonic phase.

Conventions: hbar = 1; site j quadrature x_j = (a_j + a_j^dag)/sqrt(2),
so the vacuum has unit variance in P(x) = |psi_0|^2 = exp(-x^2)/sqrt(pi).
Density matrices are vectorized column-major: vec(A X B) = (B^T kron A) vec(X).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .params import NetworkParams


class NonConvergedError(RuntimeError):
    """Steady-state solve failed its residual or truncation checks."""


class DegenerateSteadyStateError(RuntimeError):
    """The Liouvillian nullspace has dimension > 1; no unique state."""


@dataclass(frozen=True)
class FockSpace:
    """Truncated product Fock space; site occupations run 0..n_max-1.

    Site 0 is the slowest (leftmost kron) factor, so a flat basis index
    decomposes as numpy's reshape to (n_max,)*n_sites.
    """

    n_sites: int
    n_max: int

    def __post_init__(self):
        if self.n_sites < 1 or self.n_max < 2:
            raise ValueError("need n_sites >= 1 and n_max >= 2")

    @property
    def dim(self) -> int:
        return self.n_max ** self.n_sites

    def annihilation(self, site: int) -> sp.csr_matrix:
        a = sp.diags(np.sqrt(np.arange(1, self.n_max)), 1, format="csr")
        ops = [sp.identity(self.n_max, format="csr")] * self.n_sites
        ops[site] = a
        out = ops[0]
        for o in ops[1:]:
            out = sp.kron(out, o, format="csr")
        return out

    def number(self, site: int) -> sp.csr_matrix:
        a = self.annihilation(site)
        return (a.conj().T @ a).tocsr()

    def parity(self) -> sp.csr_matrix:
        """Total photon parity (-1)^(sum_j n_j), the Z2 symmetry operator."""
        occ = np.indices((self.n_max,) * self.n_sites).sum(axis=0).ravel()
        return sp.diags((-1.0) ** occ, format="csr")

    def top_level_projector(self, site: int) -> sp.csr_matrix:
        occ = np.indices((self.n_max,) * self.n_sites)[site].ravel()
        return sp.diags((occ == self.n_max - 1).astype(float), format="csr")


def hamiltonian(params: NetworkParams, space: FockSpace) -> sp.csr_matrix:
    """Rotating-frame network Hamiltonian on the truncated space."""
    if params.n_sites != space.n_sites:
        raise ValueError("space and params site counts differ")
    delta = params.detunings
    h = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    ops = [space.annihilation(j) for j in range(space.n_sites)]
    for j, a in enumerate(ops):
        ad = a.conj().T
        n = (ad @ a).tocsr()
        h = h - delta[j] * n
        h = h + 0.5 * params.kerr[j] * (ad @ ad @ a @ a)
        g = params.drive[j]
        h = h - 0.5 * g * (ad @ ad) - 0.5 * np.conj(g) * (a @ a)
    for j in range(space.n_sites):
        for k in range(j + 1, space.n_sites):
            jjk = params.coupling[j, k]
            if jjk != 0.0:
                h = h + jjk * (ops[j].conj().T @ ops[k]
                               + ops[j] @ ops[k].conj().T)
    return h.tocsr()


@dataclass(frozen=True)
class Liouvillian:
    """Vectorized master-equation generator and its Fock space."""

    matrix: sp.csr_matrix
    space: FockSpace
    params: NetworkParams


def build_liouvillian(params: NetworkParams, space: FockSpace,
                      max_dim: int = 65536) -> Liouvillian:
    """Generator of rho-dot = -i[H, rho] + sum_j (gamma_j/2) (2 a rho a^dag
    - {a^dag a, rho}) acting on column-stacked rho.

    Warns when the cutoff risks truncating the saturated amplitude
    (n_max < 3 G/V + 5).
    """
    if space.dim > max_dim:
        raise ValueError(f"dim {space.dim} exceeds limit {max_dim}")
    vmax = float(np.max(np.abs(params.kerr)))
    gmax = float(np.max(np.abs(params.drive)))
    if vmax > 0 and space.n_max < 3.0 * gmax / vmax + 5.0:
        warnings.warn(
            f"n_max={space.n_max} below 3G/V+5={3 * gmax / vmax + 5:.1f}; "
            "truncation may clip the saturated amplitude", stacklevel=2)
    h = hamiltonian(params, space)
    eye = sp.identity(space.dim, format="csr")
    lm = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    for j in range(space.n_sites):
        a = space.annihilation(j)
        n = (a.conj().T @ a).tocsr()
        r = 0.5 * params.damping[j]
        lm = lm + r * (2.0 * sp.kron(a.conj(), a)
                       - sp.kron(eye, n) - sp.kron(n.T, eye))
    return Liouvillian(matrix=lm.tocsr(), space=space, params=params)


@dataclass(frozen=True)
class QuantumSteadyState:
    """Stationary density matrix with derived observables."""

    space: FockSpace
    rho: np.ndarray
    mean_amplitudes: np.ndarray
    mean_photons: np.ndarray
    leakage: float
    residual: float
    converged: bool


def _vec(rho: np.ndarray) -> np.ndarray:
    return rho.reshape(-1, order="F")


def _unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return v.reshape((dim, dim), order="F")


def _observables(liou: Liouvillian, rho: np.ndarray, residual: float
                 ) -> QuantumSteadyState:
    space = liou.space
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    amps = np.array([np.trace(space.annihilation(j) @ rho)
                     for j in range(space.n_sites)])
    photons = np.array([np.trace(space.number(j) @ rho).real
                        for j in range(space.n_sites)])
    leak = max(float(np.trace(space.top_level_projector(j) @ rho).real)
               for j in range(space.n_sites))
    return QuantumSteadyState(
        space=space, rho=rho, mean_amplitudes=amps, mean_photons=photons,
        leakage=leak, residual=residual, converged=bool(leak < 1e-6))


def _even_sector(space: FockSpace) -> np.ndarray:
    """Vectorized indices whose bra and ket photon parities agree.

    Every generator term (detuning, Kerr, two-photon drive, hopping,
    single-photon loss) preserves the parity grading of rho, and the
    trace lives entirely in the even sector, so the steady state can be
    solved there at half the dimension.
    """
    occ = np.indices((space.n_max,) * space.n_sites).sum(axis=0).ravel()
    dim = space.dim
    col, row = np.divmod(np.arange(dim * dim), dim)
    return np.flatnonzero(((occ[row] + occ[col]) % 2) == 0)


def _direct_null(liou: Liouvillian, constraint_last: bool = False,
                 _cache: dict | None = None,
                 guess: np.ndarray | None = None) -> np.ndarray:
    """Even-sector nullspace solve with the trace row as a constraint.

    The reduced system is factorized directly below ~6000 unknowns.
    Larger systems are row-equilibrated (Liouvillian rows span gamma/2
    up to V n_max^2, which breaks incomplete factorizations) and solved
    by ILU-preconditioned LGMRES with an escalation ladder; the factors
    are cached so the degenerate-nullspace re-solve with a different
    constraint row reuses them as a preconditioner.
    """
    dim = liou.space.dim
    if _cache is None:
        _cache = {}
    if "idx" not in _cache:
        _cache["idx"] = _even_sector(liou.space)
        _cache["reduced"] = liou.matrix.tocsr()[_cache["idx"]][:, _cache["idx"]]
    idx = _cache["idx"]
    pos = -np.ones(dim * dim, dtype=np.int64)
    pos[idx] = np.arange(len(idx))
    trace_pos = np.sort(pos[np.arange(dim) * dim + np.arange(dim)])
    r = int(trace_pos[-1]) if constraint_last else int(trace_pos[0])
    lm = _cache["reduced"].tolil(copy=True)
    lm.rows[r] = list(trace_pos)
    lm.data[r] = [1.0 + 0.0j] * dim
    rhs = np.zeros(len(idx), dtype=complex)
    rhs[r] = 1.0
    try:
        if len(idx) <= 6000:
            sol = spla.spsolve(lm.tocsc(), rhs)
        else:
            a = lm.tocsr()
            row_scale = np.abs(a).max(axis=1).toarray().ravel()
            row_scale[row_scale == 0.0] = 1.0
            a = (sp.diags(1.0 / row_scale) @ a).tocsc()
            b = rhs / row_scale
            x0 = guess.reshape(-1, order="F")[idx] if guess is not None else None
            sol = None
            for ladder, (drop, fill) in enumerate(((1e-5, 20), (1e-7, 40))):
                if ladder >= len(_cache.setdefault("ilu", [])):
                    _cache["ilu"].append(
                        spla.spilu(a, drop_tol=drop, fill_factor=fill))
                precond = spla.LinearOperator(a.shape, _cache["ilu"][ladder].solve)
                x, info = spla.lgmres(a, b, x0=x0, M=precond, rtol=1e-11,
                                      atol=0.0, maxiter=300)
                if info == 0:
                    sol = x
                    break
            if sol is None:
                if len(idx) > 30000:
                    raise NonConvergedError(
                        "iterative steady-state solve stalled and the system "
                        "is too large for a direct fallback")
                warnings.warn("iterative solve stalled; direct fallback",
                              stacklevel=2)
                sol = spla.spsolve(lm.tocsc(), rhs)
    except RuntimeError as e:
        raise NonConvergedError(f"sparse solve failed: {e}") from e
    if not np.all(np.isfinite(sol)):
        raise NonConvergedError("direct solve returned non-finite entries")
    full = np.zeros(dim * dim, dtype=complex)
    full[idx] = sol
    return _unvec(full, dim)


def steady_state(liou: Liouvillian, direct_limit: int = 4096,
                 check_unique: bool = True,
                 rho_guess: np.ndarray | None = None) -> QuantumSteadyState:
    """Unit-trace null state of the Liouvillian.

    Solved in the photon-parity-even sector with one row replaced by the
    trace constraint when dim <= direct_limit; otherwise propagation of
    the maximally mixed state to t = 50/gamma.  A second solve with a
    different constraint row flags degenerate (non-unique) nullspaces.
    ``rho_guess`` (same dim) warm-starts the iterative path.
    """
    dim = liou.space.dim
    if rho_guess is not None and rho_guess.shape != (dim, dim):
        raise ValueError("rho_guess has the wrong dimension")
    if dim <= direct_limit:
        cache: dict = {}
        rho = _direct_null(liou, _cache=cache, guess=rho_guess)
        if check_unique:
            rho_b = _direct_null(liou, constraint_last=True, _cache=cache,
                                 guess=rho)
            if np.abs(rho - rho_b).max() > 1e-6 * max(np.abs(rho).max(), 1e-30):
                raise DegenerateSteadyStateError(
                    "steady state depends on the constraint row; "
                    "Liouvillian nullspace is degenerate")
    else:
        gamma_min = float(np.min(liou.params.damping))
        if gamma_min <= 0:
            raise NonConvergedError("propagation fallback needs damping > 0")
        t_final = 50.0 / gamma_min
        v0 = _vec(np.eye(dim, dtype=complex) / dim)
        v = spla.expm_multiply(liou.matrix * t_final, v0)
        rho = _unvec(v, dim)
        rho = rho / np.trace(rho).real
    res = float(np.linalg.norm(liou.matrix @ _vec(rho)))
    if res > 1e-9:
        raise NonConvergedError(f"stationarity residual {res:.2e} > 1e-9")
    return _observables(liou, rho, res)


def evolve(liou: Liouvillian, rho0: np.ndarray, times) -> np.ndarray:
    """Density matrices at the requested times (ascending, starting >= 0)."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("times must be ascending and nonnegative")
    dim = liou.space.dim
    out = np.empty((len(times), dim, dim), dtype=complex)
    v = _vec(np.asarray(rho0, dtype=complex))
    prev = 0.0
    for i, t in enumerate(times):
        if t > prev:
            v = spla.expm_multiply(liou.matrix * (t - prev), v)
        out[i] = _unvec(v, dim)
        prev = t
    return out


def _pad_rho(rho: np.ndarray, old: FockSpace, new: FockSpace) -> np.ndarray:
    """Embed a density matrix into a larger cutoff (zero-padded)."""
    n = old.n_sites
    t = rho.reshape((old.n_max,) * (2 * n))
    out = np.zeros((new.n_max,) * (2 * n), dtype=complex)
    out[(slice(0, old.n_max),) * (2 * n)] = t
    return out.reshape(new.dim, new.dim)


def steady_state_converged(params: NetworkParams, n_start: int | None = None,
                           n_cap: int = 64, direct_limit: int = 4096,
                           rel_tol: float = 1e-4):
    """Cutoff auto-selection: solve at n_max and n_max+4 until the mean
    photon numbers agree to rel_tol and leakage passes; returns the
    accepted state (larger cutoff).  Each step warm-starts from the
    previous cutoff's solution."""
    vmax = float(np.max(np.abs(params.kerr)))
    gmax = float(np.max(np.abs(params.drive)))
    if n_start is None:
        n_start = int(np.ceil(3.0 * gmax / vmax + 8.0)) if vmax > 0 else 8
    n = n_start
    prev = None
    while n <= n_cap:
        space = FockSpace(params.n_sites, n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            liou = build_liouvillian(params, space)
        guess = None if prev is None else _pad_rho(prev.rho, prev.space, space)
        state = steady_state(liou, direct_limit=direct_limit, rho_guess=guess)
        if prev is not None:
            ref = np.maximum(np.abs(prev.mean_photons), 1e-12)
            drift = np.max(np.abs(state.mean_photons - prev.mean_photons) / ref)
            if drift < rel_tol and state.converged:
                return state
        prev = state
        n += 4
    raise NonConvergedError(f"no cutoff convergence up to n_max={n_cap}")


def hermite_functions(n_levels: int, x) -> np.ndarray:
    """Harmonic-oscillator eigenfunctions psi_0..psi_{n_levels-1} at x.

    Evaluated by the normalized three-term recurrence
    psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1},
    which stays bounded at large n where the plain Hermite polynomials
    overflow.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_levels, len(x)))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_levels > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_levels - 1):
        out[n + 1] = (np.sqrt(2.0 / (n + 1)) * x * out[n]
                      - np.sqrt(n / (n + 1.0)) * out[n - 1])
    return out


def quadrature_distribution(state: QuantumSteadyState, grid) -> np.ndarray:
    """Joint distribution P(x_1, ..., x_N) of simultaneous x_j readout.

    P = <x|rho|x> on the product grid; checks positivity (to solver
    tolerance), unit trapezoid integral to 1e-4, and that less than 1e-3
    of the mass sits in the outermost grid layer.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 8:
        raise ValueError("grid must be a 1d array of at least 8 points")
    space = state.space
    n, nm = space.n_sites, space.n_max
    psi = hermite_functions(nm, grid)
    # pair factor for one site: axes (grid, ket level, bra level)
    pair = np.einsum("mi,pi->imp", psi, psi)
    # rho axes: (ket_0..ket_{n-1}, bra_0..bra_{n-1}); contract one site per
    # pass, its grid axis lands at the end, so site order is preserved
    t = state.rho.reshape((nm,) * (2 * n))
    for s in range(n):
        r = n - s
        t = np.tensordot(t, pair, axes=([0, r], [1, 2]))
    p = t.real
    if p.min() < -1e-8:
        raise NonConvergedError(f"distribution has negative dip {p.min():.2e}")
    p = np.clip(p, 0.0, None)
    total = p
    for _ in range(n):
        total = np.trapezoid(total, grid, axis=-1)
    total = float(total)
    if abs(total - 1.0) > 1e-4:
        raise NonConvergedError(f"grid integral {total:.6f} deviates from 1")
    edge = np.zeros_like(p, dtype=bool)
    for ax in range(n):
        sl = [slice(None)] * n
        sl[ax] = [0, -1]
        edge[tuple(sl)] = True
    cell = (grid[-1] - grid[0]) / (len(grid) - 1)
    edge_mass = float(p[edge].sum() * cell ** n)
    if edge_mass > 1e-3:
        raise ValueError(f"grid too small: edge mass {edge_mass:.2e} > 1e-3")
    return p


@dataclass(frozen=True)
class CatState:
    """Even/odd superposition of opposite-phase coherent states."""

    alpha: complex
    parity: int
    vector: np.ndarray
    norm_const: float


def coherent_vector(alpha: complex, n_max: int) -> np.ndarray:
    n = np.arange(n_max)
    log_fact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, n_max)))))
    amp = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * log_fact)
    return amp * alpha ** n


def cat_state(alpha: complex, parity, space: FockSpace) -> CatState:
    """Normalized parity eigenstate built from |alpha> and |-alpha>.

    norm_const = [2(1 +/- exp(-2|alpha|^2))]^(-1/2); the odd cat at
    alpha=0 has zero norm and is rejected.  The cutoff must hold the
    coherent tail (top-level population < 1e-6).
    """
    if isinstance(parity, str):
        parity = {"+": 1, "-": -1}[parity]
    if parity not in (1, -1):
        raise ValueError("parity must be +1 or -1")
    if parity == -1 and alpha == 0:
        raise ValueError("odd cat at alpha=0 has zero norm")
    nm = space.n_max
    base = coherent_vector(alpha, nm)
    if abs(base[-1]) ** 2 > 1e-6:
        raise ValueError(f"n_max={nm} too small for |alpha|={abs(alpha):.3g}")
    c = float(1.0 / np.sqrt(2.0 * (1.0 + parity * np.exp(-2.0 * abs(alpha) ** 2))))
    vec = c * (base + parity * coherent_vector(-alpha, nm))
    return CatState(alpha=complex(alpha), parity=int(parity), vector=vec,
                    norm_const=c)


@dataclass(frozen=True)
class EnsembleStats:
    mean: float
    rms: float
    trials: int


def ensemble_mean_amplitude(n_modes: int, alpha: complex, trials: int,
                            seed: int = 0) -> EnsembleStats:
    """Monte-Carlo statistics of |sum_i s_i alpha| / n_modes over random
    sign choices s_i = +/-1: the many-mode average amplitude shrinks as
    1/sqrt(n_modes) because a net symmetry breaking needs all modes to
    break with the same sign."""
    if trials < 1000:
        raise ValueError("need trials >= 1000")
    if n_modes < 1:
        raise ValueError("need n_modes >= 1")
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(trials, n_modes)) * 2 - 1
    m = np.abs(signs.sum(axis=1)) * abs(alpha) / n_modes
    return EnsembleStats(mean=float(m.mean()),
                         rms=float(np.sqrt(np.mean(m ** 2))), trials=trials)
