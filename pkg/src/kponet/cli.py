"""Command-line front end: batch computations to CSV/JSON files.

Every subcommand reads one JSON config (strict schema, see config.py),
runs a single task and writes its outputs plus a run_log.json into the
output directory.  Data files are assembled in memory and written only
on success, so a failed run leaves no partial CSVs; all outputs carry
the sha256 of the resolved config, and reruns with the same config and
seed are byte-identical regardless of --threads.

Exit codes: 0 success, 2 config error (nothing written), 3 numerical
failure (run_log.json written with the error).
"""

from __future__ import annotations

import argparse
import datetime
import json
import pathlib
import re
import sys
import warnings

import numpy as np

from . import fluctuations, labframe, langevin, meanfield, quantum
from .config import ConfigError, RunConfig, grid_values, resolve_config
from .meanfield import (CODE_NONE, CODE_OTHER, CODE_S, CODE_SA, CODE_SAM,
                        CODE_SM, CODE_ZERO)
from .params import lobe_threshold, normal_mode_basis, normal_mode_drives

_NUMERICAL_ERRORS = (quantum.NonConvergedError,
                     quantum.DegenerateSteadyStateError,
                     langevin.DivergedError, ValueError, RuntimeError,
                     np.linalg.LinAlgError)

_CODE_LABELS = {CODE_NONE: "none", CODE_ZERO: "", CODE_S: "S",
                CODE_SA: "S|A", CODE_SM: "S|M", CODE_SAM: "S|A|M",
                CODE_OTHER: "other"}


def _fmt(x) -> str:
    """Full round-trip decimal representation, C locale."""
    return repr(float(x))


def _csv(meta: list[tuple[str, str]], columns: list[str], rows) -> str:
    lines = [f"# {k}={v}" for k, v in meta]
    lines.append(",".join(columns))
    lines.extend(",".join(r) for r in rows)
    return "\n".join(lines) + "\n"


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _state_dict(st: meanfield.SteadyState) -> dict:
    return {
        "re_alpha": [float(v) for v in st.amplitudes.real],
        "im_alpha": [float(v) for v in st.amplitudes.imag],
        "stable": bool(st.stable),
        "symmetry": st.symmetry,
        "re_mu": [float(v) for v in st.exponents.real],
        "im_mu": [float(v) for v in st.exponents.imag],
        "residual": float(st.residual),
    }


# ---------------------------------------------------------------
# task runners; each returns {filename: text}


def run_states(cfg: RunConfig, task, threads, log):
    states = meanfield.find_steady_states(cfg.params,
                                          n_random=task["n_random"])
    doc = {"config_sha256": cfg.sha256, "n_sites": cfg.params.n_sites,
           "states": [_state_dict(s) for s in states]}
    return {"states.json": _json_text(doc)}


def run_sweep(cfg: RunConfig, task, threads, log):
    values = grid_values(task)
    diagram = meanfield.bifurcation_sweep(cfg.params, values,
                                          kind=task["kind"],
                                          n_random=task["n_random"])
    n = cfg.params.n_sites
    cols = ["sweep_value", "branch_id"]
    for j in range(1, n + 1):
        cols += [f"re_alpha_{j}", f"im_alpha_{j}"]
    cols += ["stable", "symmetry"]
    rows = []
    for point in diagram.points:
        order = np.argsort(point.branch_ids)
        for i in order:
            st = point.states[i]
            row = [_fmt(point.sweep_value), str(point.branch_ids[i])]
            for a in st.amplitudes:
                row += [_fmt(a.real), _fmt(a.imag)]
            row += ["1" if st.stable else "0", st.symmetry]
            rows.append(row)
    meta = [("config_sha256", cfg.sha256), ("kind", task["kind"]),
            ("bifurcations", ";".join(_fmt(b) for b in diagram.bifurcations))]
    return {"branches.csv": _csv(meta, cols, rows)}


def run_phase_diagram(cfg: RunConfig, task, threads, log):
    dv = grid_values(task["delta"])
    gv = grid_values(task["drive"])
    pd = meanfield.phase_diagram(cfg.params, dv, gv, threads=threads,
                                 n_random=task["n_random"])
    rows = []
    for i, d in enumerate(pd.delta_values):
        for j, g in enumerate(pd.drive_values):
            code = int(pd.code[i, j])
            label = _CODE_LABELS.get(code, "other")
            if pd.brighter[i, j] or code == CODE_ZERO:
                label = ("Zero|" + label) if label else "Zero"
            rows.append([_fmt(d), _fmt(g), str(code), label])
    meta = [("config_sha256", cfg.sha256)]
    cols = ["delta", "drive", "color_code", "labels"]
    return {"phase_diagram.csv": _csv(meta, cols, rows)}


def _pick_state(states, which):
    stable = [s for s in states if s.stable]
    if not stable:
        raise ValueError("no stable steady state to expand around")
    if which == "auto":
        return stable[0]
    if which >= len(stable):
        raise ValueError(f"psd.state index {which} out of range: "
                         f"{len(stable)} stable states")
    return stable[which]


def run_psd(cfg: RunConfig, task, threads, log):
    params = cfg.params
    states = meanfield.find_steady_states(params)
    st = _pick_state(states, task["state"])
    spec = fluctuations.fluctuation_spectrum(params, st.amplitudes,
                                             task["noise_psd"])
    top = task["freq_max"] or float(spec.freq_grid[-1])
    grid = np.linspace(0.0, top, task["n_freq"])
    spec = fluctuations.fluctuation_spectrum(params, st.amplitudes,
                                             task["noise_psd"],
                                             freq_grid=grid)
    n = params.n_sites
    cols = (["omega_ft"] + [f"psd_site_{j}" for j in range(1, n + 1)]
            + ["psd_S", "psd_A", "method"])
    has_c3 = any(m == "c3" for m in spec.methods.values())

    def emit(rows, sites, ps, pa, method):
        for k, w in enumerate(spec.freq_grid):
            row = [_fmt(w)] + [_fmt(sites[j][k]) for j in range(n)]
            row.append(_fmt(ps[k]) if ps is not None else "")
            row.append(_fmt(pa[k]) if pa is not None else "")
            row.append(method)
            rows.append(row)

    rows: list = []
    if has_c3:
        emit(rows, spec.psd_sites, spec.psd_s, spec.psd_a, "c3")
    emit(rows, spec.psd_sites_transfer, spec.psd_s_transfer,
         spec.psd_a_transfer, "transfer")
    for flag in spec.flags:
        log["warnings"].append(f"fluctuation spectrum flag: {flag}")
    meta = [("config_sha256", cfg.sha256),
            ("state_symmetry", st.symmetry),
            ("noise_psd", _fmt(task["noise_psd"]))]
    return {"psd.csv": _csv(meta, cols, rows)}


def run_probe(cfg: RunConfig, task, threads, log):
    noise = langevin.NoiseSpec(psd=task["noise_psd"], seed=task["seed"])
    result = langevin.pump_noisy_probe(
        cfg.params, noise, grid_values(task), kind=task["kind"],
        settle_time=task["settle_time"], record_time=task["record_time"],
        dt=task["dt"], segment_frac=task["segment_frac"])
    n = cfg.params.n_sites
    sweep_col = task["kind"]
    cols = ([sweep_col, "omega_ft", "psd_S", "psd_A"]
            + [f"psd_site_{j}" for j in range(1, n + 1)]
            + ["branch_symmetry", "jump_flag"])
    rows = []
    for point in result.points:
        jump = "1" if point.jump_flag else "0"
        for k, w in enumerate(result.freq_grid):
            row = [_fmt(point.sweep_value), _fmt(w)]
            row.append(_fmt(point.psd_s[k]) if point.psd_s is not None else "")
            row.append(_fmt(point.psd_a[k]) if point.psd_a is not None else "")
            row += [_fmt(point.psd_sites[j][k]) for j in range(n)]
            row += [point.branch_symmetry, jump]
            rows.append(row)
    meta = [("config_sha256", cfg.sha256), ("kind", task["kind"]),
            ("dt", _fmt(result.dt)), ("seed", str(task["seed"]))]
    return {"probe.csv": _csv(meta, cols, rows)}


def run_trajectory(cfg: RunConfig, task, threads, log):
    params = cfg.params
    n = params.n_sites
    alpha0 = (np.broadcast_to(np.atleast_1d(task["alpha0_re"]), (n,))
              + 1j * np.broadcast_to(np.atleast_1d(task["alpha0_im"]), (n,)))
    noise = langevin.NoiseSpec(psd=task["noise_psd"], seed=task["seed"])
    dt = task["dt"] or langevin.default_dt(params)
    traj = langevin.integrate(params, noise, alpha0, dt, task["duration"])
    keep = task["keep_every"]
    times = traj.times[keep - 1::keep]
    samples = traj.samples[keep - 1::keep]
    cols = ["t"]
    for j in range(1, n + 1):
        cols += [f"re_alpha_{j}", f"im_alpha_{j}"]
    rows = []
    for t, a in zip(times, samples):
        row = [_fmt(t)]
        for v in a:
            row += [_fmt(v.real), _fmt(v.imag)]
        rows.append(row)
    meta = [("config_sha256", cfg.sha256), ("dt", _fmt(dt)),
            ("keep_every", str(keep)), ("seed", str(task["seed"]))]
    return {"trajectory.csv": _csv(meta, cols, rows)}


def run_lindblad(cfg: RunConfig, task, threads, log):
    params = cfg.params
    if task["n_max"] == "auto":
        state = quantum.steady_state_converged(params, n_cap=task["n_cap"],
                                               rel_tol=task["rel_tol"])
    else:
        space = quantum.FockSpace(params.n_sites, task["n_max"])
        liou = quantum.build_liouvillian(params, space)
        state = quantum.steady_state(liou)
    doc = {
        "config_sha256": cfg.sha256,
        "n_max": state.space.n_max,
        "mean_photons": [float(v) for v in state.mean_photons],
        "re_mean_amplitudes": [float(v) for v in state.mean_amplitudes.real],
        "im_mean_amplitudes": [float(v) for v in state.mean_amplitudes.imag],
        "leakage": float(state.leakage),
        "residual": float(state.residual),
        "converged": bool(state.converged),
    }
    files = {"rho_observables.json": _json_text(doc)}
    if params.n_sites <= 2:
        grid = np.linspace(-task["grid_half_width"], task["grid_half_width"],
                           task["grid_points"])
        p = quantum.quadrature_distribution(state, grid)
        meta = [("config_sha256", cfg.sha256),
                ("grid_half_width", _fmt(task["grid_half_width"])),
                ("grid_points", str(task["grid_points"])),
                ("n_max", str(state.space.n_max))]
        rows = []
        if params.n_sites == 1:
            cols = ["x1", "p"]
            for x, pv in zip(grid, p):
                rows.append([_fmt(x), _fmt(pv)])
        else:
            cols = ["x1", "x2", "p"]
            for i, x1 in enumerate(grid):
                for j, x2 in enumerate(grid):
                    rows.append([_fmt(x1), _fmt(x2), _fmt(p[i, j])])
        files["quad_dist.csv"] = _csv(meta, cols, rows)
    else:
        log["warnings"].append("quad_dist.csv skipped: joint quadrature "
                               "CSV is defined for n_sites <= 2")
    return files


def run_labframe(cfg: RunConfig, task, threads, log):
    lab = labframe.lab_params(cfg.params, hbar=task["hbar"])
    n = lab.n_sites
    x0 = np.broadcast_to(np.atleast_1d(task["x0"]), (n,))
    v0 = np.broadcast_to(np.atleast_1d(task["v0"]), (n,))
    dt = task["dt"] or 2.0 * np.pi / (64.0 * float(np.max(lab.omega)))
    traj = labframe.integrate_lab(lab, x0, v0, dt, task["duration"])
    ref = 0.5 * lab.drive_freq
    bandwidth = task["bandwidth"] or ref / 20.0
    y = labframe.demodulate(traj.x, dt, ref, bandwidth)
    keep = task["keep_every"]
    sl = slice(keep - 1, None, keep)
    times, x, v, y = traj.times[sl], traj.x[sl], traj.v[sl], y[sl]
    cols = (["t"] + [f"x_{j}" for j in range(1, n + 1)]
            + [f"v_{j}" for j in range(1, n + 1)]
            + [f"u_{j}" for j in range(1, n + 1)]
            + [f"v_quad_{j}" for j in range(1, n + 1)])
    rows = []
    for k in range(len(times)):
        row = [_fmt(times[k])]
        row += [_fmt(val) for val in x[k]]
        row += [_fmt(val) for val in v[k]]
        row += [_fmt(val) for val in y[k].real]
        row += [_fmt(val) for val in y[k].imag]
        rows.append(row)
    meta = [("config_sha256", cfg.sha256), ("dt", _fmt(dt)),
            ("ref_freq", _fmt(ref)), ("bandwidth", _fmt(bandwidth))]
    return {"labframe.csv": _csv(meta, cols, rows)}


def run_normal_modes(cfg: RunConfig, task, threads, log):
    params = cfg.params
    basis = normal_mode_basis(params.detunings, params.coupling)
    gamma = float(np.mean(params.damping))
    if np.ptp(params.damping) > 1e-12 * max(gamma, 1e-300):
        log["warnings"].append("inhomogeneous damping: lobe thresholds "
                               "use the site-averaged gamma")
    thresholds = lobe_threshold(basis.eigen_detunings, gamma)
    doc = {
        "config_sha256": cfg.sha256,
        "eigen_detunings": [float(v) for v in basis.eigen_detunings],
        "basis_columns": [[float(v) for v in basis.matrix[:, k]]
                          for k in range(params.n_sites)],
        "mode_drives": [[float(v) for v in row]
                        for row in normal_mode_drives(basis, params.drive)],
        "lobe_thresholds": [float(v) for v in thresholds],
        "sweep": None,
    }
    if task["sweep"] is not None:
        kind = task["sweep"]["kind"]
        points = []
        seeds = None
        for value in grid_values(task["sweep"]):
            p = meanfield.params_at(params, float(value), kind)
            states = meanfield.find_steady_states(p, seeds=seeds, n_random=32)
            seeds = np.array([s.amplitudes for s in states])
            points.append({"value": float(value),
                           "states": [_state_dict(s) for s in states]})
        doc["sweep"] = {"kind": kind, "points": points}
    return {"modes.json": _json_text(doc)}


_RUNNERS = {
    "states": run_states,
    "sweep": run_sweep,
    "phase_diagram": run_phase_diagram,
    "psd": run_psd,
    "probe": run_probe,
    "trajectory": run_trajectory,
    "lindblad": run_lindblad,
    "labframe": run_labframe,
    "normal_modes": run_normal_modes,
}

_SEED_TASKS = ("probe", "trajectory")


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kponet",
        description="Steady states, spectra and quantum distributions of "
                    "parametrically driven Kerr resonator networks.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name.replace("_", "-"),
                           help=f"run the {name} task block")
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the task's RNG seed")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for grid tasks")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extras = parser.parse_known_args(argv)
    task_key = args.subcommand.replace("-", "_")

    overrides = []
    for item in extras:
        m = re.fullmatch(r"--([A-Za-z0-9_.]+)=(.*)", item, flags=re.S)
        if not m:
            print(f"error: unrecognized argument {item!r} "
                  "(overrides look like --model.drive.value=0.2)",
                  file=sys.stderr)
            return 2
        overrides.append(f"{m.group(1)}={m.group(2)}")
    if args.seed is not None and task_key in _SEED_TASKS:
        overrides.append(f"{task_key}.seed={args.seed}")

    try:
        cfg = resolve_config(args.config, overrides, task=task_key)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2

    log = {"subcommand": args.subcommand, "config_sha256": cfg.sha256,
           "started_utc": _utc_now(), "warnings": [],
           "resolved_config": cfg.resolved}
    if args.seed is not None and task_key not in _SEED_TASKS:
        log["warnings"].append("--seed has no effect on this subcommand")

    out_dir = pathlib.Path(args.out)
    status = 0
    files: dict = {}
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            files = _RUNNERS[task_key](cfg, cfg.tasks[task_key],
                                       args.threads, log)
        for w in caught:
            log["warnings"].append(f"{w.category.__name__}: {w.message}")
    except _NUMERICAL_ERRORS as exc:
        log["status"] = "failed"
        log["error"] = f"{type(exc).__name__}: {exc}"
        print(f"error: {log['error']}", file=sys.stderr)
        status = 3
    else:
        log["status"] = "ok"

    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out_dir / name).write_text(text)
    log["outputs"] = sorted(files)
    log["finished_utc"] = _utc_now()
    (out_dir / "run_log.json").write_text(
        json.dumps(log, indent=2, allow_nan=False) + "\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
