"""Run configuration: strict JSON schema, unit handling, hashing.

The command-line tool consumes a single JSON document.  Frequency-like
quantities may be tagged ``{"value": x, "unit": "Hz"}`` and are
normalized to rad/s on load; unknown keys anywhere in the document are
rejected with their full dot path, so a misspelled or misplaced key can
never silently fall back to a default.  The fully resolved dictionary
(defaults filled, units normalized) is hashed and the hash is stamped
into every output file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .params import CalibrationInputs, NetworkParams, calibrate_drive, calibrate_noise

SCHEMA_VERSION = 1

# multiplicative factors to rad/s (V_units marks calibration voltages,
# which are not frequencies and pass through unscaled)
_UNITS = {"Hz": 2.0 * np.pi, "rad_s": 1.0, "V_units": 1.0}

SWEEP_KINDS = ("delta", "drive_freq", "f_d", "drive")


class ConfigError(ValueError):
    """Invalid run configuration; ``errors`` lists every offending key."""

    def __init__(self, errors):
        self.errors = [str(e) for e in errors]
        super().__init__("invalid config:\n" + "\n".join(
            "  - " + e for e in self.errors))


@dataclass(frozen=True)
class RunConfig:
    """A validated, unit-normalized configuration.

    ``resolved`` is the plain-dict echo (defaults filled, rad/s) that is
    hashed into ``sha256`` and written to run_log.json; ``tasks`` maps
    task-block names to their resolved dictionaries.
    """

    resolved: dict
    sha256: str
    params: NetworkParams
    calibration: CalibrationInputs | None
    tasks: dict


def config_hash(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)
    return hashlib.sha256(blob.encode()).hexdigest()


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``a.b.c=value`` assignments to the raw config dict.

    Values parse as JSON when possible (numbers, lists, booleans) and
    fall back to bare strings.  Intermediate nodes are created or
    replaced by dicts, so ``model.drive.value=0.2`` works whether the
    file wrote the quantity bare or unit-tagged.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError([f"override {item!r}: expected KEY.PATH=VALUE"])
        path, _, text = item.partition("=")
        keys = [k for k in path.split(".") if k]
        if not keys:
            raise ConfigError([f"override {item!r}: empty key path"])
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        node = raw
        for k in keys[:-1]:
            if not isinstance(node.get(k), dict):
                node[k] = {}
            node = node[k]
        node[keys[-1]] = value
    return raw


# ---------------------------------------------------------------
# low-level field checks; every function appends "path: reason" strings


def _unknown_keys(d, allowed, path, errors):
    for k in sorted(set(d) - set(allowed)):
        errors.append(f"{path}.{k}: unknown key" if path else f"{k}: unknown key")


def _number(obj, path, errors, positive=False, nonneg=False):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        errors.append(f"{path}: expected a number")
        return None
    x = float(obj)
    if not np.isfinite(x):
        errors.append(f"{path}: must be finite")
        return None
    if positive and x <= 0:
        errors.append(f"{path}: must be > 0")
        return None
    if nonneg and x < 0:
        errors.append(f"{path}: must be >= 0")
        return None
    return x


def _integer(obj, path, errors, minimum=None):
    if isinstance(obj, bool) or not isinstance(obj, int):
        errors.append(f"{path}: expected an integer")
        return None
    if minimum is not None and obj < minimum:
        errors.append(f"{path}: must be >= {minimum}")
        return None
    return obj


def _quantity(obj, path, errors, ndim_max=1, nonneg=False):
    """Number, (nested) list, or {"value": .., "unit": ..} -> rad/s."""
    factor = 1.0
    if isinstance(obj, dict):
        _unknown_keys(obj, ("value", "unit"), path, errors)
        if "value" not in obj:
            errors.append(f"{path}.value: required")
            return None
        unit = obj.get("unit", "rad_s")
        if unit not in _UNITS:
            errors.append(f"{path}.unit: unknown unit {unit!r} "
                          f"(expected one of {sorted(_UNITS)})")
            return None
        factor = _UNITS[unit]
        obj = obj["value"]
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        errors.append(f"{path}: expected a number or array")
        return None
    if arr.ndim > ndim_max:
        errors.append(f"{path}: at most {ndim_max} dimensions")
        return None
    if not np.all(np.isfinite(arr)):
        errors.append(f"{path}: must be finite")
        return None
    if nonneg and np.any(arr < 0):
        errors.append(f"{path}: must be >= 0")
        return None
    arr = arr * factor
    if arr.ndim == 0:
        return float(arr)
    return arr.tolist()


def _grid(d, path, errors, kinds=None, default_kind=None):
    """Sweep-axis block: kind plus start/stop/num or explicit values."""
    if not isinstance(d, dict):
        errors.append(f"{path}: expected an object")
        return None
    allowed = {"start", "stop", "num", "values"}
    if kinds is not None:
        allowed.add("kind")
    _unknown_keys(d, allowed, path, errors)
    out = {}
    if kinds is not None:
        kind = d.get("kind", default_kind)
        if kind not in kinds:
            errors.append(f"{path}.kind: expected one of {list(kinds)}")
            return None
        out["kind"] = kind
    if "values" in d:
        if {"start", "stop", "num"} & set(d):
            errors.append(f"{path}: give either values or start/stop/num")
            return None
        vals = _quantity(d["values"], f"{path}.values", errors, ndim_max=1)
        if vals is None:
            return None
        out["values"] = [float(v) for v in np.atleast_1d(vals)]
        return out
    missing = [k for k in ("start", "stop", "num") if k not in d]
    if missing:
        errors.append(f"{path}: missing {', '.join(missing)}")
        return None
    start = _number(d["start"], f"{path}.start", errors)
    stop = _number(d["stop"], f"{path}.stop", errors)
    num = _integer(d["num"], f"{path}.num", errors, minimum=2)
    if None in (start, stop, num):
        return None
    out.update(start=start, stop=stop, num=num)
    return out


def grid_values(grid: dict) -> np.ndarray:
    if "values" in grid:
        return np.asarray(grid["values"], dtype=float)
    return np.linspace(grid["start"], grid["stop"], grid["num"])


# ---------------------------------------------------------------
# block parsers


def _parse_model(d, errors):
    path = "model"
    if not isinstance(d, dict):
        errors.append(f"{path}: expected an object")
        return None
    _unknown_keys(d, ("n_sites", "omega", "kerr", "drive", "drive_freq",
                      "delta", "coupling", "damping"), path, errors)
    if "n_sites" not in d:
        errors.append(f"{path}.n_sites: required")
        return None
    n = _integer(d["n_sites"], f"{path}.n_sites", errors, minimum=1)
    out = {"n_sites": n}
    for key in ("omega", "kerr", "damping"):
        if key not in d:
            errors.append(f"{path}.{key}: required")
            out[key] = None
        else:
            out[key] = _quantity(d[key], f"{path}.{key}", errors)
    if "drive" in d:
        out["drive"] = _quantity(d["drive"], f"{path}.drive", errors)
    if ("drive_freq" in d) == ("delta" in d):
        errors.append(f"{path}: give exactly one of drive_freq or delta")
        return None
    if "drive_freq" in d:
        out["drive_freq"] = _quantity(d["drive_freq"], f"{path}.drive_freq",
                                      errors, ndim_max=0)
    else:
        out["delta"] = _quantity(d["delta"], f"{path}.delta", errors,
                                 ndim_max=0)
    if "coupling" in d:
        out["coupling"] = _quantity(d["coupling"], f"{path}.coupling", errors,
                                    ndim_max=2)
    return out


def _parse_calibration(d, errors):
    path = "calibration"
    if not isinstance(d, dict):
        errors.append(f"{path}: expected an object")
        return None
    _unknown_keys(d, ("u_drive", "u_threshold", "gamma0", "noise_psd_in",
                      "coupling_const"), path, errors)
    out = {}
    for key in ("u_drive", "u_threshold", "gamma0", "noise_psd_in"):
        if key not in d:
            errors.append(f"{path}.{key}: required")
            return None
        out[key] = _quantity(d[key], f"{path}.{key}", errors, ndim_max=0)
    cc = d.get("coupling_const", 0.0035)
    out["coupling_const"] = _number(cc, f"{path}.coupling_const", errors,
                                    nonneg=True)
    if any(v is None for v in out.values()):
        return None
    return out


def _noise_psd(d, cal, drive_freq, path, errors):
    """sigma^2 from the task block, or derived from the calibration."""
    if "noise_psd" in d:
        return _number(d["noise_psd"], f"{path}.noise_psd", errors,
                       nonneg=True)
    if cal is not None:
        if isinstance(drive_freq, (int, float)) and drive_freq > 0:
            return calibrate_noise(cal, drive_freq)[1]
        errors.append(f"{path}.noise_psd: cannot derive from calibration "
                      "without a valid model drive_freq")
        return None
    errors.append(f"{path}.noise_psd: required (no calibration block "
                  "to derive it from)")
    return None


def _parse_states(d, errors):
    _unknown_keys(d, ("n_random",), "states", errors)
    return {"n_random": _integer(d.get("n_random", 64), "states.n_random",
                                 errors, minimum=0)}


_GRID_KEYS = ("kind", "start", "stop", "num", "values")


def _split_grid(d):
    grid = {k: v for k, v in d.items() if k in _GRID_KEYS}
    extra = {k: v for k, v in d.items() if k not in _GRID_KEYS}
    return grid, extra


def _parse_sweep(d, errors):
    grid, extra = _split_grid(d)
    g = _grid(grid, "sweep", errors, kinds=SWEEP_KINDS, default_kind="delta")
    if g is None:
        return None
    _unknown_keys(extra, ("n_random",), "sweep", errors)
    g["n_random"] = _integer(extra.get("n_random", 64), "sweep.n_random",
                             errors, minimum=0)
    return g


def _parse_phase_diagram(d, errors):
    path = "phase_diagram"
    _unknown_keys(d, ("delta", "drive", "n_random"), path, errors)
    out = {}
    for axis in ("delta", "drive"):
        if axis not in d:
            errors.append(f"{path}.{axis}: required")
            return None
        out[axis] = _grid(d[axis], f"{path}.{axis}", errors)
    out["n_random"] = _integer(d.get("n_random", 32), f"{path}.n_random",
                               errors, minimum=0)
    if None in out.values():
        return None
    return out


def _parse_psd(d, cal, wg, errors):
    path = "psd"
    _unknown_keys(d, ("noise_psd", "state", "freq_max", "n_freq"), path,
                  errors)
    out = {"noise_psd": _noise_psd(d, cal, wg, path, errors)}
    state = d.get("state", "auto")
    if state != "auto" and (isinstance(state, bool)
                            or not isinstance(state, int) or state < 0):
        errors.append(f"{path}.state: expected \"auto\" or a state index")
        state = "auto"
    out["state"] = state
    out["n_freq"] = _integer(d.get("n_freq", 2048), f"{path}.n_freq", errors,
                             minimum=8)
    if "freq_max" in d:
        out["freq_max"] = _number(d["freq_max"], f"{path}.freq_max", errors,
                                  positive=True)
    else:
        out["freq_max"] = None
    return out


def _parse_probe(d, cal, wg, errors):
    path = "probe"
    grid, extra = _split_grid(d)
    g = _grid(grid, path, errors, kinds=SWEEP_KINDS, default_kind="f_d")
    if g is None:
        return None
    _unknown_keys(extra, ("noise_psd", "seed", "settle_time", "record_time",
                          "dt", "segment_frac"), path, errors)
    g["noise_psd"] = _noise_psd(extra, cal, wg, path, errors)
    g["seed"] = _integer(extra.get("seed", 0), f"{path}.seed", errors,
                         minimum=0)
    for key in ("settle_time", "record_time", "dt"):
        if key in extra:
            g[key] = _number(extra[key], f"{path}.{key}", errors,
                             positive=True)
        else:
            g[key] = None
    g["segment_frac"] = _number(extra.get("segment_frac", 1.0 / 16.0),
                                f"{path}.segment_frac", errors, positive=True)
    return g


def _parse_trajectory(d, cal, wg, errors):
    path = "trajectory"
    _unknown_keys(d, ("alpha0_re", "alpha0_im", "noise_psd", "seed", "dt",
                      "duration", "keep_every"), path, errors)
    out = {}
    out["alpha0_re"] = _quantity(d.get("alpha0_re", 0.0), f"{path}.alpha0_re",
                                 errors)
    out["alpha0_im"] = _quantity(d.get("alpha0_im", 0.0), f"{path}.alpha0_im",
                                 errors)
    out["noise_psd"] = _noise_psd(d, cal, wg, path, errors)
    out["seed"] = _integer(d.get("seed", 0), f"{path}.seed", errors,
                           minimum=0)
    if "duration" not in d:
        errors.append(f"{path}.duration: required")
        return None
    out["duration"] = _number(d["duration"], f"{path}.duration", errors,
                              positive=True)
    out["dt"] = (_number(d["dt"], f"{path}.dt", errors, positive=True)
                 if "dt" in d else None)
    out["keep_every"] = _integer(d.get("keep_every", 1), f"{path}.keep_every",
                                 errors, minimum=1)
    return out


def _parse_lindblad(d, errors):
    path = "lindblad"
    _unknown_keys(d, ("n_max", "grid_half_width", "grid_points", "rel_tol",
                      "n_cap"), path, errors)
    out = {}
    n_max = d.get("n_max", "auto")
    if n_max != "auto":
        n_max = _integer(n_max, f"{path}.n_max", errors, minimum=2)
    out["n_max"] = n_max
    out["grid_half_width"] = _number(d.get("grid_half_width", 5.0),
                                     f"{path}.grid_half_width", errors,
                                     positive=True)
    out["grid_points"] = _integer(d.get("grid_points", 101),
                                  f"{path}.grid_points", errors, minimum=8)
    out["rel_tol"] = _number(d.get("rel_tol", 1e-4), f"{path}.rel_tol",
                             errors, positive=True)
    out["n_cap"] = _integer(d.get("n_cap", 64), f"{path}.n_cap", errors,
                            minimum=2)
    return out


def _parse_labframe(d, errors):
    path = "labframe"
    _unknown_keys(d, ("x0", "v0", "dt", "duration", "bandwidth", "keep_every",
                      "hbar"), path, errors)
    out = {}
    out["x0"] = _quantity(d.get("x0", 0.0), f"{path}.x0", errors)
    out["v0"] = _quantity(d.get("v0", 0.0), f"{path}.v0", errors)
    if "duration" not in d:
        errors.append(f"{path}.duration: required")
        return None
    out["duration"] = _number(d["duration"], f"{path}.duration", errors,
                              positive=True)
    for key in ("dt", "bandwidth"):
        out[key] = (_number(d[key], f"{path}.{key}", errors, positive=True)
                    if key in d else None)
    out["keep_every"] = _integer(d.get("keep_every", 1), f"{path}.keep_every",
                                 errors, minimum=1)
    out["hbar"] = _number(d.get("hbar", 1.0), f"{path}.hbar", errors,
                          positive=True)
    return out


def _parse_normal_modes(d, errors):
    path = "normal_modes"
    _unknown_keys(d, ("sweep",), path, errors)
    out = {"sweep": None}
    if "sweep" in d:
        out["sweep"] = _grid(d["sweep"], f"{path}.sweep", errors,
                             kinds=SWEEP_KINDS, default_kind="f_d")
        if out["sweep"] is None:
            return None
    return out


_TASK_PARSERS = {
    "states": lambda d, cal, wg, errors: _parse_states(d, errors),
    "sweep": lambda d, cal, wg, errors: _parse_sweep(d, errors),
    "phase_diagram": lambda d, cal, wg, errors: _parse_phase_diagram(d, errors),
    "psd": _parse_psd,
    "probe": _parse_probe,
    "trajectory": _parse_trajectory,
    "lindblad": lambda d, cal, wg, errors: _parse_lindblad(d, errors),
    "labframe": lambda d, cal, wg, errors: _parse_labframe(d, errors),
    "normal_modes": lambda d, cal, wg, errors: _parse_normal_modes(d, errors),
}

# blocks that can be synthesized entirely from defaults when absent
_DEFAULTABLE = ("states", "lindblad", "normal_modes")


def resolve_config(path, overrides=(), task: str | None = None) -> RunConfig:
    """Load, override, validate and normalize a config file.

    ``task`` names the block the caller is about to run; if that block
    is absent and fully defaultable it is synthesized, otherwise its
    absence is an error.  All other present blocks are validated too, so
    a typo anywhere in the file fails fast.
    """
    try:
        with open(path) as fh:
            raw = json.load(fh, parse_constant=lambda s: None)
    except OSError as exc:
        raise ConfigError([f"config file: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file: invalid JSON ({exc})"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["config file: top level must be an object"])
    raw = apply_overrides(raw, overrides)

    errors: list[str] = []
    _unknown_keys(raw, ("schema_version", "model", "calibration")
                  + tuple(_TASK_PARSERS), "", errors)
    version = raw.get("schema_version")
    if version is None:
        errors.append("schema_version: required")
    elif version != SCHEMA_VERSION:
        errors.append(f"schema_version: expected {SCHEMA_VERSION}, "
                      f"got {version!r}")

    model = None
    if "model" not in raw:
        errors.append("model: required")
    else:
        model = _parse_model(raw["model"], errors)

    cal = None
    cal_dict = None
    if "calibration" in raw:
        cal_dict = _parse_calibration(raw["calibration"], errors)
        if cal_dict is not None:
            cal = CalibrationInputs(**cal_dict)

    params = None
    if model is not None and not errors:
        if "delta" in model:
            model["drive_freq"] = 2.0 * (
                model.pop("delta") + np.atleast_1d(model["omega"])[0]
                + np.atleast_1d(model["kerr"])[0])
        if "drive" in model and cal is not None:
            errors.append("model.drive: also set by the calibration block; "
                          "give only one")
        elif "drive" not in model:
            if cal is None:
                errors.append("model.drive: required (or add a calibration "
                              "block)")
            else:
                try:
                    model["drive"] = calibrate_drive(cal)
                except ValueError as exc:
                    errors.append(f"calibration: {exc}")
        if "coupling" not in model:
            n = model["n_sites"]
            model["coupling"] = np.zeros((n, n)).tolist()
        if not errors:
            try:
                params = NetworkParams(
                    n_sites=model["n_sites"], omega=model["omega"],
                    kerr=model["kerr"], drive=model["drive"],
                    drive_freq=model["drive_freq"],
                    coupling=model["coupling"], damping=model["damping"])
            except (TypeError, ValueError) as exc:
                errors.append(f"model: {exc}")

    tasks = {}
    wg = model["drive_freq"] if model and "drive_freq" in model else 0.0
    for name, parser in _TASK_PARSERS.items():
        if name in raw:
            block = raw[name]
            if not isinstance(block, dict):
                errors.append(f"{name}: expected an object")
                continue
            parsed = parser(block, cal, wg, errors)
            if parsed is not None:
                tasks[name] = parsed
        elif name == task and name in _DEFAULTABLE:
            tasks[name] = parser({}, cal, wg, errors)
    if task is not None and task not in tasks and not errors:
        errors.append(f"{task}: block required for this subcommand")

    if errors:
        raise ConfigError(errors)

    resolved = {"schema_version": SCHEMA_VERSION, "model": model}
    if cal_dict is not None:
        resolved["calibration"] = cal_dict
    resolved.update(tasks)
    return RunConfig(resolved=resolved, sha256=config_hash(resolved),
                     params=params, calibration=cal, tasks=tasks)
