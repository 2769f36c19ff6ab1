"""JSON experiment configs: parsing, defaults and validation with field paths."""
from __future__ import annotations

import copy
import json
import math
import os
from pathlib import Path

import numpy as np

EXPERIMENTS = ("green-grid", "pullback-converge", "lelong", "backward-sample", "invariance-check",
               "contraction-probe", "henon-green", "henon-pullback")
GRID_EXPERIMENTS = ("green-grid", "henon-green")
HENON_EXPERIMENTS = ("henon-green", "henon-pullback")
SEED_ENV = "GREENLAB_SEED"


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def section_name(experiment: str) -> str:
    return experiment.replace("-", "_")


DEFAULTS = {
    "green_grid": {"chart": 0, "extent": [-2.0, 2.0, -2.0, 2.0], "resolution": 101, "slice": None, "tol": 1e-10},
    "pullback_converge": {"hypersurface": {"kind": "random_line", "seed": 0}, "n_list": [0, 2, 4, 6, 8, 10, 12],
                          "sample_count": 10_000, "tol": 1e-10},
    "lelong": {"hypersurface": {"kind": "coordinate", "index": 0}, "n": 0, "center": None, "r_max": 0.1,
               "levels": 8, "samples_per_radius": 2000, "compare_n": None, "tol": 1e-10},
    "backward_sample": {"a": None, "n": 10, "max_atoms": 2 ** 14, "test_points": None, "tol": 1e-10},
    "invariance_check": {"max_codim": None, "sample_count": 200, "degree_trials": 100},
    "contraction_probe": {"x": None, "r": 0.1, "N": 15},
    "henon_green": {"extent": [-3.0, 3.0, -3.0, 3.0], "resolution": 101, "N": 50, "plane": "real"},
    "henon_pullback": {"Q": "(1,0)*z0", "n_list": [0, 2, 4, 6, 8, 10], "region": [5.0, 10.0],
                       "sample_count": 1000, "N": 200},
}


# --- small validators -------------------------------------------------------------

def _int(v, path, lo=None, hi=None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(path, f"must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(path, f"must be <= {hi}, got {v}")
    return v


def _num(v, path, lo=None, hi=None, lo_open=False, hi_open=False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(path, f"expected a finite number, got {v!r}")
    v = float(v)
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(path, f"must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and (v > hi or (hi_open and v == hi)):
        raise ConfigError(path, f"must be {'<' if hi_open else '<='} {hi}, got {v}")
    return v


def _complex(v, path) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(_num(v[0], path + "[0]"), _num(v[1], path + "[1]"))
    return complex(_num(v, path))


def _point(v, path, k) -> np.ndarray:
    if not isinstance(v, list) or len(v) != k + 1:
        raise ConfigError(path, f"expected {k + 1} homogeneous coordinates")
    z = np.array([_complex(x, f"{path}[{i}]") for i, x in enumerate(v)])
    if not np.any(z != 0):
        raise ConfigError(path, "all coordinates are zero")
    return z


def _n_list(v, path) -> list[int]:
    if not isinstance(v, list) or not v:
        raise ConfigError(path, "expected a nonempty list of integers")
    ns = [_int(x, f"{path}[{i}]", 0, 200) for i, x in enumerate(v)]
    if ns != sorted(set(ns)):
        raise ConfigError(path, "must be strictly increasing")
    return ns


def _extent(v, path) -> list[float]:
    if not isinstance(v, list) or len(v) != 4:
        raise ConfigError(path, "expected [x0, x1, y0, y1]")
    e = [_num(x, f"{path}[{i}]") for i, x in enumerate(v)]
    if not (e[0] < e[1] and e[2] < e[3]):
        raise ConfigError(path, "need x0 < x1 and y0 < y1")
    return e


def _keys(sec: dict, allowed, path):
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown field")


# --- map and hypersurface specs -----------------------------------------------------

def validate_map(m, path="map", henon=False) -> dict:
    if not isinstance(m, dict):
        raise ConfigError(path, "expected an object")
    fam = m.get("family")
    if henon:
        if fam != "henon":
            raise ConfigError(f"{path}.family", "Henon experiments need family 'henon'")
        _keys(m, {"family", "a", "c"}, path)
        a = _complex(m.get("a", 1.0), f"{path}.a")
        if a == 0:
            raise ConfigError(f"{path}.a", "must be nonzero")
        return {"family": "henon", "a": a, "c": _complex(m.get("c", 0.0), f"{path}.c")}
    if fam == "power":
        _keys(m, {"family", "k", "d"}, path)
        return {"family": fam, "k": _int(m.get("k"), f"{path}.k", 1, 6), "d": _int(m.get("d"), f"{path}.d", 2, 12)}
    if fam == "perturbed":
        _keys(m, {"family", "k", "d", "eps", "seed"}, path)
        return {"family": fam, "k": _int(m.get("k"), f"{path}.k", 1, 6), "d": _int(m.get("d"), f"{path}.d", 2, 12),
                "eps": _complex(m.get("eps", 0.05), f"{path}.eps"), "seed": _int(m.get("seed", 0), f"{path}.seed", 0)}
    if fam == "ueda":
        _keys(m, {"family", "k", "h", "h_den"}, path)
        h = m.get("h")
        if not isinstance(h, list) or len(h) < 3:
            raise ConfigError(f"{path}.h", "expected ascending coefficients of degree >= 2")
        out = {"family": fam, "k": _int(m.get("k"), f"{path}.k", 1, 4),
               "h": [_complex(c, f"{path}.h[{i}]") for i, c in enumerate(h)]}
        if m.get("h_den") is not None:
            out["h_den"] = [_complex(c, f"{path}.h_den[{i}]") for i, c in enumerate(m["h_den"])]
        return out
    if fam == "text":
        _keys(m, {"family", "text"}, path)
        if not isinstance(m.get("text"), str):
            raise ConfigError(f"{path}.text", "expected the map as text")
        return {"family": fam, "text": m["text"]}
    raise ConfigError(f"{path}.family", f"unknown family {fam!r} (power, perturbed, ueda, text)")


def validate_hypersurface(h, path, k) -> dict:
    if not isinstance(h, dict):
        raise ConfigError(path, "expected an object")
    kind = h.get("kind")
    if kind == "coordinate":
        _keys(h, {"kind", "index"}, path)
        return {"kind": kind, "index": _int(h.get("index"), f"{path}.index", 0, k)}
    if kind == "random_line":
        _keys(h, {"kind", "seed"}, path)
        return {"kind": kind, "seed": _int(h.get("seed", 0), f"{path}.seed", 0)}
    if kind == "text":
        _keys(h, {"kind", "text"}, path)
        if not isinstance(h.get("text"), str):
            raise ConfigError(f"{path}.text", "expected a homogeneous polynomial as text")
        return {"kind": kind, "text": h["text"]}
    raise ConfigError(f"{path}.kind", f"unknown kind {kind!r} (coordinate, random_line, text)")


# --- per-experiment sections ------------------------------------------------------------

def _v_green_grid(s, p, k):
    s["chart"] = _int(s["chart"], f"{p}.chart", 0, k)
    s["extent"] = _extent(s["extent"], f"{p}.extent")
    s["resolution"] = _int(s["resolution"], f"{p}.resolution", 2, 2001)
    if s["slice"] is not None:
        if not isinstance(s["slice"], list) or len(s["slice"]) != k - 1:
            raise ConfigError(f"{p}.slice", f"expected {k - 1} values")
        s["slice"] = [_complex(v, f"{p}.slice[{i}]") for i, v in enumerate(s["slice"])]
    s["tol"] = _num(s["tol"], f"{p}.tol", 0, lo_open=True)


def _v_pullback(s, p, k):
    s["hypersurface"] = validate_hypersurface(s["hypersurface"], f"{p}.hypersurface", k)
    s["n_list"] = _n_list(s["n_list"], f"{p}.n_list")
    s["sample_count"] = _int(s["sample_count"], f"{p}.sample_count", 100, 10 ** 7)
    s["tol"] = _num(s["tol"], f"{p}.tol", 0, lo_open=True)


def _v_lelong(s, p, k):
    s["hypersurface"] = validate_hypersurface(s["hypersurface"], f"{p}.hypersurface", k)
    s["n"] = _int(s["n"], f"{p}.n", 0, 30)
    if s["center"] is None:
        raise ConfigError(f"{p}.center", "required")
    s["center"] = _point(s["center"], f"{p}.center", k)
    s["r_max"] = _num(s["r_max"], f"{p}.r_max", 0, 0.25, lo_open=True)
    s["levels"] = _int(s["levels"], f"{p}.levels", 4, 30)
    s["samples_per_radius"] = _int(s["samples_per_radius"], f"{p}.samples_per_radius", 500, 10 ** 7)
    if s["compare_n"] is not None:
        s["compare_n"] = _int(s["compare_n"], f"{p}.compare_n", 1, 10)
    s["tol"] = _num(s["tol"], f"{p}.tol", 0, lo_open=True)


def _v_backward(s, p, k):
    if s["a"] is None:
        raise ConfigError(f"{p}.a", "required")
    s["a"] = _point(s["a"], f"{p}.a", k)
    s["n"] = _int(s["n"], f"{p}.n", 1, 40)
    s["max_atoms"] = _int(s["max_atoms"], f"{p}.max_atoms", 1000, 2 ** 22)
    if s["test_points"] is not None:
        if not isinstance(s["test_points"], list) or not s["test_points"]:
            raise ConfigError(f"{p}.test_points", "expected a nonempty list of affine values")
        s["test_points"] = [_complex(v, f"{p}.test_points[{i}]") for i, v in enumerate(s["test_points"])]
    s["tol"] = _num(s["tol"], f"{p}.tol", 0, lo_open=True)


def _v_invariance(s, p, k):
    if s["max_codim"] is not None:
        s["max_codim"] = _int(s["max_codim"], f"{p}.max_codim", 1, k)
    s["sample_count"] = _int(s["sample_count"], f"{p}.sample_count", 10, 10 ** 6)
    s["degree_trials"] = _int(s["degree_trials"], f"{p}.degree_trials", 0, 10 ** 5)


def _v_contraction(s, p, k):
    if s["x"] is None:
        raise ConfigError(f"{p}.x", "required")
    s["x"] = _point(s["x"], f"{p}.x", k)
    s["r"] = _num(s["r"], f"{p}.r", 0, 0.25, lo_open=True, hi_open=True)
    s["N"] = _int(s["N"], f"{p}.N", 0, 25)


def _v_henon_green(s, p, k):
    s["extent"] = _extent(s["extent"], f"{p}.extent")
    s["resolution"] = _int(s["resolution"], f"{p}.resolution", 2, 2001)
    s["N"] = _int(s["N"], f"{p}.N", 1, 1000)
    if s["plane"] not in ("real", "y-line"):
        raise ConfigError(f"{p}.plane", "expected 'real' or 'y-line'")


def _v_henon_pullback(s, p, k):
    if not isinstance(s["Q"], str):
        raise ConfigError(f"{p}.Q", "expected a polynomial in z0, z1 as text")
    s["n_list"] = _n_list(s["n_list"], f"{p}.n_list")
    r = s["region"]
    if not isinstance(r, list) or len(r) != 2:
        raise ConfigError(f"{p}.region", "expected [r_min, r_max]")
    lo, hi = _num(r[0], f"{p}.region[0]", 0), _num(r[1], f"{p}.region[1]", 0)
    if not lo < hi:
        raise ConfigError(f"{p}.region", "need r_min < r_max")
    s["region"] = [lo, hi]
    s["sample_count"] = _int(s["sample_count"], f"{p}.sample_count", 10, 10 ** 7)
    s["N"] = _int(s["N"], f"{p}.N", 1, 1000)


_SECTION_VALIDATORS = {
    "green_grid": _v_green_grid, "pullback_converge": _v_pullback, "lelong": _v_lelong,
    "backward_sample": _v_backward, "invariance_check": _v_invariance, "contraction_probe": _v_contraction,
    "henon_green": _v_henon_green, "henon_pullback": _v_henon_pullback,
}


def map_dimension(m: dict) -> int:
    if m["family"] == "henon":
        return 2
    if m["family"] == "text":
        from .poly import parse_map
        return parse_map(m["text"], certify=False).k
    return m["k"]


def validate(raw: dict, experiment: str) -> dict:
    """Checked copy of a raw config with defaults filled in.

    Every field is checked before anything is computed; errors carry the dotted path.
    """
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {experiment!r}")
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    if "experiment" in raw and raw["experiment"] != experiment:
        raise ConfigError("experiment", f"config is for {raw['experiment']!r}, not {experiment!r}")
    sec = section_name(experiment)
    allowed = {"experiment", "seed", "map", sec}
    _keys(raw, allowed, "")
    cfg = {"experiment": experiment, "seed": _int(raw.get("seed", 0), "seed", 0, 2 ** 63 - 1)}
    if "map" not in raw:
        raise ConfigError("map", "required")
    cfg["map"] = validate_map(raw["map"], "map", henon=experiment in HENON_EXPERIMENTS)
    try:
        k = map_dimension(cfg["map"])
    except ValueError as exc:
        raise ConfigError("map.text", str(exc)) from None
    given = raw.get(sec, {})
    if not isinstance(given, dict):
        raise ConfigError(sec, "expected an object")
    _keys(given, DEFAULTS[sec], sec)
    s = copy.deepcopy(DEFAULTS[sec])
    s.update(copy.deepcopy(given))
    _SECTION_VALIDATORS[sec](s, sec, k)
    if experiment == "backward-sample" and s["test_points"] is not None and k != 1:
        raise ConfigError(f"{sec}.test_points", "logarithmic-potential test points need k = 1")
    cfg[sec] = s
    return cfg


def load(path, experiment: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return validate(raw, experiment)


def apply_seed_override(cfg: dict, environ=None) -> tuple[dict, str]:
    """GREENLAB_SEED replaces the config seed; returns (cfg, source)."""
    env = os.environ if environ is None else environ
    val = env.get(SEED_ENV)
    if val is None or val == "":
        return cfg, "config"
    try:
        seed = int(val, 0)
    except ValueError:
        raise ConfigError(SEED_ENV, f"not an integer: {val!r}") from None
    if seed < 0:
        raise ConfigError(SEED_ENV, "must be nonnegative")
    cfg = dict(cfg)
    cfg["seed"] = seed
    return cfg, "env"


def jsonable(x):
    if isinstance(x, complex):
        return x.real if x.imag == 0 else [x.real, x.imag]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x
