"""greenlab <experiment> --config <path> [--workers N] [--out DIR]"""
from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import EXPERIMENTS, GRID_EXPERIMENTS, ConfigError, apply_seed_override, jsonable, load, section_name
from .poly import (DegenerateMapError, format_polynomial, make_henon, make_perturbed_power_map, make_power_map,
                   make_ueda_map, parse_map, parse_polynomial)


def build_map(m: dict):
    fam = m["family"]
    if fam == "power":
        return make_power_map(m["k"], m["d"])
    if fam == "perturbed":
        return make_perturbed_power_map(m["k"], m["d"], m["eps"], m["seed"])
    if fam == "ueda":
        h = (m["h"], m["h_den"]) if "h_den" in m else m["h"]
        return make_ueda_map(h, m["k"])
    if fam == "text":
        return parse_map(m["text"])
    if fam == "henon":
        return make_henon(m["a"], m["c"])
    raise ValueError(fam)


def build_hypersurface(h: dict, k: int):
    from .pullback import HypersurfaceCurrent, coordinate_hyperplane, random_line

    if h["kind"] == "coordinate":
        return coordinate_hyperplane(k, h["index"])
    if h["kind"] == "random_line":
        return random_line(k, h["seed"])
    return HypersurfaceCurrent(parse_polynomial(h["text"], nvars=k + 1, homogeneous=True))


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


# --- experiments: each returns (outputs, diagnostics) -----------------------------------------

def run_green_grid(cfg, F, out: Path, workers: int):
    from .green import green_grid
    from .plotting import field_figure, write_pgm

    s = cfg["green_grid"]
    xs, ys, g, err = green_grid(F, s["chart"], s["extent"], s["resolution"], s["slice"], s["tol"], workers)
    X, Y = np.meshgrid(xs, ys)
    _write_rows(out / "green_grid.csv", ["x", "y", "g"], zip(X.ravel(), Y.ravel(), g.ravel()))
    lo, hi = write_pgm(out / "green_grid.pgm", g)
    field_figure(out / "green_grid.png", xs, ys, g, label="g")
    return ["green_grid.csv", "green_grid.pgm", "green_grid.png"], {"error_bound": err, "raster_range": [lo, hi]}


def run_pullback(cfg, F, out: Path, workers: int):
    from .plotting import decay_figure
    from .pullback import convergence_report

    s = cfg["pullback_converge"]
    H = build_hypersurface(s["hypersurface"], F.k)
    rep = convergence_report(H, F, s["n_list"], s["sample_count"], cfg["seed"], s["tol"], workers)
    rep.to_csv(out / "pullback_converge.csv")
    decay_figure(out / "pullback_converge.png", s["n_list"], rep.means(), rep.fitted_rate)
    return ["pullback_converge.csv", "pullback_converge.png"], {
        "fitted_rate": rep.fitted_rate, "degenerate": rep.degenerate, "hypersurface": H.label}


def run_lelong(cfg, F, out: Path, workers: int):
    from .lelong import lelong_estimate, lelong_pullback_comparison
    from .plotting import lelong_figure
    from .projective import normalize
    from .pullback import potential_function

    s = cfg["lelong"]
    H = build_hypersurface(s["hypersurface"], F.k)
    center, _ = normalize(s["center"])
    est = lelong_estimate(potential_function(H, F, s["n"], s["tol"]), center, s["r_max"], s["levels"],
                          s["samples_per_radius"], cfg["seed"])
    rows = [(j, r, lr, sp) for j, (r, lr, sp) in enumerate(zip(est.radii, est.log_r, est.sups))]
    _write_rows(out / "lelong.csv", ["level", "radius", "log_r", "sup"], rows)
    diag = {"slope": est.slope, "r_squared": est.r_squared, "infinite": est.infinite,
            "convexity_ok": est.convexity_ok(), "min_second_difference": float(np.min(est.second_differences())),
            "rejection_rates": est.rejection_rates}
    outputs = ["lelong.csv"]
    if np.all(np.isfinite(est.sups)):
        lelong_figure(out / "lelong.png", est.log_r, est.sups, est.slope, est.intercept, math.ceil(s["levels"] / 2))
        outputs.append("lelong.png")
    if s["compare_n"]:
        cmp = lelong_pullback_comparison(H, F, center, s["compare_n"], s["r_max"], s["levels"],
                                         s["samples_per_radius"], cfg["seed"], s["tol"])
        _write_rows(out / "lelong_compare.csv",
                    ["n", "nu_downstairs", "nu_upstairs", "local_degree", "inconclusive", "sandwich_holds"],
                    [(cmp.n, cmp.nu_downstairs, cmp.nu_upstairs, cmp.local_degree, int(cmp.inconclusive),
                      int(cmp.sandwich_holds))])
        outputs.append("lelong_compare.csv")
    return outputs, diag


def run_backward(cfg, F, out: Path, workers: int):
    from .equidist import angular_ks, backward_orbit_measure, potential_residual
    from .plotting import atoms_figure

    s = cfg["backward_sample"]
    m = backward_orbit_measure(F, s["a"], s["n"], s["max_atoms"], cfg["seed"])
    m.to_csv(out / "backward_sample.csv")
    outputs = ["backward_sample.csv"]
    diag = {"atoms": len(m), "total_weight": m.total, "resampled_levels": list(m.resampled_levels)}
    if F.k == 1:
        diag["angular_ks"] = angular_ks(m)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = m.points[:, 1] / m.points[:, 0]
        ok = np.isfinite(t)
        atoms_figure(out / "backward_sample.png", t[ok], m.weights[ok])
        outputs.append("backward_sample.png")
        if s["test_points"] is not None:
            res = potential_residual(m, F, s["test_points"], s["tol"])
            _write_rows(out / "measure_test.csv", ["t_re", "t_im", "residual"],
                        [(complex(t).real, complex(t).imag, r) for t, r in zip(s["test_points"], res.per_point)])
            outputs.append("measure_test.csv")
            diag.update(potential_residual=res.residual, excluded_test_points=res.excluded)
    else:
        try:
            res = potential_residual(m, F)
        except ValueError as exc:
            diag["moment_test"] = f"unavailable: {exc}"
        else:
            _write_rows(out / "measure_test.csv", ["statistic", "abs_difference"], enumerate(res.per_point))
            outputs.append("measure_test.csv")
            diag["moment_residual"] = res.residual
    return outputs, diag


def run_invariance(cfg, F, out: Path, workers: int):
    from .equidist import SolverError
    from .invariant_sets import (CoordinateSubspace, enumerate_invariant_coordinate_subspaces,
                                 restricted_topological_degree, write_invariance_csv)

    s = cfg["invariance_check"]
    rows = enumerate_invariant_coordinate_subspaces(F, s["max_codim"], s["sample_count"], cfg["seed"])
    write_invariance_csv(out / "invariance_check.csv", rows)
    outputs = ["invariance_check.csv"]
    diag = {"minimal": [sorted(r.subspace.zero_set) for r, m in rows if m],
            "totally_invariant": [sorted(r.subspace.zero_set) for r, _ in rows if r.totally_invariant]}
    if s["degree_trials"]:
        subs = [CoordinateSubspace(frozenset(), F.k)] + [r.subspace for r, _ in rows if r.totally_invariant]
        drows = []
        try:
            for sub in subs:
                st = restricted_topological_degree(F, sub, s["degree_trials"], cfg["seed"])
                hist = " ".join(f"{c}:{n}" for c, n in sorted(st.histogram.items()))
                drows.append((" ".join(map(str, sorted(sub.zero_set))), sub.dimension, st.expected, hist,
                              st.resampled, int(st.all_expected)))
        except SolverError as exc:
            diag["degree"] = f"unavailable: {exc}"
        _write_rows(out / "degree.csv", ["zero_set", "dimension", "expected", "histogram", "resampled",
                                         "all_expected"], drows)
        outputs.append("degree.csv")
    return outputs, diag


def run_contraction(cfg, F, out: Path, workers: int):
    from .contraction import orbit_inradius_estimate
    from .plotting import contraction_figure
    from .projective import normalize

    s = cfg["contraction_probe"]
    rep = orbit_inradius_estimate(F, normalize(s["x"])[0], s["r"], s["N"])
    rep.to_csv(out / "contraction_probe.csv")
    contraction_figure(out / "contraction_probe.png", [r.n for r in rep.rows], rep.normalized(),
                       [r.flagged for r in rep.rows])
    return ["contraction_probe.csv", "contraction_probe.png"], {
        "c_fit": rep.c_fit, "stable": rep.stable, "label": "ESTIMATE (first-order inradius proxy)"}


def run_henon_green(cfg, A, out: Path, workers: int):
    from .green import henon_green_plus_batch
    from .plotting import field_figure, write_pgm

    s = cfg["henon_green"]
    x0, x1, y0, y1 = s["extent"]
    xs = np.linspace(x0, x1, s["resolution"])
    ys = np.linspace(y0, y1, s["resolution"])
    X, Y = np.meshgrid(xs, ys)
    if s["plane"] == "real":
        Z = np.stack([X.ravel(), Y.ravel()], axis=1).astype(complex)
    else:
        Z = np.stack([np.zeros(X.size), X.ravel() + 1j * Y.ravel()], axis=1)
    g, esc, nesc, err = henon_green_plus_batch(A, Z, s["N"], workers)
    _write_rows(out / "henon_green.csv", ["x", "y", "g_plus", "escaped", "n_escape", "error_bound"],
                zip(X.ravel(), Y.ravel(), g, esc.astype(int), nesc, err))
    G = g.reshape(X.shape)
    lo, hi = write_pgm(out / "henon_green.pgm", G)
    field_figure(out / "henon_green.png", xs, ys, G, label="G+")
    return ["henon_green.csv", "henon_green.pgm", "henon_green.png"], {
        "escaped": int(esc.sum()), "bounded_up_to_N": int((~esc).sum()), "max_error_bound": float(err.max()),
        "raster_range": [lo, hi]}


def run_henon_pullback(cfg, A, out: Path, workers: int):
    from .plotting import decay_figure
    from .pullback import henon_pullback_report

    s = cfg["henon_pullback"]
    Q = parse_polynomial(s["Q"], nvars=2)
    rep = henon_pullback_report(A, Q, s["n_list"], tuple(s["region"]), s["sample_count"], cfg["seed"], s["N"], workers)
    rep.to_csv(out / "henon_pullback.csv")
    decay_figure(out / "henon_pullback.png", s["n_list"], rep.means(), rep.fitted_rate)
    return ["henon_pullback.csv", "henon_pullback.png"], {"fitted_rate": rep.fitted_rate, "Q": format_polynomial(Q),
                                                          **rep.extra}


RUNNERS = {
    "green-grid": run_green_grid, "pullback-converge": run_pullback, "lelong": run_lelong,
    "backward-sample": run_backward, "invariance-check": run_invariance, "contraction-probe": run_contraction,
    "henon-green": run_henon_green, "henon-pullback": run_henon_pullback,
}


def versions() -> dict:
    import matplotlib
    import sympy

    return {"greenlab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "sympy": sympy.__version__, "matplotlib": matplotlib.__version__}


def run(experiment: str, config_path, out_dir, workers: int = 1, environ=None) -> int:
    """Validate, run, and write CSV(s), figures, raster and manifest.json into out_dir."""
    try:
        cfg = load(config_path, experiment)
        cfg, seed_source = apply_seed_override(cfg, environ)
        if workers < 1:
            raise ConfigError("--workers", "must be >= 1")
    except ConfigError as exc:
        print(f"greenlab: invalid config: {exc}", file=sys.stderr)
        return 2
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"experiment": experiment, "config": jsonable(cfg), "seed": cfg["seed"], "seed_source": seed_source,
                "workers": workers, "versions": versions(), "flags": []}
    t0 = time.perf_counter()
    try:
        obj = build_map(cfg["map"])
    except (DegenerateMapError, ValueError) as exc:
        print(f"greenlab: invalid config: map: {exc}", file=sys.stderr)
        return 2
    manifest["map"] = jsonable(obj.describe())
    if hasattr(obj, "components"):
        from .green import estimate_c_bound

        manifest["c_bound"] = estimate_c_bound(obj)
    outputs, diag = [], {}
    try:
        outputs, diag = RUNNERS[experiment](cfg, obj, out, workers)
    except ArithmeticError as exc:
        manifest["flags"].append(f"numerical degeneracy: {exc}")
    except RuntimeError as exc:
        # solver failures are degenerate outcomes, reported rather than fatal
        manifest["flags"].append(f"{type(exc).__name__}: {exc}")
    manifest["wall_time_s"] = time.perf_counter() - t0
    manifest["outputs"] = outputs
    manifest["diagnostics"] = jsonable(diag)
    if experiment in GRID_EXPERIMENTS:
        manifest["raster"] = section_name(experiment) + ".pgm"
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    print(f"greenlab: {experiment} wrote {', '.join(outputs) or 'no outputs'} to {out}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="greenlab", description="Green-function and equidistribution experiments.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None, help="output directory (default greenlab-out/<experiment>)")
    args = ap.parse_args(argv)
    out = args.out or str(Path("greenlab-out") / args.experiment)
    return run(args.experiment, args.config, out, args.workers)


if __name__ == "__main__":
    sys.exit(main())
