"""Modulo-T potentials of hypersurfaces and their normalized pull-backs.

For a hypersurface H = {P = 0} of degree s, s^-1 [H] = T + dd^c u with
u = s^-1 log|P| - G on unit representatives. Along the renormalized orbit
w_n of a unit vector z,

    u_n(z) = d^-n u(f^n z) = d^-n s^-1 log|P(w_n)| - (G(z) - G_n(z)),

where G_n is the partial escape-rate sum; both G and G_n come from one
accumulator run.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .extended import from_complex, lp_map, lp_poly
from .green import OrbitAccumulator, estimate_c_bound, henon_green_plus_batch, steps_for_tol, tail_bound
from .parallel import concat_map, det_mean
from .poly import HomogeneousPolynomial, LiftedEndomorphism, Polynomial, RegularAutomorphism, format_polynomial
from .projective import ProjectivePoint, sample_fs_uniform
from .rng import Stream

CLIP_FLOOR = -700.0


@dataclass(frozen=True, eq=False)
class HypersurfaceCurrent:
    P: HomogeneousPolynomial

    def __post_init__(self):
        if not isinstance(self.P, HomogeneousPolynomial):
            raise TypeError("hypersurface needs a homogeneous polynomial")
        if self.P.is_zero():
            raise ValueError("P is identically zero")
        if self.P.degree < 1:
            raise ValueError("hypersurface degree must be >= 1")

    @property
    def s(self) -> int:
        return self.P.degree

    @property
    def label(self) -> str:
        return format_polynomial(self.P)


def coordinate_hyperplane(k: int, j: int) -> HypersurfaceCurrent:
    e = [0] * (k + 1)
    e[j] = 1
    return HypersurfaceCurrent(HomogeneousPolynomial(k + 1, [(e, 1.0)], 1))


def random_line(k: int, seed: int) -> HypersurfaceCurrent:
    """Hyperplane sum a_i z_i with a_i standard complex Gaussian from the seeded stream."""
    a = Stream(seed, stream=0x11E).complex_normal(k + 1)
    terms = [([1 if j == i else 0 for j in range(k + 1)], a[i]) for i in range(k + 1)]
    return HypersurfaceCurrent(HomogeneousPolynomial(k + 1, terms, 1))


@dataclass(frozen=True)
class PullbackPotentialSample:
    point: ProjectivePoint
    n: int
    u_n: float
    clipped: bool
    correction: float
    correction_bound: float


def _pullback_table(H: HypersurfaceCurrent, F: LiftedEndomorphism, W: np.ndarray, n_list, tol: float):
    """u_n for every row of W (unit vectors) and every n in n_list.

    Returns (u, clipped, correction) arrays of shape (len(n_list), len(W)).
    """
    if H.P.nvars != F.k + 1:
        raise ValueError("hypersurface and map live on different projective spaces")
    d, s = F.d, H.s
    c = estimate_c_bound(F)
    n_tol, _ = steps_for_tol(c, d, tol)
    wanted = sorted(set(int(n) for n in n_list))
    n_total = max(n_tol, wanted[-1])
    acc = OrbitAccumulator(F, W, c)
    snaps = {}
    for n in range(n_total + 1):
        if n in wanted:
            logP, _ = lp_poly(H.P, acc.ell, acc.phase)
            snaps[n] = (logP, acc.partial.copy())
        if n < n_total:
            acc.step()
    g_inf = acc.partial
    u = np.empty((len(n_list), len(W)))
    clipped = np.zeros_like(u, dtype=bool)
    corr = np.empty_like(u)
    for r, n in enumerate(n_list):
        logP, g_n = snaps[int(n)]
        lead = float(d) ** (-int(n)) * logP / s
        corr[r] = g_inf - g_n
        cl = ~(lead >= CLIP_FLOOR)
        u[r] = np.where(cl, CLIP_FLOOR, lead - corr[r])
        clipped[r] = cl
    return u, clipped, corr


def pullback_table(H, F, W, n_list, tol: float = 1e-10, workers: int = 1):
    W = np.asarray(W, dtype=complex)
    m = len(n_list)

    def chunk(a, b):
        u, cl, co = _pullback_table(H, F, W[a:b], n_list, tol)
        return np.concatenate([u, cl.astype(float), co], axis=0).T

    out = concat_map(chunk, len(W), workers).reshape(len(W), 3 * m).T
    return out[:m], out[m:2 * m].astype(bool), out[2 * m:]


def pullback_potential(H: HypersurfaceCurrent, F: LiftedEndomorphism, p: ProjectivePoint, n: int,
                       tol: float = 1e-10) -> PullbackPotentialSample:
    if n < 0:
        raise ValueError("n must be >= 0")
    u, cl, co = _pullback_table(H, F, p.coords[None, :], [n], tol)
    return PullbackPotentialSample(p, n, float(u[0, 0]), bool(cl[0, 0]), float(co[0, 0]),
                                   tail_bound(estimate_c_bound(F), F.d, n))


def modulo_potential(H: HypersurfaceCurrent, F: LiftedEndomorphism, p: ProjectivePoint, tol: float = 1e-10) -> float:
    """u(p) = s^-1 log|P| - G at the unit representative; CLIP_FLOOR on H."""
    return pullback_potential(H, F, p, 0, tol).u_n


def potential_function(H: HypersurfaceCurrent, F: LiftedEndomorphism, n: int = 0, tol: float = 1e-10,
                       unnormalized: bool = False):
    """Vectorized p -> u_n(p) (or d^n u_n(p) = u(f^n p) if ``unnormalized``) on arrays of unit vectors."""
    def fn(W):
        W = np.atleast_2d(np.asarray(W, dtype=complex))
        u, cl, _ = _pullback_table(H, F, W, [n], tol)
        v = u[0] * (float(F.d) ** n if unnormalized else 1.0)
        return np.where(cl[0], -np.inf, v)
    return fn


@dataclass(frozen=True)
class ReportRow:
    n: int
    mean_abs_u: float
    max_abs_u: float
    clipped_count: int
    samples_used: int


@dataclass
class ConvergenceReport:
    map_id: str
    hypersurface_id: str
    sample_count: int
    seed: int
    rows: list[ReportRow]
    fitted_rate: float
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sample_count <= 0:
            raise ValueError("sample_count must be positive")
        ns = [r.n for r in self.rows]
        if ns != sorted(ns):
            raise ValueError("rows must be ordered by n")

    def means(self) -> np.ndarray:
        return np.array([r.mean_abs_u for r in self.rows])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "mean_abs_u", "max_abs_u", "clipped_count", "samples_used"])
            for r in self.rows:
                w.writerow([r.n, repr(r.mean_abs_u), repr(r.max_abs_u), r.clipped_count, r.samples_used])
            w.writerow(["fitted_rate", repr(self.fitted_rate), "", "", ""])


def fit_rate(ns, means) -> float:
    """Least-squares slope of log(mean) against n."""
    ns = np.asarray(ns, float)
    y = np.log(np.asarray(means, float))
    ok = np.isfinite(y)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(ns[ok], y[ok], 1)[0])


def _rows(ns, u, clipped) -> tuple[list[ReportRow], bool]:
    rows, degenerate = [], False
    for n, un, cl in zip(ns, u, clipped):
        good = np.abs(un[~cl])
        if good.size == 0:
            degenerate = True
            rows.append(ReportRow(int(n), float("nan"), float("nan"), int(cl.sum()), 0))
        else:
            rows.append(ReportRow(int(n), det_mean(good), float(good.max()), int(cl.sum()), int(good.size)))
    return rows, degenerate


def convergence_report(H: HypersurfaceCurrent, F: LiftedEndomorphism, n_list, sample_count: int, seed: int,
                       tol: float = 1e-10, workers: int = 1, map_id: str = "", hypersurface_id: str = "") -> ConvergenceReport:
    """mean/max of |u_n| over one shared set of FS-uniform samples, for every n in n_list."""
    ns = [int(n) for n in n_list]
    if ns != sorted(set(ns)) or ns[0] < 0:
        raise ValueError("n_list must be increasing and nonnegative")
    if sample_count < 100:
        raise ValueError("sample_count must be >= 100")
    W = sample_fs_uniform(sample_count, F.k, seed)
    u, clipped, _ = pullback_table(H, F, W, ns, tol, workers)
    rows, degenerate = _rows(ns, u, clipped)
    rate = fit_rate(ns, [r.mean_abs_u for r in rows]) if not degenerate else float("nan")
    return ConvergenceReport(map_id or F.family, hypersurface_id or H.label, sample_count, seed, rows, rate, degenerate)


def invariance_residual(H: HypersurfaceCurrent, F: LiftedEndomorphism, sample_count: int, seed: int,
                        tol: float = 1e-10, workers: int = 1) -> tuple[float, int]:
    """max over samples of |d^-1 u(f p) - u(p)|, and the number of clipped samples skipped."""
    W = sample_fs_uniform(sample_count, F.k, seed)
    u, clipped, _ = pullback_table(H, F, W, [0, 1], tol, workers)
    ok = ~(clipped[0] | clipped[1])
    if not ok.any():
        return float("nan"), int(sample_count)
    return float(np.max(np.abs(u[1, ok] - u[0, ok]))), int((~ok).sum())


# --- regular automorphisms ----------------------------------------------------

def sample_annulus(k: int, r_min: float, r_max: float, count: int, seed: int, stream: int = 0) -> np.ndarray:
    """Uniform (Lebesgue) samples of {r_min <= ||z|| <= r_max} in C^k."""
    if not 0 <= r_min < r_max:
        raise ValueError("need 0 <= r_min < r_max")
    rs = Stream(seed, stream)
    g = rs.complex_normal((count, k))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    u = rs.uniform(count)
    m = 2 * k
    r = (r_min**m + u * (r_max**m - r_min**m)) ** (1.0 / m)
    return g * r[:, None]


def _log_abs_Q_along_orbit(A: RegularAutomorphism, Q: Polynomial, Z: np.ndarray, n_list) -> np.ndarray:
    """log|Q(f^n z)| for n in n_list, iterating in log-polar form."""
    ell, ph = from_complex(Z)
    out = np.empty((len(n_list), len(Z)))
    wanted = {int(n): i for i, n in enumerate(n_list)}
    for n in range(max(wanted) + 1):
        if n in wanted:
            out[wanted[n]] = lp_poly(Q, ell, ph)[0]
        if n < max(wanted):
            ell, ph = lp_map(A.forward, ell, ph)
    return out


def henon_pullback_report(A: RegularAutomorphism, Q: Polynomial, n_list, region=(5.0, 10.0), sample_count: int = 1000,
                          seed: int = 0, N: int = 200, workers: int = 1) -> ConvergenceReport:
    """mean over escaping samples of |d_+^-n deg(Q)^-1 log|Q(f^n z)| - G+(z)|.

    Non-escaping samples (G+ reported as 0) are summarized in ``extra``.
    """
    if Q.nvars != A.k:
        raise ValueError("Q must be a polynomial on C^k")
    if Q.is_zero() or Q.max_degree < 1:
        raise ValueError("Q must be nonconstant")
    ns = [int(n) for n in n_list]
    if ns != sorted(set(ns)) or ns[0] < 0:
        raise ValueError("n_list must be increasing and nonnegative")
    Z = sample_annulus(A.k, region[0], region[1], sample_count, seed)
    gplus, esc, _, _ = henon_green_plus_batch(A, Z, N, workers)

    def chunk(a, b):
        return _log_abs_Q_along_orbit(A, Q, Z[a:b], ns).T

    logQ = concat_map(chunk, len(Z), workers).reshape(len(Z), len(ns)).T
    q = Q.max_degree
    resid = np.empty_like(logQ)
    for i, n in enumerate(ns):
        resid[i] = np.abs(float(A.d_plus) ** (-n) * logQ[i] / q - gplus)
    clipped = ~np.isfinite(resid)
    rows, degenerate = _rows(ns, np.where(esc[None, :], resid, np.nan), clipped | ~esc[None, :])
    extra = {"escaping": int(esc.sum()), "non_escaping": int((~esc).sum())}
    if (~esc).any():
        extra["non_escaping_mean"] = [det_mean(r[~esc & np.isfinite(r)]) if np.isfinite(r[~esc]).any() else float("nan")
                                      for r in resid]
    if not esc.any():
        degenerate = True
    rate = fit_rate(ns, [r.mean_abs_u for r in rows]) if not degenerate else float("nan")
    return ConvergenceReport(A.family, format_polynomial(Q), sample_count, seed, rows, rate, degenerate, extra)
