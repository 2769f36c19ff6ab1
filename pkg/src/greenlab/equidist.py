"""Preimage solvers, backward-orbit sampling of the equilibrium measure, and its tests."""
from __future__ import annotations

import csv
import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .green import green_lift
from .parallel import det_sum
from .poly import LiftedEndomorphism, symmetrize_points
from .projective import ProjectivePoint, fs_distance
from .rng import Stream

RESIDUAL_TOL = 1e-6
MERGE_TOL = 1e-9


class PreimageSolverSpec(enum.Enum):
    UNIVARIATE = "univariate"
    POWER_MAP = "power"
    UEDA_PRODUCT = "ueda"


class SolverError(RuntimeError):
    def __init__(self, message, worst=None, residual=None, path=None):
        super().__init__(message)
        self.worst = worst
        self.residual = residual
        self.path = path


def _monomial_permutation(F: LiftedEndomorphism):
    """(sigma, coeffs) if F_i = c_i z_sigma(i)^d for a permutation sigma, else None."""
    if not F.is_monomial():
        return None
    sigma, coeffs = [], []
    for P in F.components:
        e = P.exps[0]
        nz = np.flatnonzero(e)
        if len(nz) != 1:
            return None
        sigma.append(int(nz[0]))
        coeffs.append(complex(P.coeffs[0]))
    if sorted(sigma) != list(range(F.k + 1)):
        return None
    return sigma, coeffs


def default_spec(F: LiftedEndomorphism) -> PreimageSolverSpec:
    if _monomial_permutation(F) is not None:
        return PreimageSolverSpec.POWER_MAP
    if F.family == "ueda":
        return PreimageSolverSpec.UEDA_PRODUCT
    if F.k == 1:
        return PreimageSolverSpec.UNIVARIATE
    raise SolverError(f"no preimage solver for a {F.family} map with k = {F.k}")


def solver_applicable(F: LiftedEndomorphism, spec: PreimageSolverSpec) -> bool:
    if spec is PreimageSolverSpec.UNIVARIATE:
        return F.k == 1
    if spec is PreimageSolverSpec.POWER_MAP:
        return _monomial_permutation(F) is not None
    return F.family == "ueda"


# --- binary forms -------------------------------------------------------------

def _merge(pts: np.ndarray, mult: np.ndarray, tol: float = MERGE_TOL):
    keep_p, keep_m = [], []
    for p, m in zip(pts, mult):
        for i, q in enumerate(keep_p):
            if fs_distance(p, q) <= tol:
                keep_m[i] += m
                break
        else:
            keep_p.append(p)
            keep_m.append(int(m))
    return np.array(keep_p).reshape(-1, pts.shape[1]), np.array(keep_m, dtype=int)


def binary_form_roots(coeffs, cluster: float = 1e-7) -> tuple[np.ndarray, np.ndarray]:
    """Roots [u : v] of sum_m c_m u^(D-m) v^m with multiplicities summing to D.

    Roots in the chart t = v/u come from companion-matrix eigenvalues (numpy.roots)
    polished by Newton steps; a degree drop gives the root [0 : 1]. Roots closer
    than ``cluster`` in FS distance are merged.
    """
    c = np.asarray(coeffs, dtype=complex)
    D = len(c) - 1
    scale = np.max(np.abs(c))
    if not scale > 0:
        raise SolverError("binary form is identically zero")
    c = c / scale
    top = D
    while top > 0 and c[top] == 0:
        top -= 1
    pts, mult = [], []
    if top < D:
        pts.append(np.array([0.0, 1.0], dtype=complex))
        mult.append(D - top)
    if top > 0:
        poly = c[:top + 1][::-1]
        roots = np.roots(poly)
        dpoly = np.polyder(poly)
        for _ in range(3):
            f = np.polyval(poly, roots)
            fp = np.polyval(dpoly, roots)
            ok = np.abs(fp) > 1e-300
            step = np.where(ok, f / np.where(ok, fp, 1.0), 0.0)
            better = np.abs(np.polyval(poly, roots - step)) <= np.abs(f)
            roots = np.where(better, roots - step, roots)
        for t in roots:
            v = np.array([1.0, t], dtype=complex)
            pts.append(v / np.linalg.norm(v))
            mult.append(1)
    return _merge(np.array(pts), np.array(mult), cluster)


def _form_coeffs(P, D: int) -> np.ndarray:
    """Coefficients of u^(D-m) v^m for a binary homogeneous polynomial P(u, v)."""
    out = np.zeros(D + 1, dtype=complex)
    for e, c in zip(P.exps, P.coeffs):
        out[int(e[1])] += c
    return out


def _wedge_residual(F: LiftedEndomorphism, pts: np.ndarray, w: np.ndarray) -> np.ndarray:
    Fz = F(pts)
    Fz = Fz / np.linalg.norm(Fz, axis=1, keepdims=True)
    return np.asarray(fs_distance(Fz, w[None, :]))


# --- solvers --------------------------------------------------------------------

def _univariate(F: LiftedEndomorphism, w: np.ndarray):
    d = F.d
    B = w[1] * _form_coeffs(F.components[0], d) - w[0] * _form_coeffs(F.components[1], d)
    return binary_form_roots(B)


def _power(F: LiftedEndomorphism, w: np.ndarray):
    sigma, coeffs = _monomial_permutation(F)
    d, n = F.d, F.k + 1
    vals = np.array([w[i] / coeffs[i] for i in range(n)])
    ref = int(np.argmax(np.abs(vals)))
    zero = [i for i in range(n) if vals[i] == 0]
    free = [i for i in range(n) if i != ref and vals[i] != 0]
    roots_of_unity = np.exp(2j * np.pi * np.arange(d) / d)
    base = np.zeros(n, dtype=complex)
    for i in range(n):
        if vals[i] != 0:
            base[sigma[i]] = vals[i] ** (1.0 / d)
    pts = []
    for choice in itertools.product(range(d), repeat=len(free)):
        z = base.copy()
        for i, j in zip(free, choice):
            z[sigma[i]] *= roots_of_unity[j]
        pts.append(z / np.linalg.norm(z))
    mult = np.full(len(pts), d ** len(zero), dtype=int)
    return np.array(pts), mult


def _ueda(F: LiftedEndomorphism, w: np.ndarray):
    k, d = F.k, F.d
    num = np.array(F.params["h_num"], dtype=complex)
    den = np.array(F.params["h_den"], dtype=complex)
    H1 = np.zeros(d + 1, dtype=complex)
    H0 = np.zeros(d + 1, dtype=complex)
    H1[:len(num)] = num
    H0[:len(den)] = den
    # w_i is the coefficient of X^(k-i) Y^i; a root [xi : eta] of the form gives the factor (eta X - xi Y)
    roots, rmult = binary_form_roots(w)
    factors = []
    for r, m in zip(roots, rmult):
        factors += [np.array([r[1], -r[0]])] * int(m)
    fibers = []
    for a, b in factors:
        # h([u : v]) = [H0 : H1] equals [a : b]  <=>  a H1 - b H0 = 0
        fibers.append(binary_form_roots(a * H1 - b * H0))
    pts, mult = [], []
    for combo in itertools.product(*[range(len(f[0])) for f in fibers]):
        pairs = np.array([fibers[j][0][i] for j, i in enumerate(combo)])
        z = symmetrize_points(pairs)
        pts.append(z / np.linalg.norm(z))
        mult.append(int(np.prod([fibers[j][1][i] for j, i in enumerate(combo)])))
    return _merge(np.array(pts), np.array(mult))


_SOLVERS = {
    PreimageSolverSpec.UNIVARIATE: _univariate,
    PreimageSolverSpec.POWER_MAP: _power,
    PreimageSolverSpec.UEDA_PRODUCT: _ueda,
}


def preimages(F: LiftedEndomorphism, w, spec: PreimageSolverSpec | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Preimages of w as (unit vectors, multiplicities); multiplicities sum to d^k."""
    spec = spec or default_spec(F)
    if not solver_applicable(F, spec):
        raise SolverError(f"solver {spec.value} does not apply to this map")
    w = w.coords if isinstance(w, ProjectivePoint) else np.asarray(w, dtype=complex)
    w = w / np.linalg.norm(w)
    pts, mult = _SOLVERS[spec](F, w)
    if int(mult.sum()) != F.d ** F.k:
        raise SolverError(f"weighted preimage count {int(mult.sum())} != d^k = {F.d ** F.k}")
    res = _wedge_residual(F, pts, w)
    worst = int(np.argmax(res))
    if res[worst] > RESIDUAL_TOL:
        raise SolverError(f"preimage residual {res[worst]:.2e} exceeds {RESIDUAL_TOL:g}", pts[worst], res[worst])
    return pts, mult


def iterate_preimages(F: LiftedEndomorphism, w, n: int, spec=None) -> tuple[np.ndarray, np.ndarray]:
    """All points of f^-n(w) with multiplicities (no resampling)."""
    w = w.coords if isinstance(w, ProjectivePoint) else np.asarray(w, dtype=complex)
    pts, mult = w[None, :] / np.linalg.norm(w), np.ones(1, dtype=int)
    for _ in range(n):
        new_p, new_m = [], []
        for p, m in zip(pts, mult):
            q, qm = preimages(F, p, spec)
            new_p.append(q)
            new_m.append(qm * m)
        pts, mult = np.concatenate(new_p), np.concatenate(new_m)
    return pts, mult


# --- empirical measures -----------------------------------------------------------

@dataclass
class EmpiricalMeasure:
    points: np.ndarray
    weights: np.ndarray
    resampled_levels: tuple = ()

    @property
    def total(self) -> float:
        return det_sum(self.weights)

    def __len__(self):
        return len(self.weights)

    def push_forward(self, F: LiftedEndomorphism, n: int = 1) -> "EmpiricalMeasure":
        P = self.points
        for _ in range(n):
            P = F(P)
            P = P / np.linalg.norm(P, axis=1, keepdims=True)
        return EmpiricalMeasure(P, self.weights.copy())

    def to_csv(self, path) -> None:
        n = self.points.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"{p}_{i}" for i in range(n) for p in ("re", "im")] + ["weight"])
            for z, wt in zip(self.points, self.weights):
                w.writerow([repr(float(x)) for c in z for x in (c.real, c.imag)] + [repr(float(wt))])


def _systematic_resample(weights: np.ndarray, m: int, stream: Stream) -> np.ndarray:
    """Counts per atom for systematic resampling of m draws proportional to weights."""
    cw = np.cumsum(weights / det_sum(weights))
    cw[-1] = 1.0
    u = (stream.uniform(1)[0] + np.arange(m)) / m
    idx = np.searchsorted(cw, u, side="right")
    return np.bincount(np.minimum(idx, len(weights) - 1), minlength=len(weights))


def backward_orbit_measure(F: LiftedEndomorphism, a, n: int, max_atoms: int = 2 ** 14, seed: int = 0,
                           spec: PreimageSolverSpec | None = None) -> EmpiricalMeasure:
    """d^-kn (f^n)^* delta_a, expanded exactly while it has at most ``max_atoms`` atoms and
    systematically resampled (multiplicity-proportional, equal weights) beyond that."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if max_atoms < 1000:
        raise ValueError("max_atoms must be >= 1000")
    spec = spec or default_spec(F)
    a = a.coords if isinstance(a, ProjectivePoint) else np.asarray(a, dtype=complex)
    pts = (a / np.linalg.norm(a))[None, :]
    wts = np.ones(1)
    D = F.d ** F.k
    resampled = []
    for level in range(n):
        new_p, new_w = [], []
        for i, (p, wt) in enumerate(zip(pts, wts)):
            try:
                q, qm = preimages(F, p, spec)
            except SolverError as exc:
                exc.path = (level, i)
                raise
            new_p.append(q)
            new_w.append(wt * qm / D)
        pts, wts = np.concatenate(new_p), np.concatenate(new_w)
        if len(wts) > max_atoms:
            counts = _systematic_resample(wts, max_atoms, Stream(seed, 0xBAC0 + level))
            keep = counts > 0
            pts, wts = pts[keep], counts[keep] / max_atoms
            resampled.append(level)
    return EmpiricalMeasure(pts, wts / det_sum(wts), tuple(resampled))


def angular_ks(m: EmpiricalMeasure) -> float:
    """Weighted Kolmogorov-Smirnov distance of arg(z1/z0) to the uniform law on the circle."""
    t = m.points[:, 1] / m.points[:, 0]
    theta = np.mod(np.angle(t), 2 * np.pi) / (2 * np.pi)
    order = np.argsort(theta, kind="stable")
    th = theta[order]
    cw = np.cumsum(m.weights[order])
    before = np.concatenate([[0.0], cw[:-1]])
    return float(max(np.max(cw - th), np.max(th - before)))


def affine_green_offset(F: LiftedEndomorphism, T: float = 1e8, tol: float = 1e-12) -> float:
    """lim_{t -> inf} G(1, t) - log|t| for maps fixing [0 : 1]."""
    return green_lift(F, np.array([1.0, T], dtype=complex), tol).value - np.log(T)


def moment_dictionary(W: np.ndarray) -> np.ndarray:
    """Ten smooth test statistics per point: |z_i|^2, Re/Im z_i conj(z_j), |z_i|^4 (truncated to 10)."""
    n = W.shape[1]
    cols = [np.abs(W[:, i]) ** 2 for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            p = W[:, i] * np.conj(W[:, j])
            cols += [p.real, p.imag]
    cols += [np.abs(W[:, i]) ** 4 for i in range(n)]
    return np.stack(cols[:10], axis=1)


def torus_moments(k: int) -> np.ndarray:
    """The moment dictionary integrated against Haar measure on |z_0| = ... = |z_k|."""
    n = k + 1
    vals = [1.0 / n] * n + [0.0, 0.0] * (n * (n - 1) // 2) + [1.0 / n**2] * n
    return np.array(vals[:10])


@dataclass
class ResidualResult:
    residual: float
    excluded: int
    per_point: np.ndarray


def potential_residual(m: EmpiricalMeasure, F: LiftedEndomorphism, test_points=None, tol: float = 1e-10,
                       min_distance: float = 0.2) -> ResidualResult:
    """Distance of an empirical measure to the equilibrium measure.

    k = 1: max over test points t of |sum w_i log|t - z_i| - G_affine(t)|, with
    G_affine(t) = G(1, t) - lim(G(1, s) - log|s|); test points within FS distance
    ``min_distance`` of an atom are excluded. Needs [0 : 1] fixed (polynomial maps).
    k >= 2: max moment discrepancy against Haar measure on the unit torus, available
    for power maps only.
    """
    if F.k == 1:
        if any(P(np.array([0.0, 1.0])) != 0 for P in F.components[:1]):
            raise ValueError("the logarithmic-potential test needs a polynomial map fixing [0 : 1]")
        T = np.asarray(test_points, dtype=complex)
        if T.ndim == 1:
            T = np.stack([np.ones_like(T), T], axis=1)
        T = T / np.linalg.norm(T, axis=1, keepdims=True)
        if np.any(np.abs(m.points[:, 0]) < 1e-300):
            raise ValueError("measure has atoms at infinity")
        z = m.points[:, 1] / m.points[:, 0]
        kappa = affine_green_offset(F)
        per, excl = [], 0
        for tp in T:
            if np.min(np.asarray(fs_distance(m.points, tp[None, :]))) < min_distance or abs(tp[0]) < 1e-12:
                excl += 1
                per.append(np.nan)
                continue
            t = tp[1] / tp[0]
            lhs = det_sum(m.weights * np.log(np.abs(t - z)))
            g = green_lift(F, np.array([1.0, t]), tol).value - kappa
            per.append(abs(lhs - g))
        per = np.array(per)
        ok = np.isfinite(per)
        return ResidualResult(float(per[ok].max()) if ok.any() else float("nan"), excl, per)
    if _monomial_permutation(F) is None:
        raise ValueError("no oracle for the equilibrium measure of this map")
    phi = moment_dictionary(m.points)
    emp = np.array([det_sum(m.weights * phi[:, j]) for j in range(phi.shape[1])])
    diff = np.abs(emp - torus_moments(F.k))
    return ResidualResult(float(diff.max()), 0, diff)
