"""Orbit probes of how fast f^n can shrink balls and volumes.

Both quantities are estimates: the inradius of f^n(B_x(r)) is replaced by the
first-order proxy r * sigma_min(D f^n) and image volumes are counted on a grid.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .extended import from_complex, lp_lognorm, lp_map, lp_poly, to_complex
from .poly import LiftedEndomorphism, Polynomial
from .projective import ProjectivePoint, normalize, tangent_basis

SIGMA_FLOOR = 1e-12


@dataclass
class ContractionRow:
    n: int
    log_rn_estimate: float
    log_sigma_min_product: float
    normalized: float
    flagged: bool


@dataclass
class ContractionProbeReport:
    center: ProjectivePoint
    r: float
    d: int
    k: int
    rows: list = field(default_factory=list)
    c_fit: float = float("nan")
    stable: bool = False

    def normalized(self) -> np.ndarray:
        return np.array([row.normalized for row in self.rows])

    def last_variation(self, m: int = 5) -> float:
        """(max - min)/|mean| of the normalized column over the last m rows."""
        v = self.normalized()[-m:]
        return float((v.max() - v.min()) / abs(v.mean())) if v.mean() != 0 else float("inf")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "log_rn_estimate", "log_sigma_min_product", "normalized", "flagged"])
            for row in self.rows:
                w.writerow([row.n, repr(row.log_rn_estimate), repr(row.log_sigma_min_product),
                            repr(row.normalized), int(row.flagged)])


def fs_differential(F: LiftedEndomorphism, x: np.ndarray) -> np.ndarray:
    """k x k matrix of D[f] at the unit vector x in orthonormal tangent frames."""
    y = F(x)
    ny = np.linalg.norm(y)
    B_in = tangent_basis(x)
    B_out = tangent_basis(y / ny)
    return B_out.conj().T @ F.jacobian(x) @ B_in / ny


def _jacobian_determinant(F: LiftedEndomorphism) -> Polynomial:
    """det J as a polynomial, for k = 1."""
    (A, B), (C, D) = [[P.derivative(j) for j in range(2)] for P in F.components]
    AD, BC = A * D, B * C
    terms = list(zip(map(tuple, AD.exps), AD.coeffs)) + [(tuple(e), -c) for e, c in zip(BC.exps, BC.coeffs)]
    return Polynomial(2, terms)


def _log_derivative_k1(F: LiftedEndomorphism, x, N: int) -> np.ndarray:
    """log|f'| in the FS metric along the orbit, exact in log-polar form.

    For k = 1 Euler's relation gives |Df| = |det J| / (d ||F||^2) at unit x.
    """
    det = _jacobian_determinant(F)
    ell, ph = from_complex(np.asarray(x, dtype=complex)[None, :])
    ell = ell - lp_lognorm(ell)[:, None]
    out = np.empty(N)
    for i in range(N):
        dl, _ = lp_poly(det, ell, ph)
        e, p = lp_map(F.components, ell, ph)
        c = lp_lognorm(e)
        out[i] = float(dl[0] - math.log(F.d) - 2 * c[0])
        ell, ph = e - c[:, None], p
    return out


def _orbit(F: LiftedEndomorphism, x: np.ndarray, N: int) -> np.ndarray:
    pts = [x]
    for _ in range(N - 1):
        y = F(pts[-1])
        pts.append(y / np.linalg.norm(y))
    return np.array(pts)


def orbit_inradius_estimate(F: LiftedEndomorphism, x: ProjectivePoint, r: float = 0.1, N: int = 15) -> ContractionProbeReport:
    """Rows n = 0..N of the proxy log r_n and the normalized sequence.

    log_rn_estimate sums log sigma_min of the one-step differentials (floored at
    1e-12, flagged); log_sigma_min_product is log sigma_min(D f^n) from the
    accumulated product (exact for k = 1; for k >= 2 through the renormalized
    product of inverses). normalized = (log r + product column) / d^n.
    """
    if not 0 < r < 0.25:
        raise ValueError("r must lie in (0, 0.25)")
    if not 0 <= N <= 25:
        raise ValueError("N must lie in [0, 25]")
    k, d = F.k, F.d
    xs = x.coords if isinstance(x, ProjectivePoint) else normalize(x)[0].coords
    step_sig, step_flag = np.zeros(N), np.zeros(N, dtype=bool)
    prod = np.zeros(N + 1)
    if N:
        orbit = _orbit(F, xs, N)
        inv_acc = np.eye(k, dtype=complex)
        inv_log = 0.0
        broken = False
        for i, p in enumerate(orbit):
            M = fs_differential(F, p)
            s = np.linalg.svd(M, compute_uv=False)
            smin = float(s[-1])
            step_flag[i] = not smin >= SIGMA_FLOOR
            step_sig[i] = math.log(max(smin, SIGMA_FLOOR)) if np.isfinite(smin) else math.log(SIGMA_FLOOR)
            if k >= 2:
                if not broken and smin > 0 and np.all(np.isfinite(M)):
                    inv_acc = inv_acc @ np.linalg.inv(M)
                    nrm = np.linalg.norm(inv_acc, 2)
                    inv_log += math.log(nrm)
                    inv_acc /= nrm
                    prod[i + 1] = -inv_log
                else:
                    # the product has degenerated; continue with the floor
                    broken = True
                    step_flag[i] = True
                    prod[i + 1] = prod[i] + math.log(SIGMA_FLOOR)
        if k == 1:
            steps = _log_derivative_k1(F, xs, N)
            dead = ~np.isfinite(steps)
            step_flag |= dead
            prod[1:] = np.cumsum(np.where(dead, math.log(SIGMA_FLOOR), steps))
    rep = ContractionProbeReport(x if isinstance(x, ProjectivePoint) else normalize(x)[0], r, d, k)
    log_r = math.log(r)
    proxy = log_r + np.concatenate([[0.0], np.cumsum(step_sig)])
    start_critical = bool(N and step_flag[0])
    flags = np.concatenate([[start_critical], np.logical_or.accumulate(step_flag)]) if N else np.array([False])
    for n in range(N + 1):
        lp = log_r + prod[n]
        rep.rows.append(ContractionRow(n, float(proxy[n]), float(prod[n]), float(lp / float(d) ** n), bool(flags[n])))
    vals = rep.normalized()
    if np.all(np.isfinite(vals)):
        cn = -vals * r ** (2 * k)
        rep.c_fit = float(max(cn.max(), 0.0))
        tail = cn[-5:]
        rep.stable = bool(len(tail) == 5 and abs(tail.mean()) > 0 and (tail.max() - tail.min()) / abs(tail.mean()) < 0.2)
    return rep


# --- volumes -----------------------------------------------------------------------

def fs_density(t: np.ndarray, k: int) -> np.ndarray:
    """Density of the normalized FS volume in an affine chart (Lebesgue on C^k)."""
    return math.factorial(k) / math.pi ** k / (1.0 + np.sum(np.abs(t) ** 2, axis=-1)) ** (k + 1)


def grid_volume(W: np.ndarray, h: float = 0.01, max_cells: int = 2_000_000) -> tuple[float, float, int]:
    """FS volume of the union of grid cells hit by the points W.

    Each point goes to its max-modulus chart, where the chart coordinates lie in
    the unit polydisc; cells are h-cubes in the real coordinates weighted by the
    FS density at the cell center. Returns (volume, h used, occupied cells); h is
    doubled until the occupied set fits in ``max_cells``.
    """
    W = np.asarray(W, dtype=complex)
    k = W.shape[1] - 1
    j = np.argmax(np.abs(W), axis=1)
    T = np.empty((len(W), k), dtype=complex)
    for c in range(k + 1):
        m = j == c
        others = [i for i in range(k + 1) if i != c]
        T[m] = W[m][:, others] / W[m][:, [c]]
    X = np.concatenate([T.real, T.imag], axis=1)
    while True:
        idx = np.floor((X + 1.0) / h).astype(np.int64)
        keys = np.unique(np.column_stack([j, idx]), axis=0)
        if len(keys) <= max_cells:
            break
        h *= 2
    centers = (keys[:, 1:] + 0.5) * h - 1.0
    tc = centers[:, :k] + 1j * centers[:, k:]
    vol = float(np.sum(fs_density(tc, k)) * h ** (2 * k))
    return vol, h, len(keys)


@dataclass
class VolumeProbe:
    vol_source: float
    h: float
    volumes: np.ndarray
    C: float
    feasible: bool
    note: str = ""

    def normalized_log(self, d: int) -> np.ndarray:
        return np.log(self.volumes) / float(d) ** np.arange(len(self.volumes))


def volume_image_probe(F: LiftedEndomorphism, W, vol_Z: float, n: int, h: float = 0.01,
                       fit_upto: int = 2, max_cells: int = 2_000_000) -> VolumeProbe:
    """Grid estimates of vol f^m(Z) for m = 0..n from a sample cloud of Z.

    C is fitted as 2 max_{m <= fit_upto} (-log vol_m) vol_Z / d^m; the flag says
    whether every vol_m >= exp(-C d^m / vol_Z).
    """
    W = np.asarray(W, dtype=complex)
    if F.k > 2:
        raise ValueError("volume probe supports k <= 2")
    if not 0 <= n <= 10:
        raise ValueError("n must lie in [0, 10]")
    if len(W) < 10_000:
        raise ValueError("need at least 10^4 sample points")
    vols, hs = [], []
    P = W / np.linalg.norm(W, axis=1, keepdims=True)
    for m in range(n + 1):
        if m:
            ell, ph = from_complex(P)
            e, p = lp_map(F.components, ell - lp_lognorm(ell)[:, None], ph)
            e = e - lp_lognorm(e)[:, None]
            P = to_complex(e, p)
        v, hu, _ = grid_volume(P, h, max_cells)
        vols.append(v)
        hs.append(hu)
    vols = np.array(vols)
    d = F.d
    m_fit = min(fit_upto, n)
    Cm = [max(-math.log(vols[m]), 0.0) * vol_Z / d ** m for m in range(m_fit + 1)]
    C = 2.0 * max(max(Cm), 1e-12)
    bound = np.exp(-C * float(d) ** np.arange(n + 1) / vol_Z)
    note = "" if all(x == h for x in hs) else f"grid coarsened to h={max(hs)}"
    return VolumeProbe(vol_Z, max(hs), vols, C, bool(np.all(vols >= bound) and np.all(vols > 0)), note)
