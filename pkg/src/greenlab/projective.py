"""Points of P^k, Fubini-Study geometry and seeded samplers."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import Stream

UNDERFLOW = 1e-300


class IndeterminatePointError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ProjectivePoint:
    """Unit representative of a point of P^k; ``gauge`` keeps the discarded log-norm."""

    coords: np.ndarray
    gauge: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=complex).copy()
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        if abs(np.linalg.norm(c) - 1.0) > 1e-14:
            raise ValueError("coords must have unit norm; use normalize()")

    @property
    def k(self) -> int:
        return len(self.coords) - 1

    def __repr__(self):
        inner = ", ".join(f"{x:.6g}" for x in self.coords)
        return f"ProjectivePoint([{inner}])"


def normalize(z) -> tuple[ProjectivePoint, float]:
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1 or len(z) < 2:
        raise ValueError("a projective point needs a vector of length >= 2")
    m = float(np.max(np.abs(z)))
    if not m > UNDERFLOW:
        raise IndeterminatePointError("indeterminate projective point")
    zs = z / m
    n = float(np.linalg.norm(zs))
    coords = zs / n
    # the division can leave |norm - 1| of a few ulps
    coords = coords / np.linalg.norm(coords)
    log_norm = math.log(m) + math.log(n)
    return ProjectivePoint(coords, log_norm), log_norm


def normalize_batch(Z) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise unit representatives and log-norms; zero rows raise."""
    Z = np.asarray(Z, dtype=complex)
    m = np.max(np.abs(Z), axis=-1)
    if np.any(~(m > UNDERFLOW)):
        raise IndeterminatePointError("indeterminate projective point in batch")
    zs = Z / m[..., None]
    n = np.linalg.norm(zs, axis=-1)
    return zs / n[..., None], np.log(m) + np.log(n)


def point(*coords) -> ProjectivePoint:
    return normalize(np.array(coords, dtype=complex))[0]


def _coords(p) -> np.ndarray:
    return p.coords if isinstance(p, ProjectivePoint) else np.asarray(p, dtype=complex)


def fs_distance(p, q) -> float | np.ndarray:
    """Fubini-Study distance arccos|<p, q>| in [0, pi/2] between unit representatives.

    Evaluated as atan2(|p ^ q|, |<p, q>|), which stays accurate for nearby points.
    Accepts points or arrays of unit vectors (broadcast over leading axes).
    """
    a, b = _coords(p), _coords(q)
    a, b = np.broadcast_arrays(a, b)
    inner = np.abs(np.sum(a * np.conj(b), axis=-1))
    n = a.shape[-1]
    wedge2 = np.zeros(a.shape[:-1])
    for i in range(n):
        for j in range(i + 1, n):
            wedge2 = wedge2 + np.abs(a[..., i] * b[..., j] - a[..., j] * b[..., i]) ** 2
    out = np.arctan2(np.sqrt(wedge2), inner)
    return float(out) if out.ndim == 0 else out


def same_point(p, q, tol: float = 1e-7) -> bool:
    return bool(fs_distance(p, q) <= tol)


def sample_fs_uniform(count: int, k: int, seed: int, stream: int = 0) -> np.ndarray:
    """``count`` unit vectors in C^{k+1} whose classes are Fubini-Study uniform on P^k.

    Normalized standard complex Gaussians are unitarily invariant, so they
    induce the normalized volume omega^k.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    g = Stream(seed, stream).complex_normal((count, k + 1))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_on_subspace(zero_set, count: int, k: int, seed: int, stream: int = 0) -> np.ndarray:
    """FS-uniform samples of the coordinate subspace {z_i = 0 for i in zero_set}."""
    W = sample_fs_uniform(count, k, seed, stream)
    zs = sorted(zero_set)
    if len(zs) > k:
        raise ValueError("zero set leaves no projective point")
    W[:, zs] = 0
    return W / np.linalg.norm(W, axis=1, keepdims=True)


def tangent_basis(center) -> np.ndarray:
    """(k+1) x k matrix whose columns are an orthonormal basis of center^perp."""
    c = _coords(center)
    n = len(c)
    M = np.eye(n, dtype=complex)
    j = int(np.argmax(np.abs(c)))
    M[:, j] = c
    M[:, [0, j]] = M[:, [j, 0]]
    Q, _ = np.linalg.qr(M)
    return Q[:, 1:]


def ball_points(center, v) -> np.ndarray:
    """Unit vectors (center + B v)/|.|; the FS distance to center is atan|v|."""
    c = _coords(center)
    B = tangent_basis(c)
    Z = c[None, :] + np.asarray(v) @ B.T
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


def sample_fs_ball(center, r: float, count: int, seed: int, stream: int = 0) -> tuple[np.ndarray, float]:
    """FS-uniform samples of the ball B_center(r) by rejection from a Gaussian in the chart at center.

    In the orthonormal chart v -> (center + B v)/|.| the FS volume has density
    proportional to (1 + |v|^2)^-(k+1) and the ball is |v| <= tan r. Gaussian
    proposals are accepted with probability (target / proposal) / max. Returns
    (samples, rejection_rate).
    """
    if not 0 < r < math.pi / 2:
        raise ValueError("radius must lie in (0, pi/2)")
    c = _coords(center)
    k = len(c) - 1
    rho = math.tan(r)
    sigma = rho / math.sqrt(k)

    def log_ratio(s2):
        return s2 / sigma**2 - (k + 1) * np.log1p(s2)

    log_max = max(log_ratio(0.0), log_ratio(rho**2))
    rs = Stream(seed, stream)
    kept = []
    drawn = 0
    have = 0
    while have < count:
        batch = max(64, 4 * (count - have))
        v = sigma * rs.complex_normal((batch, k))
        u = rs.uniform(batch)
        drawn += batch
        s2 = np.sum(np.abs(v) ** 2, axis=1)
        ok = (s2 <= rho**2) & (np.log(u) <= log_ratio(s2) - log_max)
        kept.append(v[ok])
        have += int(ok.sum())
    v = np.concatenate(kept)[:count]
    return ball_points(c, v), 1.0 - have / drawn


def chart_coordinates(W, j: int) -> np.ndarray:
    """Affine chart z_j = 1: the other coordinates divided by z_j."""
    W = np.asarray(W, dtype=complex)
    others = [i for i in range(W.shape[-1]) if i != j]
    return W[..., others] / W[..., j:j + 1]


def write_points_csv(path, W) -> None:
    W = np.asarray(W, dtype=complex)
    n = W.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{p}_{i}" for i in range(n) for p in ("re", "im")])
        for row in W:
            w.writerow([repr(float(x)) for z in row for x in (z.real, z.imag)])


def read_points_csv(path) -> np.ndarray:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    return data[:, 0::2] + 1j * data[:, 1::2]
