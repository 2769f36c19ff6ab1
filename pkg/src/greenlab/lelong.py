"""Lelong numbers of potentials from the slope of sup over balls against log r."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .projective import ProjectivePoint, fs_distance, normalize, sample_fs_ball
from .rng import Stream

Potential = Callable[[np.ndarray], np.ndarray]


@dataclass
class LelongEstimate:
    center: ProjectivePoint
    radii: np.ndarray
    sups: np.ndarray
    slope: float
    r_squared: float
    samples_per_radius: int
    intercept: float = 0.0
    infinite: bool = False
    rejection_rates: list = field(default_factory=list)

    @property
    def log_r(self) -> np.ndarray:
        return np.log(self.radii)

    def second_differences(self) -> np.ndarray:
        """Discrete second differences of sup against log r (radii are dyadic, so equally spaced)."""
        s = self.sups[::-1]
        return s[2:] - 2 * s[1:-1] + s[:-2]

    def convexity_ok(self, noise: float = 0.05) -> bool:
        return bool(np.all(self.second_differences() >= -noise))

    def rows(self):
        return list(zip(self.log_r.tolist(), self.sups.tolist()))


def _fit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


def lelong_estimate(potential: Potential, center: ProjectivePoint, r_max: float = 0.1, levels: int = 8,
                    samples_per_radius: int = 2000, seed: int = 0) -> LelongEstimate:
    """Estimate nu(potential, center) from dyadic radii r_max * 2^-j.

    Each sup is a max over FS-ball samples; 10% of the samples are spent within
    r/10 of the best point found so far. Sups are made monotone in r using the
    nesting of the balls, and the slope is fitted on the smaller half of radii.
    """
    if not 0 < r_max <= 0.25:
        raise ValueError("r_max must lie in (0, 0.25]")
    if levels < 4:
        raise ValueError("levels must be >= 4")
    if samples_per_radius < 500:
        raise ValueError("samples_per_radius must be >= 500")
    c = center.coords
    radii = r_max * 0.5 ** np.arange(levels)
    n_refine = samples_per_radius // 10
    n_main = samples_per_radius - n_refine
    sups = np.empty(levels)
    rej = []
    for j, r in enumerate(radii):
        pts, rr = sample_fs_ball(c, r, n_main, seed, stream=2 * j)
        rej.append(rr)
        vals = np.asarray(potential(pts), dtype=float)
        best = int(np.argmax(vals))
        if np.isfinite(vals[best]):
            rp = min(r / 10, 0.5 * r)
            more, _ = sample_fs_ball(pts[best], rp, n_refine, seed, stream=2 * j + 1)
            more = more[np.asarray(fs_distance(more, c)) <= r]
            if len(more):
                vals = np.concatenate([vals, np.asarray(potential(more), dtype=float)])
        sups[j] = np.max(vals)
    # samples of a smaller ball also lie in every larger one
    sups = np.maximum.accumulate(sups[::-1])[::-1]
    if not np.all(np.isfinite(sups)):
        return LelongEstimate(center, radii, sups, math.inf, float("nan"), samples_per_radius,
                              float("nan"), True, rej)
    m = math.ceil(levels / 2)
    x = np.log(radii[-m:])
    slope, intercept, r2 = _fit(x, sups[-m:])
    return LelongEstimate(center, radii, sups, slope, r2, samples_per_radius, intercept, False, rej)


@dataclass
class LelongComparison:
    nu_downstairs: float
    nu_upstairs: float
    local_degree: int
    k: int
    n: int
    d: int
    inconclusive: bool
    sandwich_holds: bool
    image: ProjectivePoint

    @property
    def nu_upstairs_normalized(self) -> float:
        """Lelong number of d^-n u o f^n."""
        return self.nu_upstairs / self.d ** self.n


def local_degree(F, center: ProjectivePoint, n: int, seed: int = 0, spec=None,
                 probe: float = 1e-30, radius: float = 0.05) -> int:
    """Multiplicity-weighted count of f^n-preimages near ``center`` of a generic point next to f^n(center)."""
    from .equidist import iterate_preimages, default_spec

    spec = spec or default_spec(F)
    img = iterate_point(F, center.coords, n)
    v = Stream(seed, 0x10C).complex_normal(F.k)
    v = probe * v / np.linalg.norm(v)
    from .projective import ball_points
    q = ball_points(img, v[None, :])[0]
    pts, mult = iterate_preimages(F, q, n, spec)
    near = np.asarray(fs_distance(pts, center.coords)) <= radius
    return int(mult[near].sum())


def iterate_point(F, z, n: int) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    for _ in range(n):
        z = F(z)
        z = z / np.linalg.norm(z)
    return z


def lelong_pullback_comparison(H, F, center: ProjectivePoint, n: int = 1, r_max: float = 0.1, levels: int = 8,
                               samples_per_radius: int = 2000, seed: int = 0, tol: float = 1e-10,
                               noise: float = 0.1) -> LelongComparison:
    """Compare nu(u o f^n, center) with nu(u, f^n(center)) through the local degree delta:
    delta^-k nu <= nu' <= delta nu, checked up to the estimator noise."""
    from .pullback import potential_function

    img, _ = normalize(iterate_point(F, center.coords, n))
    down = lelong_estimate(potential_function(H, F, 0, tol), img, r_max, levels, samples_per_radius, seed)
    up = lelong_estimate(potential_function(H, F, n, tol, unnormalized=True), center, r_max, levels,
                         samples_per_radius, seed + 1)
    delta = local_degree(F, center, n, seed)
    if down.infinite or up.infinite:
        inconclusive = True
    else:
        # a flat sup (nu = 0) has a meaningless r^2
        inconclusive = any(e.r_squared < 0.9 and abs(e.slope) > 0.05 for e in (down, up))
    nu, nu2 = down.slope, up.slope
    holds = bool(nu2 >= delta ** (-F.k) * nu - noise and nu2 <= delta * nu + noise)
    return LelongComparison(nu, nu2, delta, F.k, n, F.d, inconclusive, holds, img)
