"""Escape-rate Green functions.

For a lift F of degree d the Green function is G(z) = lim d^-n log||F^n(z)||.
Writing w_j for the normalized iterates and c_j = log||F(w_j)||,

    G(z) = log||z|| + sum_j d^-(j+1) c_j,

and |c_j| <= c_bound (the sup of |log||F|| on the unit sphere) gives the tail
bound c_bound d^-n / (d - 1) after n terms. Iterates are carried in log-polar
form so that coordinates decaying like exp(-d^n) are not flushed to zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .extended import from_complex, lp_lognorm, lp_map, to_complex
from .parallel import concat_map
from .poly import LiftedEndomorphism, RegularAutomorphism
from .projective import IndeterminatePointError, ProjectivePoint, sample_fs_uniform

N_MAX = 200
C_BOUND_SAMPLES = 10_000
C_BOUND_SAFETY = 1.1
_C_BOUND_SEED = 0xC0B0


@lru_cache(maxsize=128)
def estimate_c_bound(F: LiftedEndomorphism) -> float:
    """1.1 * max |log||F(w)||| over 10^4 seeded unit-sphere samples."""
    W = sample_fs_uniform(C_BOUND_SAMPLES, F.k, _C_BOUND_SEED)
    vals = np.abs(np.log(np.linalg.norm(F(W), axis=1)))
    return max(C_BOUND_SAFETY * float(vals.max()), 1e-12)


def tail_bound(c_bound: float, d: int, n: int) -> float:
    return c_bound * float(d) ** (-n) / (d - 1)


def steps_for_tol(c_bound: float, d: int, tol: float) -> tuple[int, bool]:
    """Smallest n with tail_bound <= tol, capped at N_MAX; second item says whether tol was met."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = max(0, math.ceil(math.log(c_bound / ((d - 1) * tol)) / math.log(d)))
    while n > 0 and tail_bound(c_bound, d, n - 1) <= tol:
        n -= 1
    while tail_bound(c_bound, d, n) > tol and n < N_MAX:
        n += 1
    return min(n, N_MAX), tail_bound(c_bound, d, min(n, N_MAX)) <= tol


@dataclass(frozen=True)
class GreenValue:
    value: float
    n_used: int
    error_bound: float
    converged: bool = True


class OrbitAccumulator:
    """Renormalized orbit of a batch of lifted points (rows of ``z``).

    ``partial`` holds G_n(z) = log||z|| + sum_{j<n} d^-(j+1) c_j; ``ell``/``phase``
    hold the log-polar coordinates of the unit iterate w_n.
    """

    def __init__(self, F: LiftedEndomorphism, z, c_bound: float | None = None):
        z = np.asarray(z, dtype=complex)
        if z.shape[-1] != F.k + 1:
            raise ValueError(f"expected vectors of length {F.k + 1}")
        self.F = F
        self.d = F.d
        self.c_bound = estimate_c_bound(F) if c_bound is None else c_bound
        ell, self.phase = from_complex(z)
        a0 = lp_lognorm(ell)
        if np.any(~np.isfinite(a0)):
            raise IndeterminatePointError("z = 0 has no Green value")
        self.ell = ell - a0[..., None]
        self.partial = a0
        self.n = 0
        self.last_c = np.zeros_like(a0)

    def step(self) -> None:
        e, p = lp_map(self.F.components, self.ell, self.phase)
        c = lp_lognorm(e)
        self.ell = e - c[..., None]
        self.phase = p
        self.partial = self.partial + c * float(self.d) ** (-(self.n + 1))
        self.last_c = c
        self.n += 1

    def run(self, n: int) -> None:
        while self.n < n:
            self.step()

    @property
    def error_bound(self) -> float:
        return tail_bound(self.c_bound, self.d, self.n)

    @property
    def w(self) -> np.ndarray:
        return to_complex(self.ell, self.phase)


def green_lift(F: LiftedEndomorphism, z, tol: float = 1e-10) -> GreenValue:
    """G(z) with a certified (modulo the sphere-sup estimate) error bound."""
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1:
        raise ValueError("green_lift takes a single vector; use green_lift_batch")
    acc = OrbitAccumulator(F, z)
    n, ok = steps_for_tol(acc.c_bound, F.d, tol)
    acc.run(n)
    return GreenValue(float(acc.partial), n, acc.error_bound, ok)


def green_lift_batch(F: LiftedEndomorphism, Z, tol: float = 1e-10, workers: int = 1) -> tuple[np.ndarray, GreenValue]:
    """Vectorized G over rows of Z. Every row uses the same step count, so the
    returned GreenValue (value = nan) carries the shared n_used and error_bound."""
    Z = np.asarray(Z, dtype=complex)
    c = estimate_c_bound(F)
    n, ok = steps_for_tol(c, F.d, tol)

    def chunk(a, b):
        acc = OrbitAccumulator(F, Z[a:b], c)
        acc.run(n)
        return acc.partial

    vals = concat_map(chunk, len(Z), workers)
    return vals, GreenValue(float("nan"), n, tail_bound(c, F.d, n), ok)


def green_potential(F: LiftedEndomorphism, p: ProjectivePoint, tol: float = 1e-10) -> float:
    """g(p) = G at the unit representative; the potential of T modulo omega."""
    coords = p.coords if isinstance(p, ProjectivePoint) else np.asarray(p, dtype=complex)
    return green_lift(F, coords, tol).value


# --- regular automorphisms ----------------------------------------------------

@dataclass(frozen=True)
class HenonGreenValue:
    value: float
    escaped: bool
    n_escape: int
    error_bound: float

    @property
    def flag(self) -> str:
        return "escaped" if self.escaped else "bounded-orbit up to N"


_ESC_MAX = 80


def _escape_tail(A: RegularAutomorphism, L: np.ndarray, c_last: np.ndarray) -> np.ndarray:
    """Bound on |c_j| for the remaining escape steps (nonincreasing along V+)."""
    if A.family == "henon":
        a, c = abs(A.params["a"]), abs(A.params["c"])
        eta = a * np.exp(-L) + c * np.exp(-2 * L)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(eta < 0.5, -np.log1p(-np.minimum(eta, 0.5)), 1.0)
    return 2.0 * np.abs(c_last)


def henon_green_plus_batch(A: RegularAutomorphism, Z, N: int = 50, workers: int = 1):
    """G+ for rows of Z: returns (values, escaped mask, escape step, error bounds)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    Z = np.asarray(Z, dtype=complex)

    def chunk(a, b):
        return np.column_stack(_henon_chunk(A, Z[a:b], N))

    out = concat_map(chunk, len(Z), workers) if len(Z) else np.empty((0, 4))
    out = out.reshape(-1, 4)
    return out[:, 0].real, out[:, 1].real.astype(bool), out[:, 2].real.astype(int), out[:, 3].real


def _henon_chunk(A: RegularAutomorphism, Z: np.ndarray, N: int):
    n = len(Z)
    z = Z.copy()
    esc = A.escaped(z)
    n_esc = np.where(esc, 0, -1)
    for step in range(1, N + 1):
        todo = ~esc
        if not todo.any():
            break
        z[todo] = A(z[todo])
        now = todo & A.escaped(z)
        n_esc[now] = step
        esc |= now
    value = np.zeros(n)
    err = np.zeros(n)
    if esc.any():
        # escape phase in log-polar form: |f^j z| grows like exp(d_+^j G+)
        D = A.d_plus
        ell, ph = from_complex(z[esc])
        L = ell.max(axis=1)
        partial = L.copy()
        bound = _escape_tail(A, L, np.zeros_like(L))
        j = 0
        while j < _ESC_MAX and not np.all(bound * 2.0 ** (-j) < 1e-17 * np.maximum(partial, 1.0)):
            ell, ph = lp_map(A.forward, ell, ph)
            L_new = ell.max(axis=1)
            c = L_new - D * L
            partial = partial + c * float(D) ** (-(j + 1))
            L = L_new
            j += 1
            bound = _escape_tail(A, L, c)
        scale = float(D) ** (-n_esc[esc].astype(float))
        value[esc] = scale * partial
        err[esc] = scale * bound * float(D) ** (-j)
    return value, esc.astype(float), n_esc.astype(float), err


def henon_green_plus(A: RegularAutomorphism, z, N: int = 50) -> HenonGreenValue:
    """G+(z) = lim d_+^-n log+ ||f^n z||; 0 with a bounded-orbit flag if no escape within N steps."""
    v, e, ne, err = henon_green_plus_batch(A, np.asarray(z, dtype=complex)[None, :], N)
    return HenonGreenValue(float(v[0]), bool(e[0]), int(ne[0]), float(err[0]))


def green_grid(F: LiftedEndomorphism, chart: int = 0, extent=(-2.0, 2.0, -2.0, 2.0), resolution: int = 101,
               slice_values=None, tol: float = 1e-10, workers: int = 1):
    """g on a 2-D slice of the affine chart z_chart = 1.

    The first remaining affine coordinate runs over the grid x + iy; the others
    are fixed at ``slice_values`` (default 0). Returns (xs, ys, g, error_bound).
    """
    k = F.k
    if not 0 <= chart <= k:
        raise ValueError("chart index out of range")
    others = [i for i in range(k + 1) if i != chart]
    fixed = list(slice_values) if slice_values is not None else [0.0] * (k - 1)
    if len(fixed) != k - 1:
        raise ValueError(f"need {k - 1} slice values")
    x0, x1, y0, y1 = extent
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    X, Y = np.meshgrid(xs, ys)
    Z = np.zeros((X.size, k + 1), dtype=complex)
    Z[:, chart] = 1.0
    Z[:, others[0]] = (X + 1j * Y).ravel()
    for i, v in zip(others[1:], fixed):
        Z[:, i] = complex(v)
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    g, gv = green_lift_batch(F, Z, tol, workers)
    return xs, ys, g.reshape(X.shape), gv.error_bound
