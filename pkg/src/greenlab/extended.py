"""Log-polar (extended-range) arithmetic for vectors whose entries under- or overflow doubles.

A complex number is carried as ``(ell, phase)`` with ``z = exp(ell + i*phase)``;
zero is ``ell = -inf``. Polynomials are evaluated term by term and combined with
a phase-aware log-sum-exp, so orbits converging super-exponentially to a
coordinate hyperplane keep their small coordinates.
"""
from __future__ import annotations

import numpy as np

from .poly import Polynomial


def from_complex(z) -> tuple[np.ndarray, np.ndarray]:
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(z)), np.angle(z)


def to_complex(ell, ph) -> np.ndarray:
    return np.exp(ell) * np.exp(1j * ph)


def _combine(lt: list[np.ndarray], tt: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    M = lt[0]
    for x in lt[1:]:
        M = np.maximum(M, x)
    finite = np.isfinite(M)
    Ms = np.where(finite, M, 0.0)
    S = np.zeros(M.shape, dtype=complex)
    for l, t in zip(lt, tt):
        S = S + np.exp(l - Ms) * np.exp(1j * t)
    with np.errstate(divide="ignore"):
        ell = np.where(finite, Ms + np.log(np.abs(S)), -np.inf)
    return ell, np.angle(S)


def lp_sum(terms) -> tuple[np.ndarray, np.ndarray]:
    """Sum of log-polar numbers given as a sequence of (ell, phase)."""
    return _combine([np.asarray(l, float) for l, _ in terms], [np.asarray(t, float) for _, t in terms])


def lp_poly(P: Polynomial, ell, ph) -> tuple[np.ndarray, np.ndarray]:
    ell = np.asarray(ell, float)
    ph = np.asarray(ph, float)
    shape = ell.shape[:-1]
    if P.is_zero():
        return np.full(shape, -np.inf), np.zeros(shape)
    lt, tt = [], []
    for e, c in zip(P.exps, P.coeffs):
        l = np.full(shape, np.log(abs(c)))
        t = np.full(shape, np.angle(c))
        for i in np.flatnonzero(e):
            l = l + e[i] * ell[..., i]
            t = t + e[i] * ph[..., i]
        lt.append(l)
        tt.append(t)
    return _combine(lt, tt)


def lp_map(components, ell, ph) -> tuple[np.ndarray, np.ndarray]:
    out = [lp_poly(P, ell, ph) for P in components]
    return np.stack([o[0] for o in out], axis=-1), np.stack([o[1] for o in out], axis=-1)


def lp_lognorm(ell) -> np.ndarray:
    """log of the Euclidean norm of a log-polar vector (last axis)."""
    ell = np.asarray(ell, float)
    M = ell.max(axis=-1)
    finite = np.isfinite(M)
    Ms = np.where(finite, M, 0.0)
    s = np.sum(np.exp(2.0 * (ell - Ms[..., None])), axis=-1)
    with np.errstate(divide="ignore"):
        return np.where(finite, Ms + 0.5 * np.log(s), -np.inf)
