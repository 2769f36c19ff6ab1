"""Totally invariant coordinate subspaces: invariance checks, restricted degree, enumeration."""
from __future__ import annotations

import csv
import itertools
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .equidist import SolverError, default_spec, preimages
from .poly import LiftedEndomorphism
from .projective import fs_distance, sample_on_subspace

SAMPLED_TOL = 1e-8
DEFICIENCY = 1e-5


@dataclass(frozen=True)
class CoordinateSubspace:
    """{z_i = 0 for i in zero_set} inside P^k."""

    zero_set: frozenset
    k: int

    def __post_init__(self):
        zs = frozenset(int(i) for i in self.zero_set)
        object.__setattr__(self, "zero_set", zs)
        if not len(zs) <= self.k or any(not 0 <= i <= self.k for i in zs):
            raise ValueError(f"invalid zero set {sorted(zs)} for k = {self.k}")

    @property
    def dimension(self) -> int:
        return self.k - len(self.zero_set)

    def contains(self, other: "CoordinateSubspace") -> bool:
        return other.zero_set >= self.zero_set

    def distance(self, W) -> np.ndarray:
        """FS distance from unit vectors to the subspace."""
        W = np.atleast_2d(W)
        idx = sorted(self.zero_set)
        if not idx:
            return np.zeros(len(W))
        return np.arcsin(np.minimum(np.linalg.norm(W[:, idx], axis=1), 1.0))

    @property
    def label(self) -> str:
        if not self.zero_set:
            return "P^k"
        return ",".join(f"z{i}=0" for i in sorted(self.zero_set))


def subspace(k: int, *zeros) -> CoordinateSubspace:
    return CoordinateSubspace(frozenset(zeros), k)


@dataclass
class InvarianceReport:
    subspace: CoordinateSubspace
    forward_invariant: bool
    backward_invariant: bool | None
    method: str
    forward_residual: float = 0.0
    backward_residual: float | None = 0.0
    samples: int = 0

    @property
    def totally_invariant(self) -> bool:
        return bool(self.forward_invariant and self.backward_invariant)


def _supports(F: LiftedEndomorphism) -> list[frozenset]:
    return [frozenset(np.flatnonzero(P.exps[0]).tolist()) for P in F.components]


def _symbolic(F: LiftedEndomorphism, sub: CoordinateSubspace) -> InvarianceReport:
    Z = sub.zero_set
    supp = _supports(F)
    # F_i vanishes identically on sub iff its monomial involves a variable of Z
    vanish = frozenset(i for i, s in enumerate(supp) if s & Z)
    forward = vanish == Z
    # f^-1(sub) = {F_i = 0, i in Z}: a union of coordinate hyperplanes per i; it equals sub
    # iff every such monomial involves exactly one variable and those variables make up Z
    hit = [supp[i] for i in Z]
    backward = all(len(s) == 1 for s in hit) and frozenset().union(*hit) == Z if hit else True
    return InvarianceReport(sub, forward, backward, "symbolic")


def _sampled(F: LiftedEndomorphism, sub: CoordinateSubspace, sample_count: int, seed: int) -> InvarianceReport:
    W = sample_on_subspace(sub.zero_set, sample_count, F.k, seed, stream=0x1A5)
    FW = F(W)
    FW = FW / np.linalg.norm(FW, axis=1, keepdims=True)
    fres = float(np.max(sub.distance(FW)))
    bres = None
    try:
        spec = default_spec(F)
        worst = 0.0
        for w in W[: min(sample_count, 50)]:
            pts, _ = preimages(F, w, spec)
            worst = max(worst, float(np.max(sub.distance(pts))))
        bres = worst
    except SolverError:
        pass
    return InvarianceReport(sub, fres < SAMPLED_TOL, None if bres is None else bres < SAMPLED_TOL, "sampled",
                            fres, bres, sample_count)


def check_total_invariance(F: LiftedEndomorphism, sub: CoordinateSubspace, sample_count: int = 200, seed: int = 0,
                           method: str | None = None) -> InvarianceReport:
    """f(sub) = sub and f^-1(sub) = sub; exact for monomial maps, sampled otherwise.

    The sampled path can refute invariance but only certifies it up to the
    samples; a missing preimage solver leaves the backward field as None.
    """
    if sub.k != F.k:
        raise ValueError("subspace and map live in different dimensions")
    method = method or ("symbolic" if F.is_monomial() else "sampled")
    if method == "symbolic":
        if not F.is_monomial():
            raise ValueError("symbolic invariance needs single-monomial components")
        return _symbolic(F, sub)
    return _sampled(F, sub, sample_count, seed)


@dataclass
class DegreeStatistics:
    subspace: CoordinateSubspace
    counts: np.ndarray
    expected: int
    resampled: int
    histogram: dict = field(default_factory=dict)

    @property
    def all_expected(self) -> bool:
        return bool(np.all(self.counts == self.expected))


def _distinct_on(pts: np.ndarray, sub: CoordinateSubspace, tol: float = 1e-8):
    on = pts[sub.distance(pts) <= tol]
    if len(on) < 2:
        return len(on), np.inf
    D = fs_distance(on[:, None, :], on[None, :, :])
    D = D[np.triu_indices(len(on), 1)]
    return len(on), float(D.min())


def restricted_topological_degree(F: LiftedEndomorphism, sub: CoordinateSubspace, trial_points: int = 100,
                                  seed: int = 0, spec=None, max_resample: int = 10) -> DegreeStatistics:
    """Number of distinct preimages on sub of generic points of sub (expected d^dim).

    Preimages are solved in the ambient space and the ones lying on sub are
    counted. A trial whose preimages on sub come closer than 1e-5 is treated as
    non-generic and redrawn; redraws are counted.
    """
    spec = spec or default_spec(F)
    counts = []
    redraws = 0
    stream = 0x0DE9
    W = sample_on_subspace(sub.zero_set, trial_points, F.k, seed, stream)
    for w in W:
        for attempt in range(max_resample + 1):
            pts, _ = preimages(F, w, spec)
            n, sep = _distinct_on(pts, sub)
            if sep >= DEFICIENCY:
                break
            redraws += 1
            stream += 1
            w = sample_on_subspace(sub.zero_set, 1, F.k, seed, stream)[0]
        counts.append(n)
    counts = np.array(counts)
    return DegreeStatistics(sub, counts, F.d ** sub.dimension, redraws, dict(Counter(counts.tolist())))


def all_proper_subspaces(k: int, max_codim: int | None = None):
    top = k if max_codim is None else min(k, max_codim)
    for size in range(1, top + 1):
        for zs in itertools.combinations(range(k + 1), size):
            yield CoordinateSubspace(frozenset(zs), k)


def enumerate_invariant_coordinate_subspaces(F: LiftedEndomorphism, max_codim: int | None = None,
                                             sample_count: int = 200, seed: int = 0):
    """Reports for every proper coordinate subspace, with a minimality flag.

    Returns a list of (report, minimal). minimal means totally invariant and
    containing no smaller totally invariant coordinate subspace. Monomial maps are
    checked exactly; other maps through the sampled path.
    """
    reports = [check_total_invariance(F, s, sample_count, seed) for s in all_proper_subspaces(F.k, max_codim)]
    inv = [r.subspace for r in reports if r.totally_invariant]
    out = []
    for r in reports:
        s = r.subspace
        minimal = r.totally_invariant and not any(t != s and s.contains(t) for t in inv)
        out.append((r, minimal))
    return out


def exceptional_candidate(F: LiftedEndomorphism, max_codim: int | None = None) -> list[CoordinateSubspace]:
    return [r.subspace for r, m in enumerate_invariant_coordinate_subspaces(F, max_codim) if m]


def write_invariance_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["zero_set", "dimension", "forward", "backward", "method", "forward_residual",
                    "backward_residual", "minimal"])
        for r, minimal in rows:
            w.writerow([" ".join(str(i) for i in sorted(r.subspace.zero_set)), r.subspace.dimension,
                        int(r.forward_invariant), "untested" if r.backward_invariant is None else int(r.backward_invariant),
                        r.method, repr(float(r.forward_residual)),
                        "" if r.backward_residual is None else repr(float(r.backward_residual)), int(minimal)])
