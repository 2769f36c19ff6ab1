"""Sparse polynomials, lifted endomorphisms of P^k and regular automorphisms of C^k."""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .rng import Stream


class DegenerateMapError(ValueError):
    """A map failed its nondegeneracy check (F^{-1}(0) != {0} numerically)."""


@dataclass(frozen=True)
class Monomial:
    exponents: tuple[int, ...]
    coefficient: complex

    def __post_init__(self):
        if any(e < 0 for e in self.exponents):
            raise ValueError(f"negative exponent in {self.exponents}")
        c = complex(self.coefficient)
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise ValueError(f"non-finite coefficient {c}")


def _grlex_key(e: tuple[int, ...]):
    # descending graded lex: higher total degree first, then lex on exponents
    return (-sum(e), tuple(-x for x in e))


class Polynomial:
    """Sparse polynomial in ``nvars`` complex variables, stored in canonical form.

    Terms are merged, zero coefficients dropped, and sorted in descending graded
    lexicographic order; evaluation sums in that order.
    """

    def __init__(self, nvars: int, terms: Iterable[tuple[Sequence[int], complex]] | dict):
        if nvars < 1:
            raise ValueError("nvars must be positive")
        items = terms.items() if isinstance(terms, dict) else terms
        merged: dict[tuple[int, ...], complex] = {}
        for e, c in items:
            e = tuple(int(x) for x in e)
            if len(e) != nvars:
                raise ValueError(f"exponent {e} has length {len(e)}, expected {nvars}")
            Monomial(e, c)  # validates
            merged[e] = merged.get(e, 0j) + complex(c)
        keys = sorted((e for e, c in merged.items() if c != 0), key=_grlex_key)
        self.nvars = nvars
        self.exps = np.array(keys, dtype=np.int64).reshape(len(keys), nvars)
        self.coeffs = np.array([merged[e] for e in keys], dtype=complex)
        self.exps.setflags(write=False)
        self.coeffs.setflags(write=False)

    @property
    def terms(self) -> list[Monomial]:
        return [Monomial(tuple(int(x) for x in e), complex(c)) for e, c in zip(self.exps, self.coeffs)]

    @property
    def total_degrees(self) -> np.ndarray:
        return self.exps.sum(axis=1)

    @property
    def max_degree(self) -> int:
        return int(self.total_degrees.max()) if len(self.coeffs) else 0

    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    def is_homogeneous(self) -> bool:
        return len(set(self.total_degrees.tolist())) <= 1

    def __call__(self, z) -> np.ndarray | complex:
        z = np.asarray(z, dtype=complex)
        if z.shape[-1:] != (self.nvars,):
            raise ValueError(f"expected last axis of length {self.nvars}, got shape {z.shape}")
        acc = np.zeros(z.shape[:-1], dtype=complex)
        for e, c in zip(self.exps, self.coeffs):
            t = np.full(z.shape[:-1], c, dtype=complex)
            for i in np.flatnonzero(e):
                t = t * z[..., i] ** int(e[i])
            acc = acc + t
        return complex(acc) if acc.ndim == 0 else acc

    def derivative(self, j: int) -> "Polynomial":
        terms = []
        for e, c in zip(self.exps, self.coeffs):
            if e[j] > 0:
                e2 = list(e)
                e2[j] -= 1
                terms.append((e2, c * int(e[j])))
        return _same_kind(self, terms, None if self.is_zero() else self.max_degree - 1)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return (self.nvars == other.nvars and np.array_equal(self.exps, other.exps)
                and np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash((self.nvars, self.exps.tobytes(), self.coeffs.tobytes()))

    def __repr__(self):
        return f"{type(self).__name__}({format_polynomial(self)!r})"

    def __str__(self):
        return format_polynomial(self)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        if self.nvars != other.nvars:
            raise ValueError("variable count mismatch")
        prod: dict[tuple[int, ...], complex] = {}
        for e1, c1 in zip(self.exps, self.coeffs):
            for e2, c2 in zip(other.exps, other.coeffs):
                e = tuple(int(a + b) for a, b in zip(e1, e2))
                prod[e] = prod.get(e, 0j) + c1 * c2
        deg = None
        if isinstance(self, HomogeneousPolynomial) and isinstance(other, HomogeneousPolynomial):
            deg = self.degree + other.degree
        return _same_kind(self, prod, deg) if deg is not None else Polynomial(self.nvars, prod)


class HomogeneousPolynomial(Polynomial):
    """Polynomial whose terms all have total degree ``degree``."""

    def __init__(self, nvars: int, terms, degree: int | None = None):
        super().__init__(nvars, terms)
        degs = set(self.total_degrees.tolist())
        if degree is None:
            if not degs:
                raise ValueError("degree must be given for the zero polynomial")
            degree = degs.pop() if len(degs) == 1 else -1
        if degree < 0 or any(x != degree for x in degs):
            raise ValueError(f"terms of degrees {sorted(degs)} are not homogeneous of degree {degree}")
        self.degree = int(degree)

    @property
    def k_plus_1(self) -> int:
        return self.nvars


def _same_kind(p: Polynomial, terms, degree):
    if isinstance(p, HomogeneousPolynomial) and degree is not None and degree >= 0:
        return HomogeneousPolynomial(p.nvars, terms, degree)
    return Polynomial(p.nvars, terms)


def eval_poly(P: Polynomial, z) -> complex | np.ndarray:
    return P(z)


# --- text format -----------------------------------------------------------

_TERM = re.compile(
    r"\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\)((?:\s*\*\s*z\d+(?:\s*\^\s*\d+)?)*)"
)
_FACTOR = re.compile(r"z(\d+)(?:\s*\^\s*(\d+))?")


def format_polynomial(P: Polynomial) -> str:
    """``(re,im)*z0^e0*z1^e1*...`` terms joined by `` + ``; floats use repr so parsing is exact."""
    if P.is_zero():
        return "(0.0,0.0)" + "".join(f"*z{i}^0" for i in range(P.nvars))
    out = []
    for e, c in zip(P.exps, P.coeffs):
        vars_ = "".join(f"*z{i}^{int(x)}" for i, x in enumerate(e))
        out.append(f"({float(c.real)!r},{float(c.imag)!r}){vars_}")
    return " + ".join(out)


def parse_polynomial(text: str, nvars: int | None = None, homogeneous: bool | None = None) -> Polynomial:
    """Inverse of :func:`format_polynomial`.

    Variables absent from a term have exponent 0, and ``z3`` means ``z3^1``.
    """
    text = text.strip()
    pos = 0
    raw = []
    for m in _TERM.finditer(text):
        gap = text[pos:m.start()].strip()
        if gap not in ("", "+") or (raw and gap != "+"):
            raise ValueError(f"cannot parse polynomial near {text[pos:m.start() + 10]!r}")
        pos = m.end()
        c = complex(float(m.group(1)), float(m.group(2)))
        exps: dict[int, int] = {}
        for f in _FACTOR.finditer(m.group(3)):
            i = int(f.group(1))
            exps[i] = exps.get(i, 0) + (int(f.group(2)) if f.group(2) is not None else 1)
        raw.append((exps, c))
    if text[pos:].strip() or not raw:
        raise ValueError(f"cannot parse polynomial {text!r}")
    n = max((max(e) + 1 for e, _ in raw if e), default=1)
    if nvars is None:
        nvars = n
    elif n > nvars:
        raise ValueError(f"polynomial uses z{n - 1} but only {nvars} variables allowed")
    terms = [([e.get(i, 0) for i in range(nvars)], c) for e, c in raw]
    degs = {sum(e.values()) for e, _ in raw}
    if homogeneous is None:
        homogeneous = len(degs) == 1
    if homogeneous:
        return HomogeneousPolynomial(nvars, terms, degs.pop() if len(degs) == 1 else -1)
    return Polynomial(nvars, terms)


# --- lifted endomorphisms ---------------------------------------------------

@dataclass(frozen=True)
class Symbolic:
    reason: str = "built-in family"


@dataclass(frozen=True)
class Probabilistic:
    min_sphere_norm: float
    sample_count: int


SPHERE_SAMPLES = 10_000
NONDEGENERACY_THRESHOLD = 1e-3
_CERT_SEED = 0x5EED


def sphere_norm_check(components: Sequence[HomogeneousPolynomial], samples: int = SPHERE_SAMPLES,
                      seed: int = _CERT_SEED, threshold: float = NONDEGENERACY_THRESHOLD) -> Probabilistic:
    """Probabilistic nondegeneracy: min ||F(w)|| over unit-sphere samples must exceed ``threshold``."""
    n = components[0].nvars
    w = Stream(seed, 1).complex_normal((samples, n))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    norms = np.linalg.norm(np.stack([P(w) for P in components], axis=-1), axis=1)
    i = int(np.argmin(norms))
    if not norms[i] > threshold:
        raise DegenerateMapError(
            f"min sphere norm {norms[i]:.3e} < {threshold:g} at sample {i}: w = {w[i].tolist()}")
    return Probabilistic(float(norms[i]), samples)


@dataclass(frozen=True, eq=False)
class LiftedEndomorphism:
    """Lift F: C^{k+1} -> C^{k+1} of a holomorphic endomorphism of P^k of degree d."""

    components: tuple[HomogeneousPolynomial, ...]
    certificate: Symbolic | Probabilistic
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        n = len(comps)
        if n < 2:
            raise ValueError("need at least two components (k >= 1)")
        degs = {P.degree for P in comps}
        if len(degs) != 1 or any(P.nvars != n for P in comps):
            raise ValueError("components must share degree d and have k+1 variables")
        if comps[0].degree < 2:
            raise ValueError("algebraic degree must be >= 2")
        if isinstance(self.certificate, Probabilistic) and not self.certificate.min_sphere_norm > 0:
            raise DegenerateMapError("probabilistic certificate with zero sphere norm")
        object.__setattr__(self, "_jac", tuple(tuple(P.derivative(j) for j in range(n)) for P in comps))

    @property
    def k(self) -> int:
        return len(self.components) - 1

    @property
    def d(self) -> int:
        return self.components[0].degree

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.shape[-1:] != (self.k + 1,):
            raise ValueError(f"expected vectors of length {self.k + 1}, got shape {z.shape}")
        return np.stack([np.asarray(P(z)) for P in self.components], axis=-1)

    def jacobian(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.shape[-1:] != (self.k + 1,):
            raise ValueError(f"expected vectors of length {self.k + 1}, got shape {z.shape}")
        rows = [np.stack([np.asarray(D(z)) for D in row], axis=-1) for row in self._jac]
        return np.stack(rows, axis=-2)

    def is_monomial(self) -> bool:
        return all(len(P.coeffs) == 1 for P in self.components)

    def to_text(self) -> str:
        return "\n".join(format_polynomial(P) for P in self.components) + "\n"

    def describe(self) -> dict:
        return {"family": self.family, "k": self.k, "d": self.d, "params": _jsonable(self.params),
                "certificate": _jsonable(self.certificate.__dict__ | {"kind": type(self.certificate).__name__}),
                "components": [format_polynomial(P) for P in self.components]}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    return x


def eval_map(F: LiftedEndomorphism, z) -> np.ndarray:
    return F(z)


def jacobian(F, z) -> np.ndarray:
    """Matrix of partials dF_i/dz_j at z (lifted endomorphism or automorphism forward part)."""
    return F.jacobian(z)


def parse_map(text: str, certify: bool = True) -> LiftedEndomorphism:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    n = len(lines)
    comps = tuple(parse_polynomial(ln, nvars=n, homogeneous=True) for ln in lines)
    cert = sphere_norm_check(comps) if certify else Probabilistic(float("nan"), 0)
    return LiftedEndomorphism(comps, cert, family="polynomial")


def _all_monomials(nvars: int, degree: int):
    """Exponent vectors of total degree ``degree`` in descending grlex order."""
    out = []
    for c in itertools.combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for i in c:
            e[i] += 1
        out.append(tuple(e))
    return sorted(set(out), key=_grlex_key)


def make_power_map(k: int, d: int) -> LiftedEndomorphism:
    """[z_0 : ... : z_k] -> [z_0^d : ... : z_k^d]."""
    if k < 1 or d < 2:
        raise ValueError("need k >= 1 and d >= 2")
    n = k + 1
    comps = tuple(HomogeneousPolynomial(n, [([d if j == i else 0 for j in range(n)], 1.0)], d)
                  for i in range(n))
    return LiftedEndomorphism(comps, Symbolic("power map"), "power", {"k": k, "d": d})


def make_perturbed_power_map(k: int, d: int, eps: complex, seed: int) -> LiftedEndomorphism:
    """Components z_i^d + eps * Q_i with Q_i random homogeneous of degree d.

    Coefficients of Q_i are uniform in the unit disk, drawn from the seeded
    stream in grlex order. Raises :class:`DegenerateMapError` if the sphere
    check finds ||F|| < 1e-3.
    """
    base = make_power_map(k, d)
    if eps == 0:
        return LiftedEndomorphism(base.components, Symbolic("power map (eps = 0)"), "perturbed",
                                  {"k": k, "d": d, "eps": 0.0, "seed": seed})
    n = k + 1
    mons = _all_monomials(n, d)
    rs = Stream(seed, stream=0xD1)
    comps = []
    for i in range(n):
        q = rs.unit_disk(len(mons))
        terms = [(e, eps * c) for e, c in zip(mons, q)]
        terms.append(([d if j == i else 0 for j in range(n)], 1.0))
        comps.append(HomogeneousPolynomial(n, terms, d))
    cert = sphere_norm_check(comps)
    return LiftedEndomorphism(tuple(comps), cert, "perturbed", {"k": k, "d": d, "eps": eps, "seed": seed})


def _exact(c: complex):
    import sympy as sp
    c = complex(c)
    return sp.Rational(c.real) + sp.I * sp.Rational(c.imag)


def make_ueda_map(h, k: int) -> LiftedEndomorphism:
    """Endomorphism f of P^k with f o pi = pi o (h x ... x h), pi the symmetrization of (P^1)^k.

    ``h`` is either ascending coefficients of a polynomial of degree d >= 2 or a
    ``(numerator, denominator)`` pair of ascending coefficient lists. Homogeneous
    coordinates on P^k are the coefficients of prod_j (a_j X + b_j Y) for
    x_j = [a_j : b_j], so z_0 is the homogenizing variable and z_i = e_i(x) on
    the affine part.
    """
    import sympy as sp
    from sympy.polys.polyfuncs import symmetrize

    if k < 1:
        raise ValueError("k must be >= 1")
    if isinstance(h, tuple) and len(h) == 2 and not np.isscalar(h[0]):
        num, den = [complex(c) for c in h[0]], [complex(c) for c in h[1]]
    else:
        num, den = [complex(c) for c in h], [1.0 + 0j]
    while len(num) > 1 and num[-1] == 0:
        num.pop()
    while len(den) > 1 and den[-1] == 0:
        den.pop()
    d = max(len(num), len(den)) - 1
    if d < 2:
        raise ValueError("h must have degree >= 2")

    t = sp.Symbol("t")
    H1 = sum(_exact(c) * t**m for m, c in enumerate(num))
    H0 = sum(_exact(c) * t**m for m, c in enumerate(den))
    res = sp.resultant(sp.Poly(sp.expand(H1), t), sp.Poly(sp.expand(H0), t)) if len(den) > 1 else 1
    if res == 0:
        raise DegenerateMapError("numerator and denominator of h share a root")

    xs = sp.symbols(f"x1:{k + 1}")
    X, Y = sp.symbols("X Y")
    prod = sp.Integer(1)
    for x in xs:
        prod *= H0.subs(t, x) * X + H1.subs(t, x) * Y
    prod = sp.Poly(sp.expand(prod), X, Y)
    n = k + 1
    comps = []
    for i in range(n):
        coeff = prod.coeff_monomial(X**(k - i) * Y**i)
        sym, rem, defs = symmetrize(sp.expand(coeff), *xs, formal=True)
        if sp.expand(rem) != 0:
            raise RuntimeError(f"symmetric reduction left a remainder for component {i}: {rem}")
        s_syms = [s for s, _ in defs]
        # symmetrize may drop unused symbols; map back by name
        names = {str(s): s for s in s_syms}
        gens = [names.get(f"s{j}", sp.Symbol(f"s{j}")) for j in range(1, k + 1)]
        poly = sp.Poly(sp.expand(sym), *gens) if sym.free_symbols else None
        terms = []
        if poly is None:
            terms.append(([d] + [0] * k, complex(sp.N(sym))))
        else:
            for mon, c in poly.terms():
                deg = sum(mon)
                if deg > d:
                    raise RuntimeError(f"component {i} has degree {deg} > {d} in symmetric coordinates")
                re_, im_ = sp.re(c), sp.im(c)
                terms.append(([d - deg] + list(mon), complex(float(re_), float(im_))))
        comps.append(HomogeneousPolynomial(n, terms, d))
    return LiftedEndomorphism(tuple(comps), Symbolic("symmetrized product"), "ueda",
                              {"k": k, "d": d, "h_num": num, "h_den": den})


def symmetrize_points(pairs: np.ndarray) -> np.ndarray:
    """pi: (P^1)^k -> P^k. ``pairs`` has shape (..., k, 2) holding [a_j : b_j]; returns
    coefficients of prod_j (a_j X + b_j Y) ordered X^k, X^{k-1}Y, ..., Y^k."""
    pairs = np.asarray(pairs, dtype=complex)
    k = pairs.shape[-2]
    out = np.zeros(pairs.shape[:-2] + (k + 1,), dtype=complex)
    out[..., 0] = 1.0
    for j in range(k):
        a = pairs[..., j, 0][..., None]
        b = pairs[..., j, 1][..., None]
        shifted = np.zeros_like(out)
        shifted[..., 1:] = out[..., :-1]
        out = a * out + b * shifted
    return out


# --- regular automorphisms --------------------------------------------------

@dataclass(frozen=True, eq=False)
class RegularAutomorphism:
    """Polynomial automorphism of C^k with disjoint indeterminacy sets at infinity."""

    k: int
    forward: tuple[Polynomial, ...]
    backward: tuple[Polynomial, ...]
    d_plus: int
    d_minus: int
    s: int
    filtration_radius: float
    family: str = "custom"
    params: dict = field(default_factory=dict)
    indeterminacy: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.forward) != self.k or len(self.backward) != self.k:
            raise ValueError("forward/backward must have k components")
        if not 1 <= self.s <= self.k - 1:
            raise ValueError("need 1 <= s <= k-1")
        if self.d_plus ** (self.k - self.s) != self.d_minus ** self.s:
            raise ValueError("degrees violate d_plus^(k-s) = d_minus^s")
        if not self.filtration_radius > 0:
            raise ValueError("filtration radius must be positive")
        jac = tuple(tuple(P.derivative(j) for j in range(self.k)) for P in self.forward)
        object.__setattr__(self, "_jac", jac)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.stack([np.asarray(P(z)) for P in self.forward], axis=-1)

    def inverse(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.stack([np.asarray(P(z)) for P in self.backward], axis=-1)

    def jacobian(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.shape[-1:] != (self.k,):
            raise ValueError(f"expected vectors of length {self.k}, got shape {z.shape}")
        rows = [np.stack([np.asarray(D(z)) for D in row], axis=-1) for row in self._jac]
        return np.stack(rows, axis=-2)

    def escaped(self, z) -> np.ndarray:
        """Mask of points in the forward-escape region of the filtration."""
        z = np.asarray(z, dtype=complex)
        R = self.filtration_radius
        if self.family == "henon":
            # V+ = {|y| >= max(|x|, R)} is forward invariant and |y| at least doubles there
            ax, ay = np.abs(z[..., 0]), np.abs(z[..., 1])
            return (ay > R) & (ay >= ax)
        return np.max(np.abs(z), axis=-1) > R

    def describe(self) -> dict:
        return {"family": self.family, "k": self.k, "d_plus": self.d_plus, "d_minus": self.d_minus,
                "s": self.s, "filtration_radius": self.filtration_radius, "params": _jsonable(self.params),
                "forward": [format_polynomial(P) for P in self.forward],
                "backward": [format_polynomial(P) for P in self.backward]}


def make_henon(a: complex, c: complex, k: int = 2) -> RegularAutomorphism:
    """Quadratic Henon map (x, y) -> (y, y^2 + c - a x) with inverse (x, y) -> ((x^2 + c - y)/a, x)."""
    if k != 2:
        raise ValueError("Henon maps live on C^2")
    if a == 0:
        raise ValueError("a = 0 gives a non-invertible map")
    a, c = complex(a), complex(c)
    fwd = (Polynomial(2, [((0, 1), 1.0)]),
           Polynomial(2, [((0, 2), 1.0), ((0, 0), c), ((1, 0), -a)]))
    bwd = (Polynomial(2, [((2, 0), 1.0 / a), ((0, 0), c / a), ((0, 1), -1.0 / a)]),
           Polynomial(2, [((1, 0), 1.0)]))
    R = max(3.0, abs(c) + abs(a) + 2.0)
    # homogeneous coordinates [x : y : t]; t = 0 is the line at infinity
    indet = {"I_plus": [1.0, 0.0, 0.0], "I_minus": [0.0, 1.0, 0.0]}
    return RegularAutomorphism(2, fwd, bwd, 2, 2, 1, R, "henon", {"a": a, "c": c}, indet)
