"""Holomorphic sections of O(m) as degree-m homogeneous polynomials.

Covers chart dehomogenization, the Fubini-Study potential jet, the (1,0)
covariant derivative and its chart-free residual, pointwise norms, the
Riemannian gradient of log|s|^2, binary-form factorization, the invariant
Gaussian ensemble, and text serialization.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .geometry import ProjectivePoint, UnitaryMap, chart_of, to_chart

# A section whose largest coefficient modulus falls below this is rejected.
ZERO_SECTION_THRESHOLD = 1e-300


class ZeroSection(ValueError):
    """Raised when constructing a section with no usable coefficient."""


class ZeroLocus(ValueError):
    """Raised when an operation needs s(p) != 0 but the point is on the zero set."""


def multi_indices(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples of length nvars summing to degree, in a fixed order."""
    out = []
    for combo in combinations_with_replacement(range(nvars), degree):
        alpha = [0] * nvars
        for v in combo:
            alpha[v] += 1
        out.append(tuple(alpha))
    out.sort()
    return out


class _PolyEval:
    """Batched evaluator for a sparse polynomial given by exponents and coefficients."""

    __slots__ = ("exps", "coeffs", "nvars")

    def __init__(self, exps, coeffs, nvars):
        self.exps = np.asarray(exps, dtype=np.int64).reshape(-1, nvars)
        self.coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        self.nvars = nvars

    def __call__(self, Z: np.ndarray) -> np.ndarray:
        """Evaluate on a batch of points, shape (S, nvars) -> (S,)."""
        Z = np.asarray(Z, dtype=np.complex128)
        squeeze = Z.ndim == 1
        if squeeze:
            Z = Z[None, :]
        S = Z.shape[0]
        if self.coeffs.size == 0:
            vals = np.zeros(S, dtype=np.complex128)
            return vals[0] if squeeze else vals
        monos = np.ones((self.exps.shape[0], S), dtype=np.complex128)
        for v in range(self.nvars):
            dmax = int(self.exps[:, v].max())
            if dmax == 0:
                continue
            powers = np.empty((dmax + 1, S), dtype=np.complex128)
            powers[0] = 1.0
            for d in range(1, dmax + 1):
                powers[d] = powers[d - 1] * Z[:, v]
            monos *= powers[self.exps[:, v]]
        vals = self.coeffs @ monos
        return vals[0] if squeeze else vals

    def derivative(self, v: int) -> "_PolyEval":
        keep = self.exps[:, v] > 0
        exps = self.exps[keep].copy()
        coeffs = self.coeffs[keep] * exps[:, v]
        exps[:, v] -= 1
        return _PolyEval(exps, coeffs, self.nvars)


def _poly_eval_from_dict(poly: dict, nvars: int) -> _PolyEval:
    items = sorted(poly.items())
    exps = [k for k, _ in items]
    coeffs = [c for _, c in items]
    if not exps:
        exps = np.zeros((0, nvars), dtype=np.int64)
    return _PolyEval(exps, coeffs, nvars)


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            key = tuple(x + y for x, y in zip(ka, kb))
            out[key] = out.get(key, 0.0) + ca * cb
    return out


@dataclass(eq=False)
class Section:
    """A holomorphic section of O(m) on CP^n: a degree-m form in n+1 variables.

    Coefficients are stored sparsely as a map from exponent multi-indices of
    length n+1 (summing to m) to complex scalars.
    """

    n: int
    m: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("need n >= 1 and m >= 1")
        cleaned = {}
        for alpha, c in self.coeffs.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n + 1 or any(a < 0 for a in alpha):
                raise ValueError(f"bad multi-index {alpha}")
            if sum(alpha) != self.m:
                raise ValueError(f"multi-index {alpha} does not have degree {self.m}")
            c = complex(c)
            if c != 0.0:
                cleaned[alpha] = c
        if not cleaned or max(abs(c) for c in cleaned.values()) < ZERO_SECTION_THRESHOLD:
            raise ZeroSection("section is numerically zero")
        self.coeffs = cleaned
        self._eval = None
        self._grad = None
        self._hess = None

    # -- evaluation ---------------------------------------------------------

    def _evaluator(self) -> _PolyEval:
        if self._eval is None:
            self._eval = _poly_eval_from_dict(self.coeffs, self.n + 1)
        return self._eval

    def __call__(self, Z) -> complex:
        return complex(self._evaluator()(np.asarray(Z, dtype=np.complex128)))

    def gradient_at(self, Z) -> np.ndarray:
        """Homogeneous gradient (d s / d Z_i) at a coordinate vector."""
        if self._grad is None:
            ev = self._evaluator()
            self._grad = [ev.derivative(v) for v in range(self.n + 1)]
        Z = np.asarray(Z, dtype=np.complex128)
        return np.array([g(Z) for g in self._grad])

    def hessian_matrix_at(self, Z) -> np.ndarray:
        """Homogeneous Hessian (d^2 s / d Z_i d Z_j) at a coordinate vector."""
        if self._hess is None:
            ev = self._evaluator()
            firsts = [ev.derivative(v) for v in range(self.n + 1)]
            self._hess = [[firsts[i].derivative(j) for j in range(self.n + 1)]
                          for i in range(self.n + 1)]
        Z = np.asarray(Z, dtype=np.complex128)
        H = np.empty((self.n + 1, self.n + 1), dtype=np.complex128)
        for i in range(self.n + 1):
            for j in range(i, self.n + 1):
                H[i, j] = H[j, i] = self._hess[i][j](Z)
        return H

    # -- algebra ------------------------------------------------------------

    def scaled(self, c: complex) -> "Section":
        return Section(self.n, self.m, {a: c * v for a, v in self.coeffs.items()})

    def compose_linear(self, matrix) -> "Section":
        """The section Z -> s(M Z) for a square matrix M of size n+1."""
        M = np.asarray(matrix, dtype=np.complex128)
        if M.shape != (self.n + 1, self.n + 1):
            raise ValueError("matrix size does not match the ambient dimension")
        # linear forms M_i(Z) = sum_j M[i, j] Z_j, with memoized powers
        nv = self.n + 1
        linears = []
        for i in range(nv):
            form = {}
            for j in range(nv):
                if M[i, j] != 0.0:
                    key = tuple(1 if t == j else 0 for t in range(nv))
                    form[key] = M[i, j]
            linears.append(form)
        one = {tuple([0] * nv): 1.0 + 0j}
        power_cache: list[dict[int, dict]] = [{0: one} for _ in range(nv)]

        def power(i, k):
            cache = power_cache[i]
            if k not in cache:
                cache[k] = _poly_mul(power(i, k - 1), linears[i])
            return cache[k]

        total: dict = {}
        for alpha, c in self.coeffs.items():
            term = one
            for i, a in enumerate(alpha):
                if a:
                    term = _poly_mul(term, power(i, a))
            for key, v in term.items():
                total[key] = total.get(key, 0.0) + c * v
        total = {k: v for k, v in total.items() if v != 0.0}
        return Section(self.n, self.m, total)

    def acted_by(self, u: UnitaryMap) -> "Section":
        """The pushforward (u . s)(Z) = s(U^{-1} Z); critical points move p -> U p."""
        return self.compose_linear(u.matrix.conj().T)


def monomial_section(n: int, m: int, alpha, coeff=1.0) -> Section:
    return Section(n, m, {tuple(alpha): coeff})


def section_norm(s: Section) -> float:
    """Unitary-invariant coefficient norm: ||s||^2 = sum |c_a|^2 a! / m!.

    In this norm the weighted monomials sqrt(m!/a!) Z^a are orthonormal, which
    is what makes the Gaussian ensemble below invariant under unitary moves.
    """
    mfact = math.factorial(s.m)
    total = 0.0
    for alpha, c in s.coeffs.items():
        w = 1.0
        for a in alpha:
            w *= math.factorial(a)
        total += abs(c) ** 2 * w / mfact
    return math.sqrt(total)


# ---------------------------------------------------------------------------
# Charts
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ChartPolynomial:
    """Dehomogenization of a section in one affine chart (degree <= m in n vars)."""

    chart: int
    n: int
    m: int
    poly: dict

    def __post_init__(self):
        self.poly = {tuple(k): complex(v) for k, v in self.poly.items() if v != 0.0}
        self._val = None
        self._gr = None
        self._he = None

    def _ensure(self):
        if self._val is None:
            self._val = _poly_eval_from_dict(self.poly, self.n)
            self._gr = [self._val.derivative(v) for v in range(self.n)]
            self._he = [[self._gr[i].derivative(j) for j in range(self.n)]
                        for i in range(self.n)]

    def value(self, Z) -> np.ndarray:
        self._ensure()
        return self._val(Z)

    def value_grad(self, Z):
        self._ensure()
        Z = np.asarray(Z, dtype=np.complex128)
        single = Z.ndim == 1
        if single:
            Z = Z[None, :]
        f = self._val(Z)
        g = np.stack([gr(Z) for gr in self._gr], axis=-1)
        if single:
            return f[0], g[0]
        return f, g

    def value_grad_hess(self, Z):
        self._ensure()
        Z = np.asarray(Z, dtype=np.complex128)
        single = Z.ndim == 1
        if single:
            Z = Z[None, :]
        f = self._val(Z)
        g = np.stack([gr(Z) for gr in self._gr], axis=-1)
        S = Z.shape[0]
        H = np.empty((S, self.n, self.n), dtype=np.complex128)
        for i in range(self.n):
            for j in range(i, self.n):
                hij = self._he[i][j](Z)
                H[:, i, j] = hij
                H[:, j, i] = hij
        if single:
            return f[0], g[0], H[0]
        return f, g, H

    def coefficient_scale(self) -> float:
        return max(abs(c) for c in self.poly.values())


def dehomogenize(s: Section, i: int) -> ChartPolynomial:
    """f(z) = s at homogeneous coordinates with Z_i = 1, z = remaining ratios."""
    if not 0 <= i <= s.n:
        raise ValueError(f"chart index {i} out of range")
    poly: dict = {}
    for alpha, c in s.coeffs.items():
        beta = alpha[:i] + alpha[i + 1:]
        poly[beta] = poly.get(beta, 0.0) + c
    return ChartPolynomial(chart=i, n=s.n, m=s.m, poly=poly)


# ---------------------------------------------------------------------------
# Fubini-Study potential jet
# ---------------------------------------------------------------------------


@dataclass
class FSPotentialJet:
    """Value and derivatives of phi = m log(1 + |z|^2) at a chart point."""

    value: float
    d1: np.ndarray        # d phi / d z_j
    d2_holo: np.ndarray   # d^2 phi / d z_j d z_k
    d2_mixed: np.ndarray  # d^2 phi / d z_j d conj(z_k)


def fs_jet(z, m: int) -> FSPotentialJet:
    z = np.asarray(z, dtype=np.complex128).reshape(-1)
    q = 1.0 + float(np.vdot(z, z).real)
    zb = z.conj()
    d1 = m * zb / q
    d2_holo = -m * np.outer(zb, zb) / q ** 2
    d2_mixed = m * (np.eye(z.size) * q - np.outer(zb, z)) / q ** 2
    return FSPotentialJet(value=m * math.log(q), d1=d1, d2_holo=d2_holo, d2_mixed=d2_mixed)


# ---------------------------------------------------------------------------
# Covariant derivative, norms, gradient
# ---------------------------------------------------------------------------


def invariant_residual(eta: np.ndarray, z: np.ndarray, m: int, snorm: float) -> float:
    """Chart-free, scale-free size of the covariant derivative covector.

    The Euclidean norm of eta = df - f dphi depends on the chart; weighting by
    the inverse FS metric and the frame weight gives
        r^2 = (|eta|^2 + |<z, eta>|^2) (1+|z|^2)^(1-m) / ||s||^2,
    which takes the same value in every chart containing the point and reduces
    to |eta| / ||s|| at the chart center.
    """
    q = 1.0 + float(np.vdot(z, z).real)
    cross = np.vdot(z, eta)
    val2 = (float(np.vdot(eta, eta).real) + abs(cross) ** 2) * q ** (1 - m)
    return math.sqrt(max(val2, 0.0)) / snorm


def nabla_prime(s: Section, p: ProjectivePoint) -> tuple[np.ndarray, float]:
    """(1,0)-covariant derivative df - f dphi in the chart of p, plus its residual."""
    if p.n != s.n:
        raise ValueError("dimension mismatch between section and point")
    i = chart_of(p)
    z = to_chart(p, i)
    cp = dehomogenize(s, i)
    f, g = cp.value_grad(z)
    jet = fs_jet(z, s.m)
    eta = g - f * jet.d1
    return eta, invariant_residual(eta, z, s.m, section_norm(s))


def norm_sq(s: Section, p: ProjectivePoint) -> float:
    """|s|^2 at p: |f(z)|^2 (1 + |z|^2)^(-m), independent of the chart."""
    i = chart_of(p)
    z = to_chart(p, i)
    f = complex(dehomogenize(s, i).value(z))
    q = 1.0 + float(np.vdot(z, z).real)
    return abs(f) ** 2 * q ** (-s.m)


def grad_log_norm_sq(s: Section, p: ProjectivePoint,
                     zero_threshold: float = 1e-20) -> np.ndarray:
    """Riemannian gradient of log|s|^2 in chart coordinates (x_1..x_n, y_1..y_n).

    The metric is the degree-independent Fubini-Study metric (potential
    log(1+|z|^2)), so the gradient field of a product of linear factors is the
    sum of the factors' fields.  It vanishes exactly where nabla_prime does.
    """
    if norm_sq(s, p) / section_norm(s) ** 2 < zero_threshold:
        raise ZeroLocus("log|s|^2 is singular on the zero locus")
    i = chart_of(p)
    z = to_chart(p, i)
    cp = dehomogenize(s, i)
    f, g = cp.value_grad(z)
    jet = fs_jet(z, s.m)
    gamma = g / f - jet.d1
    q = 1.0 + float(np.vdot(z, z).real)
    ginv = q * (np.eye(s.n) + np.outer(z.conj(), z))
    v = ginv @ gamma.conj()
    return np.concatenate([v.real, v.imag])


# ---------------------------------------------------------------------------
# Binary forms (n = 1): linear factors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearFactor:
    """A linear form w0 Z_0 + w1 Z_1, normalized with canonical phase."""

    w0: complex
    w1: complex

    def zero(self) -> ProjectivePoint:
        return ProjectivePoint([-self.w1, self.w0])

    def as_section(self) -> Section:
        return Section(1, 1, {(1, 0): self.w0, (0, 1): self.w1})


def _normalized_factor(w0: complex, w1: complex) -> LinearFactor:
    v = _canonical_pair(w0, w1)
    return LinearFactor(w0=v[0], w1=v[1])


def _canonical_pair(w0, w1):
    v = np.array([w0, w1], dtype=np.complex128)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ValueError("zero linear factor")
    v /= nrm
    lead = 0 if abs(v[0]) > 1e-9 * max(abs(v[0]), abs(v[1])) else 1
    phase = v[lead] / abs(v[lead])
    v = v * phase.conjugate()
    v[lead] = abs(v[lead])
    return v


def factor_binary_form(s: Section) -> list[LinearFactor]:
    """Write a binary form as a product of m linear factors (with multiplicity).

    Roots of the dehomogenized polynomial come from companion-matrix
    eigenvalues (numpy roots); zeros at [0, 1] show up as degree drop and are
    restored explicitly.
    """
    if s.n != 1:
        raise ValueError("factorization applies to binary forms (n = 1) only")
    coeff = np.zeros(s.m + 1, dtype=np.complex128)
    for (a0, a1), c in s.coeffs.items():
        coeff[a1] = c  # coefficient of z^a1 with z = Z_1/Z_0
    scale = np.abs(coeff).max()
    deg = int(np.max(np.nonzero(np.abs(coeff) > 1e-14 * scale)))
    factors: list[LinearFactor] = []
    # each drop in degree is a zero at [0, 1], i.e. a factor Z_0
    for _ in range(s.m - deg):
        factors.append(_normalized_factor(1.0, 0.0))
    if deg > 0:
        roots = np.roots(coeff[deg::-1])
        for r in sorted(roots, key=lambda t: (round(t.real, 12), round(t.imag, 12))):
            factors.append(_normalized_factor(-r, 1.0))
    return factors


def expand_factors(factors: list[LinearFactor]) -> Section:
    """Multiply linear factors back into a binary form (reconstruction oracle)."""
    poly = {(0, 0): 1.0 + 0j}
    for fac in factors:
        poly = _poly_mul(poly, {(1, 0): fac.w0, (0, 1): fac.w1})
    m = len(factors)
    return Section(1, m, poly)


# ---------------------------------------------------------------------------
# Gaussian ensemble and the degree-2-part kernel
# ---------------------------------------------------------------------------


def random_section(n: int, m: int, seed) -> Section:
    """Draw from the unitarily invariant Gaussian ensemble.

    Coefficients are c_a sqrt(m!/a!) with i.i.d. standard complex Gaussian
    c_a, in the fixed multi-index order, so a given seed always produces the
    same section.
    """
    rng = np.random.default_rng(seed)
    alphas = multi_indices(n + 1, m)
    raw = (rng.standard_normal(len(alphas)) + 1j * rng.standard_normal(len(alphas)))
    raw /= math.sqrt(2.0)
    mfact = math.factorial(m)
    coeffs = {}
    for alpha, c in zip(alphas, raw):
        w = 1.0
        for a in alpha:
            w *= math.factorial(a)
        coeffs[alpha] = c * math.sqrt(mfact / w)
    return Section(n, m, coeffs)


def kernel_basis_A0(n: int, m: int) -> list[tuple[int, ...]]:
    """Multi-indices spanning the sections with vanishing covariant derivative at
    the origin of chart 0: all alpha with |alpha| = m and alpha_0 != m - 1."""
    return [a for a in multi_indices(n + 1, m) if a[0] != m - 1]


# ---------------------------------------------------------------------------
# Serialization: "n", "m" header lines then one term per line
# ---------------------------------------------------------------------------


def dump_section(s: Section) -> str:
    lines = [f"n {s.n}", f"m {s.m}"]
    for alpha in sorted(s.coeffs):
        c = s.coeffs[alpha]
        idx = " ".join(str(a) for a in alpha)
        lines.append(f"{idx} {c.real!r} {c.imag!r}")
    return "\n".join(lines) + "\n"


def parse_section(text: str) -> Section:
    n = m = None
    coeffs = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "n":
            n = int(parts[1])
        elif parts[0] == "m":
            m = int(parts[1])
        else:
            if n is None or m is None:
                raise ValueError("term line before the n/m header")
            if len(parts) != n + 3:
                raise ValueError(f"malformed term line: {raw!r}")
            alpha = tuple(int(x) for x in parts[: n + 1])
            coeffs[alpha] = float(parts[n + 1]) + 1j * float(parts[n + 2])
    if n is None or m is None:
        raise ValueError("missing n/m header")
    return Section(n, m, coeffs)


def save_section(s: Section, path) -> None:
    with io.open(path, "w", encoding="ascii") as fh:
        fh.write(dump_section(s))


def load_section(path) -> Section:
    with io.open(path, "r", encoding="ascii") as fh:
        return parse_section(fh.read())
