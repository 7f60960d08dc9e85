"""Morse counting series, the divisibility inequality, and the quadric Betti step.

Everything in this module is integer-exact: series are lists of non-negative
integer coefficients and the inequality test is exact polynomial division by
(1 + t).
"""

from __future__ import annotations


class MorseSeries:
    """An integer polynomial in one formal variable t with coefficients >= 0."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        c = [int(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        if any(x < 0 for x in c):
            raise ValueError("counting series coefficients must be non-negative")
        self.coeffs = tuple(c)

    @classmethod
    def term(cls, k: int, coeff: int = 1) -> "MorseSeries":
        return cls([0] * k + [coeff])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __add__(self, other: "MorseSeries") -> "MorseSeries":
        size = max(len(self.coeffs), len(other.coeffs))
        return MorseSeries([
            (self.coeffs[k] if k < len(self.coeffs) else 0)
            + (other.coeffs[k] if k < len(other.coeffs) else 0)
            for k in range(size)
        ])

    def __mul__(self, other: "MorseSeries") -> "MorseSeries":
        if not self.coeffs or not other.coeffs:
            return MorseSeries()
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return MorseSeries(out)

    def __call__(self, t: int) -> int:
        val = 0
        for c in reversed(self.coeffs):
            val = val * t + c
        return val

    def __eq__(self, other) -> bool:
        return isinstance(other, MorseSeries) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        if not self.coeffs:
            return "MorseSeries(0)"
        parts = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if k == 0:
                parts.append(str(c))
            else:
                head = "" if c == 1 else f"{c}*"
                parts.append(f"{head}t^{k}" if k > 1 else f"{head}t")
        return "MorseSeries(" + " + ".join(parts) + ")"


def counting_series(criticals, manifold_terms=()) -> MorseSeries:
    """Sum of t^index over critical points plus t^index * P(N) per critical manifold.

    Accepts either critical point records with an .index attribute or bare
    integer indices.
    """
    total = MorseSeries()
    for c in criticals:
        idx = getattr(c, "index", c)
        if idx is None:
            raise ValueError("degenerate critical point has no index")
        total = total + MorseSeries.term(int(idx))
    for lam, series in manifold_terms:
        total = total + MorseSeries.term(int(lam)) * series
    return total


def poincare_cpn(n: int) -> MorseSeries:
    """Poincare series of CP^n: 1 + t^2 + ... + t^(2n)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    coeffs = [0] * (2 * n + 1)
    coeffs[::2] = [1] * (n + 1)
    return MorseSeries(coeffs)


def _divide_by_one_plus_t(diff: list[int]):
    """Exact division of an integer polynomial by (1 + t); None if not divisible."""
    if not diff:
        return []
    if len(diff) == 1:
        return None  # a nonzero constant is not a multiple of (1 + t)
    quotient = [diff[0]]
    for k in range(1, len(diff) - 1):
        quotient.append(diff[k] - quotient[-1])
    if quotient[-1] != diff[-1]:
        return None
    return quotient


def morse_inequality_check(M: MorseSeries, P: MorseSeries):
    """Test M - P = (1 + t) R with R having non-negative coefficients.

    Returns (holds, R), with R = None when the identity fails, either because
    (1 + t) does not divide the difference or because the quotient has a
    negative coefficient.
    """
    size = max(len(M.coeffs), len(P.coeffs))
    diff = [
        (M.coeffs[k] if k < len(M.coeffs) else 0)
        - (P.coeffs[k] if k < len(P.coeffs) else 0)
        for k in range(size)
    ]
    while diff and diff[-1] == 0:
        diff.pop()
    quotient = _divide_by_one_plus_t(diff)
    if quotient is None or any(c < 0 for c in quotient):
        return False, None
    return True, MorseSeries(quotient)


def quadric_zero_poincare(n: int) -> MorseSeries:
    """Poincare series of the zero set of a smooth quadric, for n = 1, 2, 3.

    n=1: two points; n=2: a conic, biholomorphic to CP^1; n=3: a product of
    two CP^1 factors.
    """
    table = {
        1: MorseSeries([2]),
        2: MorseSeries([1, 0, 1]),
        3: MorseSeries([1, 0, 2, 0, 1]),
    }
    if n not in table:
        raise ValueError("zero-set series is shipped for n in {1, 2, 3} only")
    return table[n]


def quadric_middle_betti(n: int) -> int:
    """Middle Betti number of the smooth quadric zero set for odd n.

    Write the counting series of the norm function (zero set as an index-0
    critical manifold with one unknown middle coefficient h, plus the n+1
    isolated critical points of indices n..2n), subtract the ambient Poincare
    series and evaluate at t = -1: the (1 + t) factor kills the right side,
    leaving a linear equation for h.
    """
    if n < 1 or n % 2 == 0:
        raise ValueError("the middle-cohomology step applies to odd n")
    k = (n - 1) // 2
    # known part of the zero-set series: all cohomology matches CP^(n-1)
    # except the middle coefficient, which is the unknown h
    known = [0] * (2 * (n - 1) + 1)
    known[::2] = [1] * n
    known[2 * k] = 0  # h goes here
    # evaluate the h-free part of M - P at t = -1
    val = 0
    for j, c in enumerate(known):
        val += c * (-1) ** j
    for i in range(n + 1):
        val += (-1) ** (n + i)
    for j in range(0, 2 * n + 1, 2):
        val -= 1
    # val + h * (-1)^(2k) = 0
    return -val
