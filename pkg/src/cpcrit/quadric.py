"""Exact treatment of degree-2 sections: Takagi canonical form and critical set.

A quadric section is determined by its symmetric coefficient matrix C via
s(Z) = Z^T C Z.  A unitary change of variables Z -> U Z with U^T C U diagonal
and non-negative brings s to sum a_i Z_i^2; when the a_i are strictly
increasing and positive the critical points and their indices are known in
closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .geometry import ProjectivePoint, UnitaryMap
from .sections import Section


class NotGeneric(ValueError):
    """The quadric is degenerate or has repeated coefficients."""


@dataclass
class QuadricCanonicalForm:
    a: np.ndarray          # non-negative, sorted ascending
    U: UnitaryMap          # U^T C U = diag(a)
    strict: bool           # a_0 > 0 and strictly increasing

    @property
    def n(self) -> int:
        return self.a.size - 1


def _group_close(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Indices of values grouped by closeness (values assumed sorted descending)."""
    groups = []
    start = 0
    for i in range(1, values.size + 1):
        if i == values.size or abs(values[i] - values[start]) > tol:
            groups.append(np.arange(start, i))
            start = i
    return groups


def takagi(C, *, strict_tol: float = 1e-8) -> QuadricCanonicalForm:
    """Takagi factorization of a complex symmetric matrix.

    Returns a with C = conj(U) diag(a) U^*, i.e. U^T C U = diag(a), a the
    singular values of C sorted ascending.  Works through the SVD with a
    block square-root phase correction, which stays valid for repeated and
    zero singular values.
    """
    C = np.asarray(C, dtype=np.complex128)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("expected a square matrix")
    if np.abs(C - C.T).max() > 1e-12 * max(np.abs(C).max(), 1.0):
        raise ValueError("matrix is not symmetric")
    C = 0.5 * (C + C.T)
    V, sv, Wh = np.linalg.svd(C)
    W = Wh.conj().T
    scale = max(sv[0], 1.0)
    blocks = []
    for idx in _group_close(sv, 1e-10 * scale):
        Z = V[:, idx].T @ W[:, idx]
        blocks.append(scipy.linalg.sqrtm(Z))
    Q = V @ scipy.linalg.block_diag(*blocks).conj()
    # Now C = Q diag(sv) Q^T (descending); the change-of-variables unitary is
    # conj(Q), reordered ascending.
    order = np.arange(sv.size)[::-1]
    a = sv[order]
    U = Q.conj()[:, order]
    strict = bool(a[0] > strict_tol * scale and np.all(np.diff(a) > strict_tol * scale))
    return QuadricCanonicalForm(a=a, U=UnitaryMap(U), strict=strict)


def reconstruct(q: QuadricCanonicalForm) -> np.ndarray:
    """conj(U) diag(a) U^*: the symmetric matrix represented by the canonical form."""
    u = q.U.matrix
    return u.conj() @ np.diag(q.a) @ u.conj().T


def quadric_critical_set(q: QuadricCanonicalForm) -> list[tuple[ProjectivePoint, int]]:
    """Critical points of the quadric with their Morse indices.

    For strictly increasing positive a the critical points are the images of
    the coordinate points under the diagonalizing change of variables, and
    the index at the i-th of them (ascending a) is n + i.
    """
    if not q.strict:
        raise NotGeneric("coefficients are not strictly increasing and positive")
    n = q.n
    out = []
    for i in range(n + 1):
        p = ProjectivePoint(q.U.matrix[:, i])
        out.append((p, n + i))
    return out


def is_smooth_quadric(q: QuadricCanonicalForm, *, tol: float = 1e-10) -> bool:
    """Full rank test: the zero set is non-singular iff no coefficient vanishes."""
    scale = max(float(q.a[-1]), 1e-300)
    return bool(q.a[0] > tol * scale)


# -- conversions between sections and symmetric matrices ---------------------


def section_from_matrix(C) -> Section:
    """The degree-2 section Z^T C Z of a symmetric matrix C."""
    C = np.asarray(C, dtype=np.complex128)
    dim = C.shape[0]
    coeffs = {}
    for i in range(dim):
        for j in range(i, dim):
            alpha = [0] * dim
            alpha[i] += 1
            alpha[j] += 1
            c = C[i, j] if i == j else C[i, j] + C[j, i]
            if c != 0.0:
                coeffs[tuple(alpha)] = c
    return Section(dim - 1, 2, coeffs)


def matrix_from_section(s: Section) -> np.ndarray:
    """Symmetric coefficient matrix of a degree-2 section."""
    if s.m != 2:
        raise ValueError("only degree-2 sections have a coefficient matrix")
    dim = s.n + 1
    C = np.zeros((dim, dim), dtype=np.complex128)
    for alpha, c in s.coeffs.items():
        pos = [i for i, a in enumerate(alpha) for _ in range(a)]
        i, j = pos
        if i == j:
            C[i, i] += c
        else:
            C[i, j] += 0.5 * c
            C[j, i] += 0.5 * c
    return C
