"""Projective points, affine charts, unitary moves, and the CP^1 <-> round-sphere model.

Points of CP^n are stored as unit homogeneous coordinate vectors with a canonical
phase (first nonzero coordinate real-positive), so that equality testing and
deduplication are deterministic.  All values here are immutable after
construction and every operation is pure.
"""

from __future__ import annotations

import numpy as np

NORM_TOL = 1e-14
UNITARY_TOL = 1e-12

# Relative magnitude below which a coordinate does not qualify as the leading
# (phase-fixing) coordinate.
_LEAD_CUT = 1e-9


class ChartUndefined(ValueError):
    """The requested affine chart does not contain the point."""


def _canonical_coords(coords) -> np.ndarray:
    v = np.asarray(coords, dtype=np.complex128).reshape(-1)
    if v.size < 2:
        raise ValueError("projective point needs at least 2 homogeneous coordinates")
    nrm = np.linalg.norm(v)
    if not np.isfinite(nrm) or nrm == 0.0:
        raise ValueError("cannot normalize zero or non-finite coordinate vector")
    v = v / nrm
    mags = np.abs(v)
    lead = int(np.argmax(mags > _LEAD_CUT * mags.max()))
    phase = v[lead] / abs(v[lead])
    v = v * phase.conjugate()
    v[lead] = abs(v[lead])
    return v


class ProjectivePoint:
    """A point of CP^n as a canonically phased unit coordinate vector."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        v = _canonical_coords(coords)
        v.setflags(write=False)
        object.__setattr__(self, "coords", v)

    def __setattr__(self, name, value):
        raise AttributeError("ProjectivePoint is immutable")

    @property
    def n(self) -> int:
        return self.coords.size - 1

    def isclose(self, other: "ProjectivePoint", tol: float = 1e-9) -> bool:
        return fs_distance(self, other) <= tol

    def __repr__(self):
        inner = ", ".join(f"{c.real:.6g}{c.imag:+.6g}j" for c in self.coords)
        return f"ProjectivePoint([{inner}])"


class UnitaryMap:
    """A unitary matrix acting on homogeneous coordinates."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, *, tol: float = UNITARY_TOL):
        m = np.asarray(matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("unitary map must be a square matrix")
        defect = np.abs(m @ m.conj().T - np.eye(m.shape[0])).max()
        if defect > tol:
            raise ValueError(f"matrix is not unitary (defect {defect:.3e})")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __setattr__(self, name, value):
        raise AttributeError("UnitaryMap is immutable")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, p: ProjectivePoint) -> ProjectivePoint:
        return ProjectivePoint(self.matrix @ p.coords)

    def inverse(self) -> "UnitaryMap":
        return UnitaryMap(self.matrix.conj().T)

    def __matmul__(self, other: "UnitaryMap") -> "UnitaryMap":
        return UnitaryMap(self.matrix @ other.matrix)


def haar_unitary(dim: int, seed) -> UnitaryMap:
    """Haar-distributed random unitary (QR of a complex Ginibre matrix)."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    # fix the phase ambiguity of QR so the distribution is Haar
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return UnitaryMap(q)


def fs_distance(p: ProjectivePoint, q: ProjectivePoint) -> float:
    """Fubini-Study distance arccos|<p,q>|, in radians, range [0, pi/2].

    Computed through atan2 of the transverse component, which stays accurate
    for distances near 0 where arccos of the clamped inner product loses
    precision.
    """
    c = np.vdot(p.coords, q.coords)
    transverse = np.linalg.norm(q.coords - c * p.coords)
    return float(np.arctan2(transverse, min(abs(c), 1.0)))


def antipode(p: ProjectivePoint) -> ProjectivePoint:
    """The unique point at FS distance pi/2 from p.  Defined on CP^1 only."""
    if p.n != 1:
        raise ValueError("antipode is only defined on CP^1")
    a, b = p.coords
    return ProjectivePoint([-b.conjugate(), a.conjugate()])


def chart_of(p: ProjectivePoint) -> int:
    """Index of a largest-modulus coordinate (ties broken by smallest index)."""
    return int(np.argmax(np.abs(p.coords)))


def to_chart(p: ProjectivePoint, i: int) -> np.ndarray:
    """Affine coordinates (Z_j / Z_i for j != i, ascending j) in chart i."""
    if not 0 <= i <= p.n:
        raise ValueError(f"chart index {i} out of range for CP^{p.n}")
    zi = p.coords[i]
    if abs(zi) <= 1e-12:
        raise ChartUndefined(f"coordinate {i} vanishes; point not in chart {i}")
    z = np.delete(p.coords, i) / zi
    return z


def from_chart(z, i: int) -> ProjectivePoint:
    """Inverse of to_chart: homogeneous coordinates with Z_i = 1."""
    z = np.asarray(z, dtype=np.complex128).reshape(-1)
    coords = np.insert(z, i, 1.0)
    return ProjectivePoint(coords)


def move_to_origin(p: ProjectivePoint) -> UnitaryMap:
    """A unitary involution U with U p = [1, 0, ..., 0] up to phase.

    For p = [1, x, 0, ..., 0] with x > 0 this is the standard coordinate swap
    (1/sqrt(1+x^2)) [[1, x], [x, -1]] extended by the identity.  In general it
    is the Householder reflection through p - e_0, which reduces to that swap.
    """
    dim = p.n + 1
    e0 = np.zeros(dim, dtype=np.complex128)
    e0[0] = 1.0
    w = p.coords - e0
    nrm2 = np.vdot(w, w).real
    if nrm2 < 1e-28:
        return UnitaryMap(np.eye(dim))
    h = np.eye(dim, dtype=np.complex128) - (2.0 / nrm2) * np.outer(w, w.conj())
    return UnitaryMap(h)


# ---------------------------------------------------------------------------
# CP^1 <-> unit 2-sphere correspondence.
#
# Sphere points are plain unit 3-vectors (numpy arrays).  The identification
# doubles angles: the spherical angle between images equals twice the FS
# distance, so the FS diameter pi/2 maps to the sphere diameter pi.
# ---------------------------------------------------------------------------


def as_sphere_point(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(3)
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError(f"sphere point must be a unit 3-vector (norm {nrm})")
    return v / nrm


def cp1_to_sphere(p: ProjectivePoint) -> np.ndarray:
    """Map [Z0, Z1] to (2 Re(conj(Z0) Z1), 2 Im(conj(Z0) Z1), |Z0|^2 - |Z1|^2)."""
    if p.n != 1:
        raise ValueError("sphere model is only defined for CP^1")
    a, b = p.coords
    w = a.conjugate() * b
    return np.array([2.0 * w.real, 2.0 * w.imag, abs(a) ** 2 - abs(b) ** 2])


def sphere_to_cp1(x) -> ProjectivePoint:
    """Inverse of cp1_to_sphere."""
    v = as_sphere_point(x)
    # Split on the hemisphere to keep the division well conditioned.
    if v[2] >= 0.0:
        a = np.sqrt((1.0 + v[2]) / 2.0)
        b = (v[0] + 1j * v[1]) / (2.0 * a)
    else:
        b = np.sqrt((1.0 - v[2]) / 2.0)
        a = (v[0] - 1j * v[1]) / (2.0 * b)
    return ProjectivePoint([a, b])


def sphere_angle(x, y) -> float:
    """Angle between two unit 3-vectors, accurate for small separations."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.arctan2(np.linalg.norm(np.cross(x, y)), np.dot(x, y)))
