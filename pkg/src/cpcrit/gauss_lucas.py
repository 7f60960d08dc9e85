"""Spherical hull containment certificates for critical points of binary forms.

Everything here lives on the unit 2-sphere model of CP^1 (angles doubled, so
the FS antipode at distance pi/2 becomes the honest sphere antipode).  Given a
section whose zeros fit in an open hemisphere, the certificate builds the
spherical convex hull P of the zeros and its antipodal image P_inf, locates
every critical point relative to P and P_inf through the tangent-cone test,
and records whether the containment statement holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .critical import CriticalPoint, SolveOptions, find_critical_points
from .geometry import cp1_to_sphere
from .sections import Section, factor_binary_form, random_section

# Polygon kinds
POINT = "point"
SEGMENT = "segment"
POLYGON = "polygon"

# Tangent-cone verdicts
FULL_PLANE = "full-plane"
HALF_PLANE = "half-plane"
LINE = "line"
RAY = "ray"
PROPER_CONE = "proper-cone"
EMPTY = "empty"

# Location verdicts
INTERIOR_P = "interior-P"
INTERIOR_PINF = "interior-Pinf"
BOUNDARY_P = "boundary-P"
BOUNDARY_PINF = "boundary-Pinf"
OUTSIDE = "outside"
VIOLATION = "violation"

ANGLE_TOL = 1e-8


class HemisphereViolation(ValueError):
    """The zeros do not fit in an open hemisphere, so no hull certificate exists."""


class SolverIncomplete(RuntimeError):
    """The critical point solve failed its completeness audit."""


@dataclass
class SphericalPolygon:
    kind: str
    vertices: np.ndarray   # (k, 3), counterclockwise as seen from the pole
    pole: np.ndarray       # open-hemisphere witness: pole . v > 0 for all vertices


@dataclass
class ConeClass:
    verdict: str
    max_gap: float


@dataclass
class LocatedCritical:
    critical: CriticalPoint
    sphere: np.ndarray
    verdict: str


@dataclass
class GaussLucasCertificate:
    zeros: list[np.ndarray]
    P: SphericalPolygon
    P_inf: SphericalPolygon
    criticals: list[LocatedCritical]
    theorem_holds: bool
    has_index2_in_Pinf: bool
    has_critical_in_P: bool
    solver_certified: bool
    notes: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Hemisphere witness
# ---------------------------------------------------------------------------


def hemisphere_witness(points, *, margin: float = 1e-9):
    """Unit vector u maximizing min_i u . v_i, or None when no open hemisphere fits.

    The maximin optimum on the sphere is supported by at most three of the
    points, and three distinct unit vectors supporting it cannot be linearly
    dependent, so enumerating singleton / pair / triple candidates is exact.
    """
    pts = _dedup_rows(np.atleast_2d(np.asarray(points, dtype=float)), 1e-12)
    k = pts.shape[0]
    best_u, best_t = None, -np.inf

    def consider(u):
        nonlocal best_u, best_t
        nrm = np.linalg.norm(u)
        if nrm < 1e-14:
            return
        u = u / nrm
        for cand in (u, -u):
            t = float(np.min(pts @ cand))
            if t > best_t:
                best_t, best_u = t, cand

    for i in range(k):
        consider(pts[i])
    for i, j in combinations(range(k), 2):
        consider(pts[i] + pts[j])
    for i, j, l in combinations(range(k), 3):
        M = pts[[i, j, l]]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        consider(np.linalg.solve(M, np.ones(3)))
    if best_u is None or best_t <= margin:
        return None
    return best_u


def _dedup_rows(rows: np.ndarray, tol: float) -> np.ndarray:
    out: list[np.ndarray] = []
    for r in rows:
        if not any(np.linalg.norm(r - o) <= tol for o in out):
            out.append(r)
    return np.array(out)


# ---------------------------------------------------------------------------
# Hulls via gnomonic projection
# ---------------------------------------------------------------------------


def _tangent_basis(pole: np.ndarray):
    k = int(np.argmin(np.abs(pole)))
    e1 = np.zeros(3)
    e1[k] = 1.0
    e1 = e1 - np.dot(e1, pole) * pole
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(pole, e1)
    return e1, e2


def _hull_2d(xy: np.ndarray, tol: float):
    """Monotone-chain convex hull; returns indices CCW, or None when collinear."""
    order = np.lexsort((xy[:, 1], xy[:, 0]))
    pts = xy[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    scale = max(np.ptp(xy[:, 0]), np.ptp(xy[:, 1]), 1e-300)
    eps = tol * scale * scale
    lower: list[int] = []
    for i in range(len(pts)):
        while len(lower) >= 2 and cross(pts[lower[-2]], pts[lower[-1]], pts[i]) <= eps:
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in range(len(pts) - 1, -1, -1):
        while len(upper) >= 2 and cross(pts[upper[-2]], pts[upper[-1]], pts[i]) <= eps:
            upper.pop()
        upper.append(i)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        return None
    return [int(order[i]) for i in hull]


def spherical_hull(points, pole) -> SphericalPolygon:
    """Spherical convex hull of points strictly inside the hemisphere of pole.

    Gnomonic projection onto the tangent plane at the pole turns geodesics
    into straight lines, so the spherical hull is the planar hull mapped back.
    Degenerate configurations come out as a Point or a GeodesicSegment.
    """
    pole = np.asarray(pole, dtype=float)
    pole = pole / np.linalg.norm(pole)
    pts = _dedup_rows(np.atleast_2d(np.asarray(points, dtype=float)), 1e-9)
    dots = pts @ pole
    if np.any(dots <= 1e-12):
        raise ValueError("all points must lie strictly inside the hemisphere of the pole")
    if pts.shape[0] == 1:
        return SphericalPolygon(kind=POINT, vertices=pts, pole=pole)
    e1, e2 = _tangent_basis(pole)
    proj = pts / dots[:, None]
    xy = np.column_stack([proj @ e1, proj @ e2])
    hull = _hull_2d(xy, 1e-12)
    if hull is None:
        # collinear in the plane: a single great-circle arc; keep the extremes
        d = xy - xy.mean(axis=0)
        _, _, vt = np.linalg.svd(d, full_matrices=False)
        t = d @ vt[0]
        ends = pts[[int(np.argmin(t)), int(np.argmax(t))]]
        return SphericalPolygon(kind=SEGMENT, vertices=ends, pole=pole)
    verts = pts[hull]
    return SphericalPolygon(kind=POLYGON, vertices=_ccw_from_pole(verts, pole), pole=pole)


def _ccw_from_pole(verts: np.ndarray, pole: np.ndarray) -> np.ndarray:
    e1, e2 = _tangent_basis(pole)
    proj = verts / (verts @ pole)[:, None]
    xy = np.column_stack([proj @ e1, proj @ e2])
    area = 0.0
    for i in range(len(xy)):
        j = (i + 1) % len(xy)
        area += xy[i, 0] * xy[j, 1] - xy[j, 0] * xy[i, 1]
    out = verts if area >= 0 else verts[::-1]
    # deterministic starting vertex
    start = int(np.lexsort((out[:, 2], out[:, 1], out[:, 0]))[0])
    return np.roll(out, -start, axis=0)


def opposite_polygon(P: SphericalPolygon) -> SphericalPolygon:
    """Pointwise antipodal image; kind preserved, pole negated."""
    verts = -P.vertices[::-1]
    if P.kind == POLYGON:
        verts = _ccw_from_pole(verts, -P.pole)
    return SphericalPolygon(kind=P.kind, vertices=verts, pole=-P.pole)


# ---------------------------------------------------------------------------
# Tangent cones and location
# ---------------------------------------------------------------------------


def cone_classify(q, vertices, *, tol: float = ANGLE_TOL) -> ConeClass:
    """Classify the convex cone spanned at q by the geodesic rays to the vertices.

    Vertices antipodal to q are dropped; q must not coincide with a vertex.
    The verdict comes from the largest angular gap between consecutive ray
    directions in the tangent plane at q.
    """
    q = np.asarray(q, dtype=float)
    verts = np.atleast_2d(np.asarray(vertices, dtype=float))
    dirs = []
    for v in verts:
        if np.linalg.norm(q + v) <= tol:
            continue  # opposite point: no minimizing direction, dropped
        if np.linalg.norm(q - v) <= tol:
            raise ValueError("cone undefined: q coincides with a vertex")
        d = v - np.dot(q, v) * q
        dirs.append(d / np.linalg.norm(d))
    if not dirs:
        return ConeClass(verdict=EMPTY, max_gap=2.0 * math.pi)
    e1, e2 = _tangent_basis(q)
    ang = np.sort(np.array([math.atan2(np.dot(d, e2), np.dot(d, e1)) for d in dirs]))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2.0 * math.pi]]))
    max_gap = float(gaps.max())
    if max_gap >= 2.0 * math.pi - tol:
        return ConeClass(verdict=RAY, max_gap=max_gap)
    if abs(max_gap - math.pi) <= tol:
        second = float(np.sort(gaps)[-2]) if gaps.size > 1 else 0.0
        verdict = LINE if abs(second - math.pi) <= tol else HALF_PLANE
        return ConeClass(verdict=verdict, max_gap=max_gap)
    if max_gap < math.pi:
        return ConeClass(verdict=FULL_PLANE, max_gap=max_gap)
    return ConeClass(verdict=PROPER_CONE, max_gap=max_gap)


def locate(q, P: SphericalPolygon, P_inf: SphericalPolygon, *,
           tol: float = ANGLE_TOL) -> str:
    """Locate q relative to the hull and its opposite.

    A full tangent plane means q is interior to P or P_inf (which of the two
    is decided by the hemisphere sign), a half plane means q sits on an edge,
    and anything narrower places q outside both.
    """
    q = np.asarray(q, dtype=float)
    side_p = float(np.dot(q, P.pole)) > 0.0
    if P.kind == POINT:
        v = P.vertices[0]
        if np.linalg.norm(q - v) <= tol:
            return BOUNDARY_P
        if np.linalg.norm(q + v) <= tol:
            return BOUNDARY_PINF
        return OUTSIDE
    for v in P.vertices:
        if np.linalg.norm(q - v) <= tol:
            return BOUNDARY_P
        if np.linalg.norm(q + v) <= tol:
            return BOUNDARY_PINF
    cone = cone_classify(q, P.vertices, tol=tol)
    if P.kind == SEGMENT:
        if cone.verdict == LINE:
            return INTERIOR_P if side_p else INTERIOR_PINF
        return OUTSIDE
    if cone.verdict == FULL_PLANE:
        return INTERIOR_P if side_p else INTERIOR_PINF
    if cone.verdict in (HALF_PLANE, LINE):
        return BOUNDARY_P if side_p else BOUNDARY_PINF
    return OUTSIDE


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


def gauss_lucas_certify(s: Section, opts: SolveOptions | None = None, *,
                        tol: float = ANGLE_TOL) -> GaussLucasCertificate:
    """Containment certificate for the critical points of a binary form.

    Requires the zeros of s to fit in an open hemisphere (HemisphereViolation
    otherwise).  Runs the full solve; when the Poincare-Hopf audit runs and
    fails, SolverIncomplete is raised since the critical list cannot be
    trusted.  When the audit is skipped (multiple zeros, degenerate critical
    point) the certificate is still produced but marked non-authoritative.
    """
    if s.n != 1:
        raise ValueError("certificates are defined for binary forms (n = 1)")
    if s.m < 2:
        raise ValueError("need degree m >= 2")
    zeros = [cp1_to_sphere(f.zero()) for f in factor_binary_form(s)]
    pole = hemisphere_witness(zeros)
    if pole is None:
        raise HemisphereViolation("zeros of the section do not fit in an open hemisphere")
    P = spherical_hull(zeros, pole)
    P_inf = opposite_polygon(P)
    report = find_critical_points(s, opts)
    notes = [report.certified_reason]
    if not report.certified_complete and "FAILS" in report.certified_reason:
        raise SolverIncomplete(report.certified_reason)
    located = []
    for c in report.criticals:
        x = cp1_to_sphere(c.point)
        verdict = locate(x, P, P_inf, tol=tol)
        if verdict == OUTSIDE:
            verdict = VIOLATION
        located.append(LocatedCritical(critical=c, sphere=x, verdict=verdict))
    in_pinf = {INTERIOR_PINF, BOUNDARY_PINF}
    in_p = {INTERIOR_P, BOUNDARY_P}
    return GaussLucasCertificate(
        zeros=zeros, P=P, P_inf=P_inf, criticals=located,
        theorem_holds=not any(lc.verdict == VIOLATION for lc in located),
        has_index2_in_Pinf=any(lc.verdict in in_pinf and lc.critical.index == 2
                               for lc in located),
        has_critical_in_P=any(lc.verdict in in_p for lc in located),
        solver_certified=report.certified_complete,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Conditioned sampling for Monte Carlo campaigns
# ---------------------------------------------------------------------------


def _attempt_seed(seed: int, trial: int, attempt: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(trial, attempt))


def _zeros_sphere_rows(coeff_rows: np.ndarray, m: int) -> np.ndarray:
    """Sphere images of the zeros for a batch of binary forms.

    coeff_rows[k] holds the ensemble coefficient of Z_0^k Z_1^(m-k), i.e. the
    coefficient of z^(m-k) in the chart-0 polynomial.  Roots come from batched
    companion matrices; rows whose leading coefficient nearly vanishes are
    rescued by the scalar path upstream (they fail the screen conservatively).
    """
    B = coeff_rows.shape[0]
    lead = coeff_rows[:, 0]  # coefficient of z^m
    safe = np.where(np.abs(lead) < 1e-12, 1.0, lead)
    comp = np.zeros((B, m, m), dtype=np.complex128)
    if m > 1:
        comp[:, 1:, :-1] = np.eye(m - 1)
    comp[:, :, -1] = -coeff_rows[:, :0:-1] / safe[:, None]
    r = np.linalg.eigvals(comp)
    q = 1.0 + np.abs(r) ** 2
    return np.stack([2 * r.real / q, 2 * r.imag / q, (1 - np.abs(r) ** 2) / q], axis=-1)


def _feasible_screen(pts: np.ndarray, margin: float = 1e-9) -> np.ndarray:
    """Batched version of the hemisphere feasibility decision."""
    from itertools import combinations as _comb

    B, m, _ = pts.shape
    cands = [pts, pts.sum(axis=1, keepdims=True)]
    if m >= 2:
        pairs = np.array(list(_comb(range(m), 2)), dtype=int)
        cands.append(pts[:, pairs[:, 0]] + pts[:, pairs[:, 1]])
    if m >= 3:
        trips = np.array(list(_comb(range(m), 3)), dtype=int)
        M = pts[:, trips]
        dets = np.linalg.det(M)
        bad = np.abs(dets) < 1e-12
        Msafe = M + bad[..., None, None] * np.eye(3)
        rhs = np.ones(M.shape[:-1] + (1,))
        sol = np.linalg.solve(Msafe, rhs)[..., 0]
        sol = np.where(bad[..., None], 0.0, sol)
        cands.append(sol)
    U = np.concatenate(cands, axis=1)
    U = np.concatenate([U, -U], axis=1)
    U = U / np.maximum(np.linalg.norm(U, axis=-1, keepdims=True), 1e-300)
    mins = np.einsum("bkx,bmx->bkm", U, pts).min(axis=2)
    return mins.max(axis=1) > margin


def sample_hemisphere_section(m: int, seed: int, trial: int, *,
                              block: int = 512) -> tuple[Section, int]:
    """Rejection-sample a random binary form with hemisphere-feasible zeros.

    Attempt j of a trial draws from the counter-based seed (seed, trial, j),
    so campaigns are reproducible regardless of execution order.  Returns the
    first feasible section together with the number of attempts consumed.
    """
    from math import comb, sqrt

    w = np.array([sqrt(comb(m, k)) for k in range(m + 1)])
    j0 = 0
    while True:
        rows = np.empty((block, m + 1), dtype=np.complex128)
        for b in range(block):
            rng = np.random.default_rng(_attempt_seed(seed, trial, j0 + b))
            raw = rng.standard_normal(m + 1) + 1j * rng.standard_normal(m + 1)
            rows[b] = raw / np.sqrt(2.0) * w
        pts = _zeros_sphere_rows(rows, m)
        feas = _feasible_screen(pts)
        for j in np.flatnonzero(feas):
            attempt = j0 + int(j)
            s = random_section(1, m, _attempt_seed(seed, trial, attempt))
            # the screen is a fast filter; the scalar witness is the authority
            zs = [cp1_to_sphere(f.zero()) for f in factor_binary_form(s)]
            if hemisphere_witness(zs) is not None:
                return s, attempt + 1
        j0 += block
        if j0 > 10_000_000:
            raise RuntimeError("hemisphere conditioning did not accept any sample")

