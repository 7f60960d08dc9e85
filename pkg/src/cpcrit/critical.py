"""Locating, classifying and certifying critical points of a section.

The critical system in a chart is eta(z) = df - f dphi = 0, a non-holomorphic
system solved by batched multistart damped Newton over the real and imaginary
parts.  Each survivor gets the conjugated Hessian block matrix, its Schur
reduction to an n x n Hermitian matrix, a Morse index and a non-degeneracy
margin.  On CP^1 completeness is certified by the Poincare-Hopf count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .geometry import (
    ProjectivePoint,
    chart_of,
    from_chart,
    move_to_origin,
    to_chart,
)
from .sections import (
    Section,
    dehomogenize,
    factor_binary_form,
    invariant_residual,
    nabla_prime,
    norm_sq,
    section_norm,
)


class NotCritical(ValueError):
    """The point does not satisfy the critical equation to the required residual."""


class OnZeroLocus(ValueError):
    """The section vanishes at the point, so the Hessian of log|s|^2 is undefined."""


@dataclass
class HessianData:
    """Conjugated Hessian of log|s|^2 at a critical point, moved to the origin.

    J is the 2n x 2n Hermitian block matrix 2 [[-mI, A], [conj(A), -mI]] with
    A = 2i (a_jk) built from the quadratic part of the normalized local
    polynomial; schur = -mI + (1/m) A conj(A) carries the index information.
    """

    J: np.ndarray
    A: np.ndarray
    schur: np.ndarray
    n: int
    m: int


@dataclass
class CriticalPoint:
    point: ProjectivePoint
    residual: float
    index: int | None
    nondeg_margin: float
    hessian: HessianData
    multiplicity_hint: int = 1


@dataclass
class PoincareHopfResult:
    applicable: bool
    holds: bool | None
    count: int | None
    reason: str


@dataclass
class SolveReport:
    criticals: list[CriticalPoint]
    zeros: list[tuple[ProjectivePoint, int]]
    starts_used: int
    certified_complete: bool
    certified_reason: str
    warnings: list[str] = field(default_factory=list)


@dataclass
class SolveOptions:
    residual_tol: float = 1e-10
    dedup_tol: float = 1e-7
    degen_tol: float = 1e-6          # index marked unknown below degen_tol * m
    starts_per_chart: int | None = None   # default 50 * m**n
    max_starts_per_chart: int = 50000
    newton_max_iter: int = 80
    chart_radius: float = 1.5
    keep_radius: float = 2.0
    zero_rel_threshold: float = 1e-20
    zero_cluster_tol: float = 1e-6


def hessian_from_quadratic(a: np.ndarray, m: int) -> HessianData:
    """Build the Hessian data from the quadratic part sum a_jk z_j z_k (a symmetric)."""
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[0]
    A = 2j * a
    J = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    J[:n, :n] = -m * np.eye(n)
    J[n:, n:] = -m * np.eye(n)
    J[:n, n:] = A
    J[n:, :n] = A.conj()
    J *= 2.0
    schur = -m * np.eye(n) + (A @ A.conj()) / m
    schur = 0.5 * (schur + schur.conj().T)
    return HessianData(J=J, A=A, schur=schur, n=n, m=m)


def _hessian_core(s: Section, p: ProjectivePoint) -> HessianData:
    u = move_to_origin(p)
    cols = u.matrix.conj().T  # columns of U^{-1}: images of the basis directions
    value = s(cols[:, 0])
    H = s.hessian_matrix_at(cols[:, 0])
    tangent = cols[:, 1:]
    a = 0.5 * (tangent.T @ H @ tangent) / value
    a = 0.5 * (a + a.T)
    return hessian_from_quadratic(a, s.m)


def hessian_at(s: Section, p: ProjectivePoint, *, residual_tol: float = 1e-8,
               zero_rel_threshold: float = 1e-20) -> HessianData:
    """Hessian data of log|s|^2 at a critical point p.

    Moves p to the chart-0 origin by a unitary involution, normalizes the
    local polynomial to value 1, and reads off the quadratic part.  The
    quadratic coefficients come from contracting the homogeneous Hessian of s
    with the columns of the moving map, which avoids a full recomposition.
    """
    _, res = nabla_prime(s, p)
    if res > residual_tol:
        raise NotCritical(f"residual {res:.3e} exceeds {residual_tol:.1e}")
    if norm_sq(s, p) / section_norm(s) ** 2 < zero_rel_threshold:
        raise OnZeroLocus("point is on the zero locus of the section")
    return _hessian_core(s, p)


def index_of(h: HessianData) -> int:
    """Morse index: n plus the number of negative eigenvalues of the Schur matrix."""
    eig = np.linalg.eigvalsh(h.schur)
    return h.n + int(np.sum(eig < 0.0))


def index_from_full(h: HessianData) -> int:
    """Independent index path: count negative eigenvalues of the full 2n x 2n J."""
    eig = np.linalg.eigvalsh(0.5 * (h.J + h.J.conj().T))
    return int(np.sum(eig < 0.0))


def degeneracy_margin(s: Section, p: ProjectivePoint, **kwargs) -> float:
    """Smallest absolute eigenvalue of the Schur matrix at a critical point."""
    h = hessian_at(s, p, **kwargs)
    return float(np.min(np.abs(np.linalg.eigvalsh(h.schur))))


# ---------------------------------------------------------------------------
# Multistart Newton
# ---------------------------------------------------------------------------


def _chart_starts(n: int, count: int, radius: float) -> np.ndarray:
    """Deterministic quasi-random starts in the complex polydisc of given radius."""
    if count <= 1:
        return np.zeros((max(count, 1), n), dtype=np.complex128)
    sampler = qmc.Halton(d=2 * n, scramble=False)
    u = sampler.random(count)
    r = radius * np.sqrt(u[:, :n])
    theta = 2.0 * np.pi * u[:, n:]
    return r * np.exp(1j * theta)


def _newton_step(A: np.ndarray, B: np.ndarray, eta: np.ndarray):
    """Solve A d + B conj(d) = -eta for a batch; returns (delta, solvable mask)."""
    S, n = eta.shape
    if n == 1:
        a = A[:, 0, 0]
        b = B[:, 0, 0]
        e = eta[:, 0]
        det = (a * a.conj()).real - (b * b.conj()).real
        ok = np.abs(det) > 1e-280
        safe = np.where(ok, det, 1.0)
        delta = (b * e.conj() - a.conj() * e) / safe
        return delta[:, None], ok
    P = A + B
    D = A - B
    M = np.empty((S, 2 * n, 2 * n), dtype=np.float64)
    M[:, :n, :n] = P.real
    M[:, :n, n:] = -D.imag
    M[:, n:, :n] = P.imag
    M[:, n:, n:] = D.real
    rhs = np.concatenate([-eta.real, -eta.imag], axis=1)
    dets = np.linalg.det(M)
    ok = np.isfinite(dets) & (np.abs(dets) > 1e-280)
    delta = np.zeros((S, n), dtype=np.complex128)
    if np.any(ok):
        sol = np.linalg.solve(M[ok], rhs[ok][:, :, None])[:, :, 0]
        delta[ok] = sol[:, :n] + 1j * sol[:, n:]
    return delta, ok


def _chart_residual(cp, m: int, Z: np.ndarray, snorm: float) -> np.ndarray:
    """Invariant residual of the critical system on a batch of chart points."""
    f, g = cp.value_grad(Z)
    zb = Z.conj()
    q = 1.0 + np.einsum("sj,sj->s", Z, zb).real
    eta = g - f[:, None] * (m * zb / q[:, None])
    cross = np.einsum("sj,sj->s", zb, eta)
    r2 = np.einsum("sj,sj->s", eta, eta.conj()).real + np.abs(cross) ** 2
    return np.sqrt(np.maximum(r2 * q ** (1 - m), 0.0)) / snorm


def _newton_chart(cp, m: int, starts: np.ndarray, snorm: float, opts: SolveOptions):
    """Run damped Newton from all starts; return converged points and residuals."""
    n = cp.n
    z = starts.astype(np.complex128).copy()
    alive = np.ones(z.shape[0], dtype=bool)
    done_z: list[np.ndarray] = []
    done_r: list[np.ndarray] = []
    inner_tol = min(1e-13, 0.1 * opts.residual_tol)
    eye = np.eye(n)
    for _ in range(opts.newton_max_iter):
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        Z = z[idx]
        f, g, H = cp.value_grad_hess(Z)
        zb = Z.conj()
        q = 1.0 + np.einsum("sj,sj->s", Z, zb).real
        phi1 = m * zb / q[:, None]
        eta = g - f[:, None] * phi1
        cross = np.einsum("sj,sj->s", zb, eta)
        r2 = (np.einsum("sj,sj->s", eta, eta.conj()).real + np.abs(cross) ** 2)
        resid = np.sqrt(np.maximum(r2 * q ** (1 - m), 0.0)) / snorm
        conv = resid <= inner_tol
        if conv.any():
            done_z.append(Z[conv])
            done_r.append(resid[conv])
            alive[idx[conv]] = False
            keep = ~conv
            idx, Z, f, g, H = idx[keep], Z[keep], f[keep], g[keep], H[keep]
            zb, q, phi1, eta = zb[keep], q[keep], phi1[keep], eta[keep]
            if idx.size == 0:
                continue
        q2 = q ** 2
        phi2h = -m * zb[:, :, None] * zb[:, None, :] / q2[:, None, None]
        phi2m = (m * (eye[None, :, :] * q[:, None, None] - zb[:, :, None] * Z[:, None, :])
                 / q2[:, None, None])
        A = H - phi1[:, :, None] * g[:, None, :] - f[:, None, None] * phi2h
        B = -f[:, None, None] * phi2m
        delta, ok = _newton_step(A, B, eta)
        # damping: cap the step length relative to the current position
        dn = np.sqrt(np.einsum("sj,sj->s", delta, delta.conj()).real)
        zn = np.sqrt(np.einsum("sj,sj->s", Z, zb).real)
        cap = 0.5 * (1.0 + zn)
        fac = np.where(dn > cap, cap / np.maximum(dn, 1e-300), 1.0)
        z[idx] = Z + fac[:, None] * delta
        # prune singular steps and escapees
        out = ~ok | (np.abs(z[idx]).max(axis=1) > 2.0 * opts.keep_radius)
        if out.any():
            alive[idx[out]] = False
    if alive.any():
        # points that stalled above the polish tolerance but may still satisfy
        # the reporting tolerance (near-degenerate criticals)
        Z = z[alive]
        resid = _chart_residual(cp, m, Z, snorm)
        keep = resid <= opts.residual_tol
        if keep.any():
            done_z.append(Z[keep])
            done_r.append(resid[keep])
    if done_z:
        zc = np.concatenate(done_z, axis=0)
        rc = np.concatenate(done_r, axis=0)
    else:
        zc = np.zeros((0, n), dtype=np.complex128)
        rc = np.zeros(0)
    keep = np.abs(zc).max(axis=1) <= opts.keep_radius if zc.size else np.zeros(0, bool)
    return zc[keep], rc[keep]


def _collapse_chart_roots(z: np.ndarray, r: np.ndarray):
    """Collapse numerically identical converged points within one chart."""
    if z.shape[0] == 0:
        return z, r
    view = np.column_stack([z.real, z.imag])
    key = np.round(view, 9)
    _, first = np.unique(key, axis=0, return_index=True)
    first.sort()
    return z[first], r[first]


def _sin_distance(p: ProjectivePoint, q: ProjectivePoint) -> float:
    c = np.vdot(p.coords, q.coords)
    return float(np.linalg.norm(q.coords - c * p.coords))


def find_critical_points(s: Section, opts: SolveOptions | None = None) -> SolveReport:
    """Locate, deduplicate and classify all critical points of a section.

    Runs the multistart Newton solve in every affine chart restricted to the
    polydisc of radius opts.chart_radius (the charts overlap at radius 1, so
    together they cover all of CP^n), filters out the zero locus, merges
    duplicates at FS distance opts.dedup_tol, and attaches Hessian data.  For
    n = 1 the report also carries the zeros of the section and a
    Poincare-Hopf completeness certificate.
    """
    opts = opts or SolveOptions()
    n, m = s.n, s.m
    warnings: list[str] = []
    budget = opts.starts_per_chart
    if budget is None:
        budget = 50 * m ** n
    if budget > opts.max_starts_per_chart:
        warnings.append(
            f"max starts exceeded: requested {budget} per chart, "
            f"capped at {opts.max_starts_per_chart}; results may be partial")
        budget = opts.max_starts_per_chart
    snorm = section_norm(s)
    ssq = snorm ** 2
    charts = {i: dehomogenize(s, i) for i in range(n + 1)}

    starts = _chart_starts(n, budget, opts.chart_radius)
    candidates: list[tuple[float, int, np.ndarray]] = []
    for chart in range(n + 1):
        zc, rc = _newton_chart(charts[chart], m, starts, snorm, opts)
        zc, rc = _collapse_chart_roots(zc, rc)
        for zi, ri in zip(zc, rc):
            candidates.append((float(ri), chart, zi))
    starts_used = budget * (n + 1)

    # map to projective points, re-check the residual in the canonical chart,
    # and drop anything sitting on the zero locus
    pool: list[tuple[float, ProjectivePoint]] = []
    for ri, chart, zi in candidates:
        p = from_chart(zi, chart)
        i = chart_of(p)
        z = to_chart(p, i)
        cp = charts[i]
        f, g = cp.value_grad(z)
        q = 1.0 + float(np.vdot(z, z).real)
        eta = g - f * (m * z.conj() / q)
        res = invariant_residual(eta, z, m, snorm)
        if res > opts.residual_tol:
            continue
        if abs(f) ** 2 * q ** (-m) / ssq < opts.zero_rel_threshold:
            continue
        pool.append((res, p))
    pool.sort(key=lambda t: (t[0], tuple(np.round(t[1].coords.view(np.float64), 9))))

    sin_dedup = math.sin(opts.dedup_tol)
    reps: list[dict] = []
    for res, p in pool:
        merged = False
        for rep in reps:
            d = _sin_distance(rep["point"], p)
            if d <= sin_dedup:
                if d > 1e-11:
                    rep["multiplicity"] += 1
                merged = True
                break
        if not merged:
            reps.append({"point": p, "residual": res, "multiplicity": 1})

    criticals: list[CriticalPoint] = []
    for rep in reps:
        h = _hessian_core(s, rep["point"])
        eig = np.linalg.eigvalsh(h.schur)
        margin = float(np.min(np.abs(eig)))
        idx = index_of(h) if margin >= opts.degen_tol * m else None
        criticals.append(CriticalPoint(
            point=rep["point"], residual=rep["residual"], index=idx,
            nondeg_margin=margin, hessian=h, multiplicity_hint=rep["multiplicity"]))
    criticals.sort(key=lambda c: tuple(np.round(c.point.coords.view(np.float64), 9)))

    zeros: list[tuple[ProjectivePoint, int]] = []
    if n == 1:
        zeros = _clustered_zeros(s, opts.zero_cluster_tol)

    certified = False
    reason = "no completeness certificate for n >= 2"
    if n == 1:
        ph = poincare_hopf_check(SolveReport(criticals, zeros, starts_used,
                                             False, "", warnings))
        certified = bool(ph.applicable and ph.holds)
        reason = ph.reason
    return SolveReport(criticals=criticals, zeros=zeros, starts_used=starts_used,
                       certified_complete=certified, certified_reason=reason,
                       warnings=warnings)


def _clustered_zeros(s: Section, tol: float) -> list[tuple[ProjectivePoint, int]]:
    pts = [f.zero() for f in factor_binary_form(s)]
    pts.sort(key=lambda p: tuple(np.round(p.coords.view(np.float64), 9)))
    sin_tol = math.sin(tol)
    clusters: list[list[ProjectivePoint]] = []
    for p in pts:
        for cl in clusters:
            if _sin_distance(cl[0], p) <= sin_tol:
                cl.append(p)
                break
        else:
            clusters.append([p])
    return [(cl[0], len(cl)) for cl in clusters]


def poincare_hopf_check(report: SolveReport, m: int | None = None) -> PoincareHopfResult:
    """Euler-characteristic audit on CP^1: zeros - saddles + maxima must equal 2.

    Applicable only when every zero is simple and every critical point is
    non-degenerate; otherwise the check is skipped with a reason.
    """
    if not report.zeros:
        return PoincareHopfResult(False, None, None, "no zero data (n >= 2?)")
    if any(mult != 1 for _, mult in report.zeros):
        return PoincareHopfResult(False, None, None,
                                  "skipped: section has a multiple zero")
    if any(c.index is None for c in report.criticals):
        return PoincareHopfResult(False, None, None,
                                  "skipped: degenerate critical point present")
    saddles = sum(1 for c in report.criticals if c.index == 1)
    maxima = sum(1 for c in report.criticals if c.index == 2)
    count = len(report.zeros) - saddles + maxima
    holds = count == 2
    word = "holds" if holds else "FAILS"
    reason = (f"poincare-hopf {word}: {len(report.zeros)} zeros - {saddles} saddles "
              f"+ {maxima} maxima = {count}")
    return PoincareHopfResult(True, holds, count, reason)
