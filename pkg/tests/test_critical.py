import numpy as np
import pytest

from cpcrit import (
    NotCritical,
    OnZeroLocus,
    ProjectivePoint,
    Section,
    SolveOptions,
    degeneracy_margin,
    dehomogenize,
    find_critical_points,
    fs_distance,
    haar_unitary,
    hessian_at,
    hessian_from_quadratic,
    index_from_full,
    index_of,
    move_to_origin,
    poincare_hopf_check,
    random_section,
)

MODEL_QUADRIC = Section(1, 2, {(2, 0): 1.0, (0, 2): 2.0})


def conjugated_fd_hessian(s, p, h=1e-4):
    """Finite-difference oracle for the block Hessian at a critical point.

    Moves the section so the point sits at the chart-0 origin, takes central
    second differences of u = log|f|^2 - m log(1+|z|^2) in the real chart
    coordinates (x_1..x_n, y_1..y_n), and conjugates with
    W = (1/sqrt2) [[I, -iI], [-iI, I]] to match the complex block convention.
    """
    u = move_to_origin(p)
    s2 = s.compose_linear(u.inverse().matrix)
    cp = dehomogenize(s2, 0)
    n, m = s.n, s.m

    def val(x):
        z = x[:n] + 1j * x[n:]
        f = complex(cp.value(z))
        return np.log(abs(f) ** 2) - m * np.log(1.0 + float(np.dot(x, x)))

    dim = 2 * n
    H = np.zeros((dim, dim))
    for i in range(dim):
        for j in range(dim):
            x = np.zeros(dim)
            x[i] += h; x[j] += h; fpp = val(x)
            x = np.zeros(dim)
            x[i] += h; x[j] -= h; fpm = val(x)
            x = np.zeros(dim)
            x[i] -= h; x[j] += h; fmp = val(x)
            x = np.zeros(dim)
            x[i] -= h; x[j] -= h; fmm = val(x)
            H[i, j] = (fpp - fpm - fmp + fmm) / (4 * h * h)
    eye = np.eye(n)
    W = np.block([[eye, -1j * eye], [-1j * eye, eye]]) / np.sqrt(2.0)
    return W @ H @ W.conj().T


# -- hessian ------------------------------------------------------------------

def test_hessian_monomial_all_negative():
    s = Section(2, 3, {(3, 0, 0): 1.0})
    h = hessian_at(s, ProjectivePoint([1, 0, 0]))
    assert np.allclose(h.A, 0)
    assert np.allclose(h.schur, -3 * np.eye(2))
    assert index_of(h) == 4  # 2n: a maximum of |s|^2
    assert np.all(np.linalg.eigvalsh(h.J) < 0)


def test_hessian_model_quadric_values():
    h0 = hessian_at(MODEL_QUADRIC, ProjectivePoint([1, 0]))
    assert h0.A[0, 0] == pytest.approx(4j)
    assert h0.schur[0, 0] == pytest.approx(6.0)
    assert index_of(h0) == 1

    h1 = hessian_at(MODEL_QUADRIC, ProjectivePoint([0, 1]))
    assert h1.A[0, 0] == pytest.approx(1j)
    assert h1.schur[0, 0] == pytest.approx(-1.5)
    assert index_of(h1) == 2


def test_hessian_rejects_non_critical_and_zero_locus():
    with pytest.raises(NotCritical):
        hessian_at(MODEL_QUADRIC, ProjectivePoint([1, 1]))
    zero_dir = ProjectivePoint([1, 1j / np.sqrt(2)])  # Z0^2 + 2 Z1^2 = 0 there
    with pytest.raises((NotCritical, OnZeroLocus)):
        hessian_at(MODEL_QUADRIC, zero_dir)


def test_index_dual_path_random():
    rng = np.random.default_rng(30)
    for _ in range(40):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 7))
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a = 0.5 * (a + a.T)
        h = hessian_from_quadratic(a, m)
        assert np.abs(h.J - h.J.conj().T).max() <= 1e-10
        assert np.abs(h.A - h.A.T).max() <= 1e-10
        assert index_of(h) == index_from_full(h)


def test_hessian_matches_finite_differences():
    cases = []
    rep = find_critical_points(Section(1, 3, {(0, 3): 1.0, (3, 0): -1.0}))
    cases += [(Section(1, 3, {(0, 3): 1.0, (3, 0): -1.0}), c.point) for c in rep.criticals]
    cases += [(MODEL_QUADRIC, ProjectivePoint([1, 0])),
              (MODEL_QUADRIC, ProjectivePoint([0, 1]))]
    for s, p in cases:
        fd = conjugated_fd_hessian(s, p)
        h = hessian_at(s, p)
        scale = max(np.abs(h.J).max(), 1.0)
        assert np.abs(fd - h.J).max() <= 1e-5 * scale


def test_degeneracy_margin_examples():
    # diagonal quadratic part with an entry at m/2 is exactly degenerate
    m = 4
    h = hessian_from_quadratic(np.diag([m / 2.0, 0.3]), m)
    eig = np.linalg.eigvalsh(h.schur)
    assert np.min(np.abs(eig)) == pytest.approx(0.0, abs=1e-12)
    # no quadratic part: margin is m
    h0 = hessian_from_quadratic(np.zeros((2, 2)), m)
    assert np.min(np.abs(np.linalg.eigvalsh(h0.schur))) == pytest.approx(m)
    s = Section(2, 3, {(3, 0, 0): 1.0})
    assert degeneracy_margin(s, ProjectivePoint([1, 0, 0])) == pytest.approx(3.0)


# -- solver -------------------------------------------------------------------

def test_solver_diagonal_quadric_family():
    rng = np.random.default_rng(31)
    for n in (1, 2, 3):
        a = np.sort(0.4 + rng.random(n + 1))
        while np.min(np.diff(a)) < 0.08:
            a = np.sort(0.4 + rng.random(n + 1))
        coeffs = {}
        for i, ai in enumerate(a):
            alpha = [0] * (n + 1)
            alpha[i] = 2
            coeffs[tuple(alpha)] = ai
        s = Section(n, 2, coeffs)
        report = find_critical_points(s)
        assert len(report.criticals) == n + 1
        for i in range(n + 1):
            e = np.zeros(n + 1)
            e[i] = 1.0
            hits = [c for c in report.criticals
                    if fs_distance(c.point, ProjectivePoint(e)) <= 1e-7]
            assert len(hits) == 1
            assert hits[0].index == n + i
            assert hits[0].residual <= 1e-10


def test_solver_fermat_cubic_closed_form():
    s = Section(1, 3, {(0, 3): 1.0, (3, 0): -1.0})
    report = find_critical_points(s)
    assert len(report.criticals) == 5
    # closed form: chart-0 equation reduces to z^2 = -conj(z), giving z = 0
    # and the three cube roots of -1; chart 1 adds w = 0
    expected = [ProjectivePoint([1, 0]), ProjectivePoint([0, 1])]
    expected += [ProjectivePoint([1, z]) for z in np.exp(1j * np.pi * np.array([1, 1 / 3, -1 / 3]))]
    indices = {2: 0, 1: 0}
    for c in report.criticals:
        hits = [e for e in expected if fs_distance(c.point, e) <= 1e-9]
        assert len(hits) == 1
        indices[c.index] += 1
    assert indices == {2: 2, 1: 3}
    assert report.certified_complete
    assert len(report.zeros) == 3 and all(mult == 1 for _, mult in report.zeros)


def test_solver_monomial_binary_form():
    s = Section(1, 5, {(0, 5): 1.0})
    report = find_critical_points(s)
    assert len(report.criticals) == 1
    c = report.criticals[0]
    assert c.point.isclose(ProjectivePoint([0, 1]), tol=1e-10)
    assert c.index == 2
    assert report.zeros == [(report.zeros[0][0], 5)]
    assert report.zeros[0][0].isclose(ProjectivePoint([1, 0]), tol=1e-10)
    # with a multiple zero the completeness audit must be skipped, not failed
    ph = poincare_hopf_check(report, 5)
    assert not ph.applicable and "multiple zero" in ph.reason


def test_solver_unitary_equivariance():
    s = random_section(1, 4, 55)
    u = haar_unitary(2, 600)
    r1 = find_critical_points(s)
    r2 = find_critical_points(s.acted_by(u))
    assert len(r1.criticals) == len(r2.criticals)
    for c in r1.criticals:
        img = u.apply(c.point)
        hits = [d for d in r2.criticals if fs_distance(d.point, img) <= 1e-7]
        assert len(hits) == 1
        assert hits[0].index == c.index


def test_poincare_hopf_on_generic_sections():
    for seed in range(6):
        s = random_section(1, 4, 700 + seed)
        report = find_critical_points(s)
        ph = poincare_hopf_check(report, 4)
        assert ph.applicable and ph.holds
        assert report.certified_complete
        for c in report.criticals:
            assert c.residual <= 1e-10
            assert c.index == index_from_full(c.hessian)


def test_poincare_hopf_m2_generic():
    report = find_critical_points(MODEL_QUADRIC)
    ph = poincare_hopf_check(report, 2)
    assert ph.applicable and ph.holds and ph.count == 2


def test_degeneracy_margin_positive_on_random_sections():
    hits = 0
    for seed in range(40):
        n = 1 + seed % 2
        m = 2 + seed % 4
        s = random_section(n, m, 800 + seed)
        report = find_critical_points(s)
        for c in report.criticals:
            if c.nondeg_margin < 1e-6 * m or c.index is None:
                hits += 1
    assert hits == 0


def test_budget_cap_reported():
    opts = SolveOptions(max_starts_per_chart=10)
    report = find_critical_points(Section(1, 3, {(0, 3): 1.0, (3, 0): -1.0}), opts)
    assert report.warnings and "max starts exceeded" in report.warnings[0]
