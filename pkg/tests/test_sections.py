import math

import numpy as np
import pytest

from cpcrit import (
    ProjectivePoint,
    Section,
    ZeroSection,
    chart_of,
    cp1_to_sphere,
    dehomogenize,
    dump_section,
    expand_factors,
    factor_binary_form,
    from_chart,
    fs_jet,
    grad_log_norm_sq,
    haar_unitary,
    kernel_basis_A0,
    multi_indices,
    nabla_prime,
    norm_sq,
    parse_section,
    random_section,
    section_norm,
    to_chart,
)
from cpcrit.sections import invariant_residual


def rand_point(rng, n):
    return ProjectivePoint(rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1))


# -- construction -------------------------------------------------------------

def test_rejects_zero_section():
    with pytest.raises(ZeroSection):
        Section(1, 2, {})
    with pytest.raises(ZeroSection):
        Section(1, 2, {(2, 0): 0.0})


def test_rejects_bad_multi_index():
    with pytest.raises(ValueError):
        Section(1, 2, {(1, 0): 1.0})
    with pytest.raises(ValueError):
        Section(1, 2, {(1, 1, 0): 1.0})


# -- dehomogenize -------------------------------------------------------------

def test_dehomogenize_examples():
    s = Section(1, 2, {(2, 0): 1.0, (0, 2): 2.0})
    f0 = dehomogenize(s, 0)
    assert f0.poly == {(0,): 1.0, (2,): 2.0}
    s2 = Section(2, 3, {(3, 0, 0): 1.0})
    assert dehomogenize(s2, 0).poly == {(0, 0): 1.0}
    s3 = Section(1, 2, {(1, 1): 1.0})
    assert dehomogenize(s3, 1).poly == {(1,): 1.0}


def test_dehomogenize_gradient_matches_finite_differences():
    rng = np.random.default_rng(10)
    s = random_section(2, 4, 77)
    cp = dehomogenize(s, 0)
    h = 1e-5
    for _ in range(10):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        _, g = cp.value_grad(z)
        for j in range(2):
            e = np.zeros(2, dtype=complex)
            e[j] = 1.0
            # holomorphic: d/dz = (d/dx - i d/dy) / 2
            dx = (cp.value(z + h * e) - cp.value(z - h * e)) / (2 * h)
            dy = (cp.value(z + 1j * h * e) - cp.value(z - 1j * h * e)) / (2 * h)
            fd = (dx - 1j * dy) / 2
            assert abs(fd - g[j]) <= 1e-7 * max(1.0, abs(g[j]))


# -- fs_jet -------------------------------------------------------------------

def test_fs_jet_at_origin():
    jet = fs_jet(np.zeros(3, dtype=complex), 4)
    assert jet.value == 0.0
    assert np.allclose(jet.d1, 0)
    assert np.allclose(jet.d2_holo, 0)
    assert np.allclose(jet.d2_mixed, 4 * np.eye(3))


def test_fs_jet_explicit_n1():
    jet = fs_jet([1.0 + 0j], 2)
    assert jet.d1[0] == pytest.approx(1.0)
    assert jet.d2_mixed[0, 0] == pytest.approx(0.5)


def test_fs_jet_matches_finite_differences():
    rng = np.random.default_rng(11)
    m, n = 3, 2
    h = 1e-5

    def phi(z):
        return m * math.log(1.0 + float(np.vdot(z, z).real))

    for _ in range(10):
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        jet = fs_jet(z, m)
        for j in range(n):
            e = np.zeros(n, dtype=complex)
            e[j] = 1.0
            dx = (phi(z + h * e) - phi(z - h * e)) / (2 * h)
            dy = (phi(z + 1j * h * e) - phi(z - 1j * h * e)) / (2 * h)
            fd = (dx - 1j * dy) / 2
            assert abs(fd - jet.d1[j]) <= 1e-6
        h2 = 1e-4  # wider step: nested differencing amplifies roundoff
        for j in range(n):
            for k in range(n):
                ej = np.zeros(n, dtype=complex)
                ej[j] = 1.0

                def d1k(w, k=k):
                    e = np.zeros(n, dtype=complex)
                    e[k] = 1.0
                    dx = (phi(w + h2 * e) - phi(w - h2 * e)) / (2 * h2)
                    dy = (phi(w + 1j * h2 * e) - phi(w - 1j * h2 * e)) / (2 * h2)
                    return (dx - 1j * dy) / 2

                dxx = (d1k(z + h2 * ej) - d1k(z - h2 * ej)) / (2 * h2)
                dyy = (d1k(z + 1j * h2 * ej) - d1k(z - 1j * h2 * ej)) / (2 * h2)
                holo = (dxx - 1j * dyy) / 2
                mixed = (dxx + 1j * dyy) / 2  # this is d/dzbar_j d/dz_k phi
                assert abs(holo - jet.d2_holo[j, k]) <= 1e-6
                assert abs(mixed - jet.d2_mixed[k, j]) <= 1e-6


def test_fs_jet_mixed_positive_definite():
    rng = np.random.default_rng(12)
    for _ in range(20):
        z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        jet = fs_jet(z, 2)
        eig = np.linalg.eigvalsh(jet.d2_mixed)
        assert np.all(eig > 0)
        assert np.abs(jet.d2_holo - jet.d2_holo.T).max() <= 1e-14


# -- nabla_prime --------------------------------------------------------------

def test_nabla_prime_vanishes_at_monomial_center():
    s = Section(2, 3, {(3, 0, 0): 1.0})
    eta, res = nabla_prime(s, ProjectivePoint([1, 0, 0]))
    assert np.allclose(eta, 0)
    assert res == 0.0


def test_nabla_prime_vanishes_at_quadric_points():
    s = Section(1, 2, {(2, 0): 1.0, (0, 2): 2.0})
    for p in ([1, 0], [0, 1]):
        _, res = nabla_prime(s, ProjectivePoint(p))
        assert res <= 1e-15


def test_nabla_prime_linear_critical_point_by_grid_search():
    # for s = Z0 + Z1 the covariant derivative is (1 - conj(z)) / (1 + |z|^2),
    # vanishing exactly at z = 1; a brute-force residual scan must agree
    s = Section(1, 1, {(1, 0): 1.0, (0, 1): 1.0})
    cp = dehomogenize(s, 0)
    z = 1.0 + 0j
    f, g = cp.value_grad([z])
    eta = g - f * fs_jet([z], 1).d1
    assert abs(eta[0]) <= 1e-15

    grid = np.linspace(-2, 2, 81)
    best, best_r = None, np.inf
    for x in grid:
        for y in grid:
            w = complex(x, y)
            _, res = nabla_prime(s, from_chart([w], 0))
            if res < best_r:
                best, best_r = w, res
    assert abs(best - 1.0) <= 0.06  # grid resolution
    _, res_inf = nabla_prime(s, ProjectivePoint([0, 1]))
    assert res_inf > 1e-2


def test_nabla_prime_residual_chart_independent():
    rng = np.random.default_rng(13)
    s = random_section(1, 4, 5)
    snorm = section_norm(s)
    for _ in range(20):
        # pick points in the chart overlap, away from both centers
        z = (0.5 + rng.random()) * np.exp(2j * np.pi * rng.random())
        vals = []
        for i in (0, 1):
            p = from_chart([z] if i == 0 else [1 / z], i)
            cp = dehomogenize(s, i)
            w = to_chart(p, i)
            f, g = cp.value_grad(w)
            eta = g - f * fs_jet(w, s.m).d1
            vals.append(invariant_residual(eta, w, s.m, snorm))
        assert abs(vals[0] - vals[1]) <= 1e-10 * max(1.0, vals[0])


# -- norm_sq ------------------------------------------------------------------

def test_norm_sq_examples():
    s = Section(2, 3, {(3, 0, 0): 1.0})
    assert norm_sq(s, ProjectivePoint([1, 0, 0])) == pytest.approx(1.0)
    assert norm_sq(s, ProjectivePoint([0, 0, 1])) == pytest.approx(0.0, abs=1e-30)


def test_norm_sq_chart_independent():
    rng = np.random.default_rng(14)
    s = random_section(2, 3, 6)
    for _ in range(10):
        p = rand_point(rng, 2)
        vals = []
        for i in range(3):
            if abs(p.coords[i]) < 0.3:
                continue
            z = to_chart(p, i)
            f = complex(dehomogenize(s, i).value(z))
            q = 1.0 + float(np.vdot(z, z).real)
            vals.append(abs(f) ** 2 * q ** (-s.m))
        assert max(vals) - min(vals) <= 1e-12 * max(vals)


def test_norm_sq_unitary_invariant():
    rng = np.random.default_rng(15)
    s = random_section(2, 4, 7)
    for k in range(10):
        u = haar_unitary(3, 200 + k)
        p = rand_point(rng, 2)
        lhs = norm_sq(s.acted_by(u), u.apply(p))
        rhs = norm_sq(s, p)
        assert abs(lhs - rhs) <= 1e-11 * max(1.0, rhs)


# -- gradient of log|s|^2 -----------------------------------------------------

def test_grad_log_vanishes_at_critical_point():
    s = Section(1, 2, {(2, 0): 1.0, (0, 2): 2.0})
    g = grad_log_norm_sq(s, ProjectivePoint([1, 0]))
    assert np.linalg.norm(g) <= 1e-14


def test_grad_log_points_toward_antipode_of_zero():
    # for a linear form the flow ascends toward the antipode of its zero
    rng = np.random.default_rng(16)
    for k in range(10):
        w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        s = Section(1, 1, {(1, 0): w[0], (0, 1): w[1]})
        zero = factor_binary_form(s)[0].zero()
        target = cp1_to_sphere(ProjectivePoint([w[0].conjugate(), w[1].conjugate()]))
        q = rand_point(rng, 1)
        i = chart_of(q)
        z = to_chart(q, i)
        g = grad_log_norm_sq(s, q)
        # push the chart gradient to the sphere by finite differences
        h = 1e-6
        base = cp1_to_sphere(q)
        jac = np.zeros((3, 2))
        for col, dz in enumerate([h, 1j * h]):
            plus = cp1_to_sphere(from_chart([z[0] + dz], i))
            minus = cp1_to_sphere(from_chart([z[0] - dz], i))
            jac[:, col] = (plus - minus) / (2 * h)
        pushed = jac @ g
        geo = target - np.dot(base, target) * base
        if np.linalg.norm(geo) < 1e-6:
            continue  # q essentially at the target
        cosang = np.dot(pushed, geo) / (np.linalg.norm(pushed) * np.linalg.norm(geo))
        assert cosang >= 1.0 - 1e-6


def test_grad_log_additive_over_factors():
    rng = np.random.default_rng(17)
    s = random_section(1, 5, 8)
    factors = factor_binary_form(s)
    for _ in range(10):
        q = rand_point(rng, 1)
        total = grad_log_norm_sq(s, q)
        parts = sum(grad_log_norm_sq(f.as_section(), q) for f in factors)
        assert np.linalg.norm(total - parts) <= 1e-10 * max(1.0, np.linalg.norm(total))


# -- factorization ------------------------------------------------------------

def test_factor_cube_roots_of_unity():
    s = Section(1, 3, {(0, 3): 1.0, (3, 0): -1.0})
    key = lambda w: (round(w.real, 9), round(w.imag, 9))
    zeros = sorted((complex(to_chart(f.zero(), 0)[0]) for f in factor_binary_form(s)),
                   key=key)
    expected = sorted((np.exp(2j * np.pi * k / 3) for k in range(3)), key=key)
    for a, b in zip(zeros, expected):
        assert abs(a - b) <= 1e-10


def test_factor_monomial_multiplicity():
    s = Section(1, 4, {(0, 4): 1.0})
    factors = factor_binary_form(s)
    assert len(factors) == 4
    for f in factors:
        assert f.zero().isclose(ProjectivePoint([1, 0]), tol=1e-12)


def test_factor_reconstruction_random():
    for seed in range(5):
        s = random_section(1, 5, 1000 + seed)
        t = expand_factors(factor_binary_form(s))
        # compare up to an overall complex scale
        key = max(s.coeffs, key=lambda a: abs(s.coeffs[a]))
        scale = s.coeffs[key] / t.coeffs[key]
        for alpha in s.coeffs:
            assert abs(s.coeffs[alpha] - scale * t.coeffs.get(alpha, 0.0)) \
                <= 1e-10 * abs(s.coeffs[key])


# -- ensemble -----------------------------------------------------------------

def test_random_section_deterministic():
    a = random_section(2, 3, 42)
    b = random_section(2, 3, 42)
    assert a.coeffs == b.coeffs
    c = random_section(2, 3, 43)
    assert a.coeffs != c.coeffs


def test_ensemble_norm_sq_mean_invariance():
    # paired samples: E norm_sq is the same at p and at U p, within 3 SE
    n, m, N = 1, 3, 10000
    rng = np.random.default_rng(18)
    p = rand_point(rng, n)
    u = haar_unitary(n + 1, 300)
    up = u.apply(p)
    vals_p = np.empty(N)
    vals_up = np.empty(N)
    for k in range(N):
        s = random_section(n, m, np.random.SeedSequence(entropy=999, spawn_key=(k,)))
        vals_p[k] = norm_sq(s, p)
        vals_up[k] = norm_sq(s, up)
    diff = vals_p - vals_up
    se = diff.std(ddof=1) / math.sqrt(N)
    assert abs(diff.mean()) <= 3 * se
    # and the mean itself is the constant 1 for the normalized ensemble
    se_p = vals_p.std(ddof=1) / math.sqrt(N)
    assert abs(vals_p.mean() - 1.0) <= 3 * se_p


# -- kernel of the covariant derivative at the origin -------------------------

def test_kernel_basis_examples():
    assert set(kernel_basis_A0(1, 2)) == {(2, 0), (0, 2)}
    assert set(kernel_basis_A0(2, 1)) == {(1, 0, 0)}


def test_kernel_basis_count():
    for n, m in [(1, 3), (2, 2), (2, 4), (3, 3)]:
        total = len(multi_indices(n + 1, m))
        assert total == math.comb(m + n, n)
        assert len(kernel_basis_A0(n, m)) == total - n


def test_kernel_sections_are_critical_at_origin():
    p = ProjectivePoint([1, 0, 0])
    for alpha in kernel_basis_A0(2, 3):
        s = Section(2, 3, {alpha: 1.0})
        eta, _ = nabla_prime(s, p)
        assert np.allclose(eta, 0.0, atol=1e-14)


# -- serialization ------------------------------------------------------------

def test_serialization_round_trip_exact():
    s = random_section(2, 3, 11)
    t = parse_section(dump_section(s))
    assert t.n == s.n and t.m == s.m
    assert t.coeffs == s.coeffs  # bit-exact through repr round trip


def test_serialization_file(tmp_path):
    from cpcrit import load_section, save_section
    s = random_section(1, 4, 12)
    path = tmp_path / "s.txt"
    save_section(s, path)
    assert load_section(path).coeffs == s.coeffs
