"""Critical points of holomorphic sections of O(m) over complex projective space.

The package computes, classifies and certifies critical points of degree-m
forms under the Fubini-Study geometry: a multistart Newton solver with
Poincare-Hopf completeness audits on CP^1, closed-form quadric classification
through Takagi factorization, spherical-hull containment certificates for
binary forms, and integer-exact Morse counting checks.
"""

from .geometry import (
    ChartUndefined,
    ProjectivePoint,
    UnitaryMap,
    antipode,
    chart_of,
    cp1_to_sphere,
    from_chart,
    fs_distance,
    haar_unitary,
    move_to_origin,
    sphere_angle,
    sphere_to_cp1,
    to_chart,
)
from .sections import (
    ChartPolynomial,
    FSPotentialJet,
    LinearFactor,
    Section,
    ZeroLocus,
    ZeroSection,
    dehomogenize,
    dump_section,
    expand_factors,
    factor_binary_form,
    fs_jet,
    grad_log_norm_sq,
    kernel_basis_A0,
    load_section,
    monomial_section,
    multi_indices,
    nabla_prime,
    norm_sq,
    parse_section,
    random_section,
    save_section,
    section_norm,
)
from .critical import (
    CriticalPoint,
    HessianData,
    NotCritical,
    OnZeroLocus,
    PoincareHopfResult,
    SolveOptions,
    SolveReport,
    degeneracy_margin,
    find_critical_points,
    hessian_at,
    hessian_from_quadratic,
    index_from_full,
    index_of,
    poincare_hopf_check,
)
from .quadric import (
    NotGeneric,
    QuadricCanonicalForm,
    is_smooth_quadric,
    matrix_from_section,
    quadric_critical_set,
    section_from_matrix,
    takagi,
)
from .gauss_lucas import (
    ConeClass,
    GaussLucasCertificate,
    HemisphereViolation,
    SolverIncomplete,
    SphericalPolygon,
    cone_classify,
    gauss_lucas_certify,
    hemisphere_witness,
    locate,
    opposite_polygon,
    spherical_hull,
)
from .morse import (
    MorseSeries,
    counting_series,
    morse_inequality_check,
    poincare_cpn,
    quadric_middle_betti,
    quadric_zero_poincare,
)

__version__ = "0.1.0"
