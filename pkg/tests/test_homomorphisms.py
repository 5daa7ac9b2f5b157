import numpy as np
import pytest
from scipy.linalg import expm

from moser_lab import scenarios as S
from moser_lab.cohomology import (
    adjoint_representation,
    coboundary,
    cocycle_defect,
    constant_cochain,
    pushforward_class,
    sample_tuples,
    zero_cochain,
)
from moser_lab.config import PipelineConfig
from moser_lab.flows import FlowDiverged
from moser_lab.groups import (
    GroupElement,
    UnsupportedGroupError,
    conjugate,
    exp,
    group_distance,
    hat,
    so3,
    su2,
    torus,
    torus_element,
    translation,
    translation_element,
)
from moser_lab.haar import haar_quadrature
from moser_lab.homomorphisms import (
    HomDeformation,
    InvalidDeformationError,
    TransgressionPath,
    Verdict,
    automorphism_flow_eval,
    certify_trivial,
    certify_weakly_trivial,
    conjugation_errors,
    deformation_cocycle,
    eps_derivative,
    eps_grid,
    inner_family,
    moser_reconstruct,
    path_velocity,
    preimage_residual,
    transgress_haar,
    transgress_least_squares,
    transgression_residual,
    verify_deformation_cocycle,
)

SMALL = PipelineConfig(eps_max=0.3, eps_steps=10, resolution=16, sample_count=8)


def circle_samples(n=12, seed=0):
    rng = np.random.default_rng(seed)
    return [torus(1).random_element(rng) for _ in range(n)]


def circle_pairs(n=10, seed=1):
    return sample_tuples(torus(1), 2, n, np.random.default_rng(seed))


def winding(k):
    def phi(h):
        t = S.circle_angle(h)
        return GroupElement(np.diag([np.exp(1j * k * t), np.exp(-1j * k * t)]), su2())
    return HomDeformation(torus(1), su2(), lambda e, h: phi(h), name=f"winding{k}")


# -- eps derivatives ---------------------------------------------------------------

@pytest.mark.parametrize("lam", [0.0, 0.3, 0.99999, 1.0, -1.0])
@pytest.mark.parametrize("richardson", [False, True])
def test_eps_derivative(lam, richardson):
    d = eps_derivative(lambda e: np.array([np.sin(3 * e)]), lam, (-1.0, 1.0), 1e-5, richardson)
    assert d[0] == pytest.approx(3 * np.cos(3 * lam), abs=1e-8)


def test_eps_derivative_outside_domain():
    with pytest.raises(ValueError):
        eps_derivative(lambda e: np.zeros(1), 2.0, (-1.0, 1.0))


# -- deformation cocycle ----------------------------------------------------------

def test_cocycle_of_constant_family_vanishes():
    X = deformation_cocycle(S.constant_hom(), 0.2, use_analytic=False)
    for h in circle_samples():
        assert np.all(X(h) == 0)


def test_shear_cocycle_closed_form():
    d = S.shear_line_r1_to_r2()
    for analytic in (True, False):
        X = deformation_cocycle(d, 0.4, use_analytic=analytic)
        for t in (-0.7, 0.2, 1.5):
            np.testing.assert_allclose(X(translation_element(t)), [0.0, t], atol=1e-9)


def test_inner_family_cocycle_at_zero():
    G = su2()
    u = G.vector([0.3, -0.5, 0.2])
    d = inner_family(S._su2_circle, lambda e: exp(u * e), torus(1), G)
    X = deformation_cocycle(d, 0.0)
    Xbar = coboundary(constant_cochain(X.rep, u.coords))
    for h in circle_samples():
        np.testing.assert_allclose(X(h), -Xbar(h), atol=1e-9)


def test_analytic_matches_finite_difference():
    d = S.circle_in_so3_curved()
    a = deformation_cocycle(d, 0.25)
    f = deformation_cocycle(d, 0.25, use_analytic=False, richardson=True)
    for h in circle_samples():
        np.testing.assert_allclose(a(h), f(h), atol=1e-9)


def test_verify_cocycle_examples():
    pairs = circle_pairs()
    assert verify_deformation_cocycle(S.constant_hom(), 0.1, pairs) == 0.0
    r_pairs = sample_tuples(translation(1), 2, 10, np.random.default_rng(2), 1.0)
    assert verify_deformation_cocycle(S.shear_line_r1_to_r2(), 0.3, r_pairs) <= 1e-8
    assert verify_deformation_cocycle(S.circle_in_su2_conjugated(), 0.3, pairs, use_analytic=False) <= 1e-6


# -- transgression ----------------------------------------------------------------

def test_haar_transgression_examples():
    q = haar_quadrature(torus(1), 64)
    tr = transgress_haar(S.constant_hom(), 0.2, q)
    assert np.all(tr.u.coords == 0) and tr.residual == 0
    tr = transgress_haar(S.circle_in_su2_conjugated(), 0.3, q, circle_samples())
    assert tr.residual <= 1e-8
    np.testing.assert_allclose(tr.u.coords, [-1.0, 0.0, 0.0], atol=1e-12)
    tr = transgress_haar(winding(3), 0.0, q)
    assert np.all(tr.u.coords == 0)


def test_haar_transgression_errors():
    with pytest.raises(UnsupportedGroupError):
        transgress_haar(S.shear_line_r1_to_r2(), 0.0, haar_quadrature(torus(1), 4))
    with pytest.raises(ValueError):
        transgress_haar(S.constant_hom(), 0.0, haar_quadrature(su2(), 4))


@pytest.mark.parametrize("make", [S.circle_in_su2_conjugated, S.circle_in_so3_curved])
@pytest.mark.parametrize("lam", [0.0, 0.35])
def test_haar_and_least_squares_agree(make, lam):
    d = make()
    samples = circle_samples(16)
    a = transgress_haar(d, lam, haar_quadrature(torus(1), 64), samples)
    b = transgress_least_squares(d, lam, samples)
    np.testing.assert_allclose(a.u.coords, b.u.coords, atol=1e-7)
    # the image of a circle has a one-dimensional commutant
    assert b.rank_deficient


def test_least_squares_rejects_shear():
    rng = np.random.default_rng(3)
    samples = [translation(1).random_element(rng, 1.0) for _ in range(10)]
    tr = transgress_least_squares(S.shear_line_r1_to_r2(), 0.2, samples)
    assert tr.u is None
    ts = [abs(float(h.matrix[0, 1])) for h in samples]
    assert tr.residual == pytest.approx(max(ts), rel=1e-12)
    tr = transgress_least_squares(S.constant_hom(), 0.0, circle_samples())
    assert np.all(tr.u.coords == 0) and tr.residual == 0
    with pytest.raises(ValueError):
        transgress_least_squares(S.constant_hom(), 0.0, circle_samples(2))


# -- path velocity and Moser flow ---------------------------------------------------

def test_path_velocity_examples():
    G = so3()
    c = hat([0.2, -0.4, 0.9])
    grid = np.linspace(0, 0.5, 51)
    ident = [G.identity()] * len(grid)
    assert path_velocity(ident, grid, 0.2).norm() == 0
    lin = [GroupElement(expm(e * c), G) for e in grid]
    quad = [GroupElement(expm(e * e * c), G) for e in grid]
    for lam in grid[[0, 7, 25, 50]]:
        np.testing.assert_allclose(path_velocity(lin, grid, lam).matrix, -c, atol=1e-6)
        np.testing.assert_allclose(path_velocity(quad, grid, lam).matrix, -2 * lam * c, atol=1e-6)
    with pytest.raises(ValueError):
        path_velocity(lin, grid, 0.123)


def _path(values, grid):
    return TransgressionPath(grid, values, "UserSupplied", np.zeros(len(grid)))


def test_moser_examples():
    G = so3()
    grid = np.linspace(0, 0.5, 101)
    flat = moser_reconstruct(_path([G.zero_vector()] * len(grid), grid))
    assert all(group_distance(g, G.identity()) <= 1e-15 for g in flat)
    c = G.vector([0.7, -0.2, 1.1])
    path = moser_reconstruct(_path([c] * len(grid), grid))
    err = max(group_distance(g, GroupElement(expm(-e * c.matrix), G)) for g, e in zip(path, grid))
    assert err <= 1e-10


def test_moser_diverges_on_coarse_grid():
    G = so3()
    grid = np.linspace(0, 0.5, 3)
    with pytest.raises(FlowDiverged) as info:
        moser_reconstruct(_path([G.vector([60.0, 0.0, 0.0])] * 3, grid))
    assert info.value.eps == 0.25


def test_path_velocity_transgresses_and_reconstructs():
    d = S.circle_in_so3_curved()
    grid = np.linspace(0, 0.5, 101)
    g_path = [GroupElement(expm(e * S.LX) @ expm(e * e * S.LY), so3()) for e in grid]
    values = [path_velocity(g_path, grid, lam) for lam in grid]
    samples = circle_samples()
    res = [transgression_residual(deformation_cocycle(d, lam), v.coords, samples) for lam, v in zip(grid, values)]
    assert max(res) <= 1e-7
    rebuilt = moser_reconstruct(_path(values, grid))
    errs = conjugation_errors(d.eval, d.at(0.0), rebuilt, grid, samples)
    assert errs.max() <= 1e-5


# -- equivalence invariance -------------------------------------------------------

def _equivalent_pair():
    """phi_eps from circle_in_so3_curved and phi'_eps = I_{k_eps} o phi_eps."""
    d = S.circle_in_so3_curved()
    K = hat([0.1, 0.4, -0.3])

    def k(e):
        return GroupElement(expm(e * K) @ expm(e * e * hat([0.0, 0.2, 0.0])), so3())

    d2 = HomDeformation(d.source, d.target, lambda e, h: conjugate(k(e), d(e, h)))
    return d, d2, k, K


def test_class_at_zero_is_equivalence_invariant():
    d, d2, _, K = _equivalent_pair()
    X, X2 = deformation_cocycle(d, 0.0), deformation_cocycle(d2, 0.0, use_analytic=False)
    du = coboundary(constant_cochain(X.rep, so3().vector_from_matrix(K).coords))
    for h in circle_samples():
        np.testing.assert_allclose(X(h) - X2(h), du(h), atol=1e-6)


def test_pushforward_compatibility():
    d, d2, k, _ = _equivalent_pair()
    lam = 0.3
    kk = k(lam)
    kdot = (k(lam + 1e-5).matrix - k(lam - 1e-5).matrix) / 2e-5
    A = so3().vector_from_matrix(kdot @ kk.matrix.T, tol=1e-6).coords
    X2 = deformation_cocycle(d2, lam, use_analytic=False)
    Xp = pushforward_class(kk, deformation_cocycle(d, lam))
    dA = coboundary(constant_cochain(X2.rep, A))
    for h in circle_samples():
        np.testing.assert_allclose(X2(h) - Xp(h), -dA(h), atol=1e-5)


# -- certificates -------------------------------------------------------------------

def test_certify_constant():
    c = certify_trivial(S.constant_hom(), SMALL)
    assert c.verdict is Verdict.TRIVIALLY_CERTIFIED and c.certified
    assert all(group_distance(g, su2().identity()) == 0 for g in c.g_path)
    assert np.all(c.conjugation_error == 0)
    assert c.local_eps_max == SMALL.eps_max


def test_certify_shear():
    c = certify_trivial(S.shear_line_r1_to_r2(), SMALL)
    assert c.verdict is Verdict.NOT_TRANSGRESSIBLE
    assert c.transgression.residuals.min() >= SMALL.sample_radius * 0.5
    assert c.failing_eps == 0.0 and c.local_eps_max is None
    assert np.all(np.isnan(c.conjugation_error))


@pytest.mark.parametrize("make", [S.circle_in_su2_conjugated, S.circle_in_so3_curved, S.heisenberg_inner])
def test_certify_and_sign_soundness(make):
    d = make()
    c = certify_trivial(d, SMALL)
    assert c.verdict is Verdict.TRIVIALLY_CERTIFIED
    assert c.max_conjugation_error <= 1e-6
    wrong = moser_reconstruct(c.transgression.negated())
    samples = circle_samples(8) if d.source.is_compact else [translation_element(t) for t in (-0.8, 0.5, 0.9)]
    errs = conjugation_errors(d.eval, d.at(0.0), wrong, c.eps_grid, samples)
    assert errs.max() > SMALL.tolerances.certificate_tol


def test_certify_reports_flow_divergence():
    G = so3()
    A = 60 * S.LX
    d = inner_family(S._so3_circle, lambda e: GroupElement(expm(e * A), G), torus(1), G,
                     d_path=lambda e: A @ expm(e * A))
    c = certify_trivial(d, SMALL.with_(eps_steps=4))
    assert c.verdict is Verdict.FLOW_DIVERGED
    assert c.failing_eps == pytest.approx(0.075)


def test_certify_rejects_invalid_input():
    def bad(e, h):
        t = S.circle_angle(h)
        return GroupElement(np.diag([np.exp(1j * t * t), np.exp(-1j * t * t)]), su2())

    with pytest.raises(InvalidDeformationError):
        certify_trivial(HomDeformation(torus(1), su2(), bad), SMALL)
    with pytest.raises(InvalidDeformationError):
        certify_trivial(S.constant_hom(), SMALL.with_(eps_max=2.0))


# -- weak triviality ------------------------------------------------------------------

def test_automorphism_flow_examples():
    G = so3()
    rng = np.random.default_rng(4)
    g = G.random_element(rng)
    zero = zero_cochain(adjoint_representation(G), 1)
    assert group_distance(automorphism_flow_eval(lambda e: zero, g, 0.4), g) <= 1e-12
    u = G.vector([0.4, 0.1, -0.6])
    Z = coboundary(constant_cochain(adjoint_representation(G), u.coords))
    out = automorphism_flow_eval(lambda e: Z, g, 0.4, steps=100)
    closed = expm(-0.4 * u.matrix) @ g.matrix @ expm(0.4 * u.matrix)
    assert np.linalg.norm(out.matrix - closed) <= 1e-9
    for a, b in sample_tuples(G, 2, 10, rng):
        F = lambda x: automorphism_flow_eval(lambda e: Z, x, 0.4)
        assert group_distance(F(a @ b), F(a) @ F(b)) <= 1e-7


def test_weak_constant_family():
    G = su2()
    zero = zero_cochain(adjoint_representation(G), 1)
    c = certify_weakly_trivial(S.constant_hom(), lambda e: zero, lambda e: G.zero_vector(), SMALL)
    assert c.verdict is Verdict.TRIVIALLY_CERTIFIED
    assert np.all(c.extras["preimage_residual"] == 0)


def test_weak_from_known_path():
    """Z_eps = delta(path_velocity) untwists a family built from a known conjugating path."""
    d = S.circle_in_so3_curved()
    G = so3()
    config = SMALL.with_(eps_steps=6, sample_count=6, flow_substeps=40)

    def velocity(e):
        g = expm(e * S.LX) @ expm(e * e * S.LY)
        gdot = S.LX @ g + 2 * e * expm(e * S.LX) @ S.LY @ expm(e * e * S.LY)
        return G.vector_from_matrix(-gdot @ g.T).coords

    rep = adjoint_representation(G)
    c = certify_weakly_trivial(d, lambda e: coboundary(constant_cochain(rep, velocity(e))),
                               lambda e: G.zero_vector(), config)
    assert c.verdict is Verdict.TRIVIALLY_CERTIFIED
    assert c.extras["preimage_residual"].max() <= 1e-9
    np.testing.assert_array_equal(c.eps_grid, eps_grid(config))


def test_weak_rejects_scaled_preimage():
    d, _, u_path = S.weak_trivial_inner()
    _, wrong, _ = S.weak_pair(2.0)
    samples = circle_samples(8)
    grid = eps_grid(SMALL)
    c = certify_weakly_trivial(d, wrong, u_path, SMALL, samples)
    assert c.verdict is Verdict.PREIMAGE_REJECTED
    assert c.failing_eps == 0.0
    # with Z doubled the residual is exactly the cocycle itself
    Xmax = [max(np.linalg.norm(deformation_cocycle(d, e)(h)) for h in samples) for e in grid]
    np.testing.assert_allclose(c.extras["preimage_residual"], Xmax, rtol=1e-8)
    _, right, _ = S.weak_pair(1.0)
    assert preimage_residual(d, right, u_path, grid, samples).max() <= 1e-9


def test_verdict_strings():
    assert str(Verdict.TRIVIALLY_CERTIFIED) == "TriviallyCertified"
    assert Verdict("NotTransgressible") is Verdict.NOT_TRANSGRESSIBLE


def test_torus_helpers_roundtrip():
    assert S.circle_angle(torus_element(1.2)) == pytest.approx(1.2)
