import itertools

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from gsp4bessel import bessel_nonsplit as bn
from gsp4bessel import group_core as gc
from gsp4bessel import jets as jx
from gsp4bessel.errors import (ChartSingularity, InvalidWeights, JetOrderExhausted,
                               NotRepresentable, SingularBase)


@st.composite
def weights(draw, max_l=11):
    lp = draw(st.integers(1, max_l - 1))
    l = draw(st.integers(lp, max_l))
    d = l - lp
    m = draw(st.sampled_from([x for x in range(-d, d + 1) if (l + lp + x) % 2 == 0]))
    return l, lp, m


angles = st.floats(-0.6, 0.6)
zetas = st.floats(1.1, 2.5)


def test_exists_dimension_examples():
    assert bn.exists_dimension(4, 2, 0) == 1
    assert bn.exists_dimension(4, 2, 3) == 0
    assert bn.exists_dimension(4, 2, 4) == 0
    with pytest.raises(InvalidWeights):
        bn.exists_dimension(2, 3, 0)
    with pytest.raises(InvalidWeights):
        bn.exists_dimension(3, 0, 0)


@given(st.integers(1, 12), st.integers(0, 8), st.integers(-12, 12))
def test_exists_dimension_parity_and_bound(lp, d, m):
    l = lp + d
    expected = (l + lp + m) % 2 == 0 and abs(m) <= d
    assert bn.exists_dimension(l, lp, m) == int(expected)


def test_c1_at_zero_angles():
    z = 1.7
    for l, lp, m in [(6, 2, 2), (7, 3, 0), (9, 3, -2)]:
        if m >= 0:
            expected = z**m * (2 * z**2) ** ((l - lp - m) / 2)
            assert bn.c1(z, 0.0, 0.0, l, lp, m) == pytest.approx(expected)


def test_c1_at_unit_zeta():
    phi2 = 0.3
    assert bn.c1(1.0, 0.0, phi2, 8, 4, 0) == pytest.approx((2 * np.cos(2 * phi2)) ** 2)


@given(weights(), zetas, angles, angles)
def test_c1_forms_agree(w, z, p1, p2):
    l, lp, m = w
    a = bn.c1(z, p1, p2, l, lp, m, 1)
    b = bn.c1(z, p1, p2, l, lp, m, 2)
    assert abs(a - b) <= 1e-11 * max(abs(a), 1e-300)


def test_c1_singular_base():
    # second base vanishes at (1, 0, pi/4) and m > l - lp makes its exponent negative
    with pytest.raises(SingularBase):
        bn.c1(1.0, 0.0, np.pi / 4, 4, 2, 3)


def test_B0_coords_examples():
    assert bn.B0_coords((-0.5, 1.3, 0.1, 0.2), 6, 2, 0) == 0
    lam, l, lp, m, s = 0.8, 7, 3, 2, 0.5
    expected = 2 ** ((l - lp - m) / 2) * lam ** ((l + lp + s) / 2) * np.exp(-4 * np.pi * lam)
    assert bn.B0_coords((lam, 1.0, 0.0, 0.0), l, lp, m, s) == pytest.approx(expected)
    with pytest.raises(NotRepresentable):
        bn.B0_coords((0.5, 1.2, 0.0, 0.0), 4, 2, 3)


def test_B0_global_negative_multiplier():
    g = np.diag([1.0, 1.0, -1.0, -1.0])
    assert bn.B0_global(g, 6, 2, 0) == 0


@given(weights(), st.floats(0.1, 1.5), zetas, angles, angles, st.complex_numbers(max_magnitude=1))
def test_B0_global_matches_chart(w, lam, z, p1, p2, s):
    l, lp, m = w
    p = (lam, z, p1, p2)
    a = bn.B0_global(gc.chart_element_coords("nonsplit", *p), l, lp, m, s)
    b = bn.B0_coords(p, l, lp, m, s)
    assert abs(a - b) <= 1e-10 * abs(b)


@given(weights(), st.integers(0, 2**31 - 1), st.floats(0.5, 2), st.floats(-3, 3),
       st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)))
def test_B0_left_equivariance(w, seed, gamma, delta, xyz):
    l, lp, m = w
    s = 0.3 + 0.2j
    g = gc.random_gsp4(np.random.default_rng(seed), 0.3)
    t, u = gc.torus_nonsplit(gamma, delta), gc.unipotent(*xyz)
    lhs = bn.B0_global(t @ u @ g, l, lp, m, s)
    rhs = bn.BesselCharacter(s, m)(gamma, delta) * bn.ThetaChar()(*xyz) * bn.B0_global(g, l, lp, m, s)
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


@given(weights(), st.integers(0, 2**31 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_B0_right_rotation(w, seed, p3, p4):
    l, lp, m = w
    g = gc.random_gsp4(np.random.default_rng(seed), 0.3)
    lhs = bn.B0_global(g @ gc.rotation(3, p3) @ gc.rotation(4, p4), l, lp, m)
    rhs = np.exp(1j * (l * p3 + lp * p4)) * bn.B0_global(g, l, lp, m)
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_B0_moderate_growth_on_diagonal():
    l, lp, m = 8, 4, 2
    grid = np.geomspace(1, 1e3, 15)
    beta = l + lp
    ratios = []
    for lam, z in itertools.product(grid, grid):
        g = gc.chart_element_coords("nonsplit", lam, z, 0.0, 0.0)
        ratios.append(abs(bn.B0_global(g, l, lp, m)) / gc.group_norm(g) ** beta)
    assert np.isfinite(ratios).all() and max(ratios) < 1.0


def test_nplus_formula_trivial_case():
    one = (1.0, 0.0, 0.0, 0.0, 0.0)
    assert bn.operator_rhs("Nplus", (0.7, 1.4, 0.3, 0.0), one, 5, 5, 0.0, 0) == 0


def test_xminus_kills_B0_on_chart():
    p = (1.0, 1.3, 0.1, 0.05)
    fj = bn.chart_jet(p, 6, 2, 0, 0.0, 1)
    val = bn.operator_rhs("Xminus", p, fj, 6, 2, 0.0, 0)
    assert abs(val) < 1e-8 * abs(fj.value)


def test_operator_formula_singularities():
    fvals = (1.0, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(ChartSingularity):
        bn.operator_rhs("Xplus", (0.5, 1.0, 0.1, 0.2), fvals, 6, 2, 0.0, 0)
    with pytest.raises(ChartSingularity):
        bn.operator_rhs("Xplus", (0.5, 1.3, 0.1, np.pi / 4), fvals, 6, 2, 0.0, 0)


def test_operator_formulas_match_lie_derivatives():
    rep = bn.lowest_weight_check(7, 3, -2, 0.4j, n_points=15, seed=5, operators=True)
    assert max(rep.operator.values()) < 1e-7
    assert rep.passed()


def test_operator_formulas_on_ladder_vector():
    l, lp, m, s = 8, 4, 2, 0.3
    pts = bn.random_chart_points(np.random.default_rng(3), 8)
    vec = bn.ladder(l, lp, m, s, 1, pts[:, 1], pts[:, 2], pts[:, 3])[1]
    derivs = vec.function.chart_derivatives(pts[:, 0])
    F = bn.ladder_global(l, lp, m, s, 1)
    for i, p in enumerate(pts):
        g = gc.chart_element_coords("nonsplit", *p)
        fvals = tuple(d[i] for d in derivs)
        scale = abs(fvals[0])
        assert abs(F(g) - fvals[0]) < 1e-10 * scale
        for op in bn.COMPLEX_OPS:
            rhs = bn.operator_rhs(op, tuple(p), fvals, l, lp + 2, s, m)
            assert abs(rhs - F(g, (op,))) < 1e-7 * scale


@given(weights(), st.floats(0.1, 1.5), zetas, angles, angles)
def test_pde_residuals_vanish(w, lam, z, p1, p2):
    l, lp, m = w
    p = (lam, z, p1, p2)
    res = bn.pde_residuals(p, l, lp, m, 0.0)
    assert np.abs(res).max() <= 1e-9 * abs(bn.B0_coords(p, l, lp, m))


def test_pde_detects_perturbation():
    p = (0.6, 1.4, 0.2, 0.1)
    l, lp, m = 8, 4, 2
    v = jx.chart_jet(p, 1)
    f = bn.B0_coords(v, l, lp, m) * (1 + 0.01 * v[1])
    res = bn.pde_residuals_of(f, p, l, lp, m)
    assert np.abs(res).max() > 1e-5 * abs(f.value)


@given(weights(), zetas, angles, angles)
def test_c1_solves_angular_subsystem(w, z, p1, p2):
    l, lp, m = w
    res = bn.c1_pde_residuals(z, p1, p2, l, lp, m)
    assert np.abs(res).max() <= 1e-9 * abs(bn.c1(z, p1, p2, l, lp, m))


def test_coefficient_examples():
    lam, z, p1, p2 = 1.1, 1.4, 0.2, 0.3
    q = bn.coefficient_list("Q", lam, z, p1, p2)
    assert q["lam"] == pytest.approx(lam * np.sin(2 * p2))
    assert q["phi2"] == pytest.approx(np.sin(p2) ** 2)
    assert q["phi3"] == 0
    assert bn.coefficient_list("H1", lam, z, p1, p2)["zeta"] == pytest.approx(0.5 * z * np.cos(2 * p1))
    assert bn.coefficient_list("P", lam, z, p1, p2)["x"] == pytest.approx(-(z**2) * lam * np.sin(2 * p2))
    assert bn.verify_coefficients("Q", (lam, z, p1, p2)).max_deviation < 1e-6


@pytest.mark.parametrize("tag", ["H1", "H2", "F", "G", "R", "Rp", "P", "Pp", "Q", "Qp"])
def test_coefficient_lists_by_finite_differences(tag):
    rep = bn.verify_coefficients(tag, (0.8, 1.6, -0.25, 0.15))
    assert rep.max_deviation < 1e-6
    assert len(rep.numeric) == len(rep.closed) == 11


def test_change_of_model_identity_and_property(rng):
    l, lp, m, s = 7, 3, 2, 0.4 + 0.3j
    B = lambda g: bn.B0_global(g, l, lp, m, s)  # noqa: E731
    g = gc.random_gsp4(rng, 0.3)
    assert bn.change_of_model(B, np.eye(2), 1.0)(g) == pytest.approx(B(g))
    for A, alpha in [(np.diag([1.0, -1.0]), 1.0), (np.array([[0.6, 0.8], [-0.8, 0.6]]), 1.0),
                     (np.array([[1.2, 0.3], [0.1, 0.9]]), 0.7)]:
        Bp = bn.change_of_model(B, A, alpha)
        a = Bp.block
        S2 = bn.transported_theta_matrix(bn.ThetaChar().matrix, A, alpha)
        theta2 = bn.ThetaChar(S2[0, 0], 2 * S2[0, 1], S2[1, 1])
        gamma, delta, xyz = 1.3, 0.4, (0.2, -0.1, 0.3)
        t2 = np.linalg.inv(a) @ gc.torus_nonsplit(gamma, delta) @ a
        lhs = Bp(t2 @ gc.unipotent(*xyz) @ g)
        rhs = bn.BesselCharacter(s, m)(gamma, delta) * theta2(*xyz) * Bp(g)
        assert abs(lhs - rhs) < 1e-10 * abs(rhs)


def test_rotation_keeps_identity_theta():
    A = np.array([[0.6, 0.8], [-0.8, 0.6]])
    assert np.allclose(bn.transported_theta_matrix(np.eye(2), A, 1.0), np.eye(2))


def test_twist(rng):
    l, lp, m, s = 6, 2, 2, 0.6 - 0.2j
    B = lambda g: bn.B0_global(g, l, lp, m, s)  # noqa: E731
    g = gc.random_gsp4(rng, 0.3)
    assert bn.twist(B, 0.0)(g) == pytest.approx(B(g))
    e = bn.untwisting_exponent(s)
    Bt = bn.twist(B, e)
    gamma, delta, xyz = 1.4, -0.7, (0.1, 0.2, -0.3)
    t = gc.torus_nonsplit(gamma, delta)
    lhs = Bt(t @ gc.unipotent(*xyz) @ g)
    rhs = gc.multiplier(t) ** e * bn.BesselCharacter(s, m)(gamma, delta) * bn.ThetaChar()(*xyz) * Bt(g)
    assert abs(lhs - rhs) < 1e-10 * abs(rhs)
    # the twisted character is trivial on positive scalars
    assert bn.BesselCharacter(s, m)(gamma, 0.0) * (gamma**2) ** e == pytest.approx(1.0)
    with pytest.raises(ValueError):
        bn.twist(B, 0.0, chi_sign=0)


def test_ladder_two_step_shape():
    zeta = np.linspace(1.1, 2.2, 6)
    lam = np.linspace(0.1, 1.0, 5)
    top = bn.ladder_top(10, 6, zeta=zeta)
    Z, L = np.meshgrid(zeta, lam, indexing="ij")
    fit = bn.fit_proportional(top.values(lam), bn.closed_form_top(10, 6, L, Z))
    assert fit.residual < 1e-7
    assert fit.constant == pytest.approx(1.0, rel=1e-8)


def test_ladder_one_step_printed_sign():
    zeta = np.linspace(1.1, 2.2, 6)
    lam = np.linspace(0.1, 1.0, 5)
    top = bn.ladder_top(8, 6, zeta=zeta)
    Z, L = np.meshgrid(zeta, lam, indexing="ij")
    printed = bn.fit_proportional(top.values(lam), bn.closed_form_top(8, 6, L, Z))
    corrected = bn.fit_proportional(top.values(lam), bn.closed_form_top(8, 6, L, Z, corrected=True))
    assert printed.residual > 0.1
    assert corrected.residual < 1e-12
    assert corrected.constant == pytest.approx(1 / 6)


def test_ladder_annihilated_by_nplus_off_axis():
    pts = bn.random_chart_points(np.random.default_rng(11), 20)
    lam = np.linspace(0.1, 1.0, 5)
    for v in bn.ladder(10, 4, 2, 0.0, 2, pts[:, 1], pts[:, 2], pts[:, 3]):
        assert np.max(v.nplus_residual(lam)) < 1e-7


def test_ladder_extended_precision_third_step():
    # cancellation costs about three digits per step in double precision
    pts = bn.random_chart_points(np.random.default_rng(11), 3)
    lam = np.linspace(0.1, 1.0, 5)
    v = bn.ladder(10, 4, 2, 0.0, 3, pts[:, 1], pts[:, 2], pts[:, 3], precision="extended")[-1]
    assert np.max(v.nplus_residual(lam)) < 1e-7


def test_ladder_order_budget():
    with pytest.raises(JetOrderExhausted):
        bn.ladder(10, 4, 0, 0.0, 3, 1.5, order=5)
    with pytest.raises(ValueError):
        bn.ladder(10, 4, 0, 0.0, 4, 1.5)


def test_ladder_weights_by_lie_derivative():
    l, lp, m, s = 8, 4, 0, 0.0
    F = bn.ladder_global(l, lp, m, s, 1)
    g = gc.chart_element_coords("nonsplit", 0.5, 1.4, 0.2, -0.1)
    val = F(g)
    assert F(g, ("Z",)) == pytest.approx(l * val, rel=1e-9)
    assert F(g, ("Zp",)) == pytest.approx((lp + 2) * val, rel=1e-9)


@pytest.mark.parametrize("l, lp, k", [(8, 4, 1), (8, 4, 2), (9, 3, 2)])
def test_ladder_general_shape(l, lp, k):
    zeta = np.linspace(1.1, 2.6, 9)
    lam = np.linspace(0.1, 1.2, 9)
    v = bn.ladder(l, lp, 0, 0.0, k, zeta, check=False)[-1]
    vals = v.values(lam)
    Z, L = np.meshgrid(zeta, lam, indexing="ij")
    target = (vals / (L ** ((l + lp) / 2) * np.exp(-2 * np.pi * L * (Z**2 + Z**-2)))).ravel()
    d = l - lp
    cols = []
    for e in range(k + 1):
        for f in range(k + 1 - e):
            for j in range(-d, d + 1):
                if (j - d) % 2 == 0:
                    cols.append((L ** (e + f) * (Z**2 + Z**-2) ** e * (Z**2 - Z**-2) ** f * Z**j).ravel())
    A = np.array(cols).T
    scale = np.abs(A).max(axis=0)
    coef, *_ = np.linalg.lstsq(A / scale, target, rcond=None)
    resid = np.linalg.norm(A / scale @ coef - target) / np.linalg.norm(target)
    assert resid < 1e-7


def test_linear_independence_examples():
    assert bn.linear_independence_check(6, 2, 0, 0.0, [(), ("Xplus",), ("Xplus", "Xplus")]).independent
    assert not bn.linear_independence_check(6, 2, 0, 0.0, [(), ()], coefficients=[1, 2]).independent
    rep = bn.linear_independence_check(5, 1, 0, 0.0, [("Xplus", "P1plus"), ("Xplus", "Xplus", "Nminus")])
    assert rep.independent


def test_blowup_near_vanishing_base():
    vals = bn.blowup_probe(4, 2, 4)
    assert np.all(np.diff(np.abs(vals)) > 0)
    assert np.abs(vals[-1]) > 1e6
