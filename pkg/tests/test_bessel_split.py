import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from gsp4bessel import bessel_split as bs
from gsp4bessel import group_core as gc
from gsp4bessel import jets as jx
from gsp4bessel.config import SplitConfig
from gsp4bessel.errors import ChartSingularity

regular = st.tuples(
    st.floats(0.2, 1.5) | st.floats(-1.5, -0.2),
    st.floats(-1.5, 1.5),
    st.floats(-1.2, 1.2),
    st.floats(-0.7, 0.7),
)
small = st.complex_numbers(max_magnitude=1)


def _regular(p):
    first, second = bs.split_bases(*p[1:])
    return min(abs(first), abs(second)) > 0.05 and abs(np.cos(2 * p[3])) > 0.05


def _test_function(c):
    return jx.exp(0.3 * c[0] + 0.2j * c[1] + 0.5 * jx.sin(c[2]) + 0.4j * jx.cos(c[3])) * (1 + 0.1 * c[1] ** 2)


def test_f_split_examples():
    l, lp = 6, 2
    lam, zeta = 0.5, 0.3
    # at phi = 0 both bases are real and the second vanishes unless l - lp = 0
    assert bs.f_split((lam, zeta, 0.0, 0.0), l, lp) == 0
    expected = lam ** ((l + lp) / 2) * np.exp(4 * np.pi * lam * zeta)
    assert bs.f_split((lam, zeta, 0.0, 0.0), 4, 4) == pytest.approx(expected)
    # the negative branch uses |lam|
    v_pos = bs.f_split((lam, zeta, 0.3, 0.2), l, lp, 0.2, 0.1)
    v_neg = bs.f_split((-lam, zeta, 0.3, 0.2), l, lp, 0.2, 0.1)
    assert v_neg == pytest.approx(v_pos * np.exp(-8 * np.pi * lam * zeta))


def test_log_route_matches_direct():
    p = (0.7, 1.2, 0.4, 0.2)
    v = complex(bs.f_split(p, 7, 3, 0.3, -0.1))
    logabs, arg = bs.log_f_split(p, 7, 3, 0.3, -0.1)
    assert logabs == pytest.approx(np.log(abs(v)), rel=1e-12)
    assert np.exp(1j * arg) == pytest.approx(v / abs(v), rel=1e-12)
    big = (40.0, 40.0, 0.4, 0.2)
    assert np.isfinite(bs.f_split_auto(big, 7, 3)[0])


@given(st.integers(1, 9), st.integers(0, 5), regular, small, small)
def test_split_pde_residuals(lp, d, p, s1, s2):
    assume(_regular(p))
    l = lp + d
    f = bs.f_split(p, l, lp, s1, s2)
    res = bs.pde_residuals_split(p, l, lp, s1, s2)
    assert np.abs(res).max() <= 1e-9 * abs(f)


def test_split_pde_detects_perturbation():
    p = (0.6, 0.8, 0.5, 0.2)
    v = jx.chart_jet(p, 1)
    f = bs.f_split(v, 7, 3, 0.4, -0.3) * (1 + 0.01 * v[0])
    res = bs.pde_residuals_split_of(f, p, 7, 3, 0.4, -0.3)
    assert abs(res[0]) > 1e-4 * abs(f.value)


def test_lambda_equation_alone_fixes_radial_part():
    l, lp, s1, s2 = 7, 3, 0.4, -0.3
    zeta = 0.8
    dlam = bs.pde_coefficients_split(0.6, zeta, 0.5, 0.2, l, lp, s1, s2)[0]
    expected = (l + lp + s1 + s2) / (2 * 0.6) + 4 * np.pi * zeta
    assert dlam == pytest.approx(expected)


def test_split_chart_singularity():
    with pytest.raises(ChartSingularity):
        bs.pde_residuals_split((0.5, 0.5, 0.1, np.pi / 4), 6, 2)


@pytest.mark.parametrize("p", [(0.6, 0.8, 0.5, 0.2), (-0.9, -0.4, 0.2, -0.3), (1.3, 0.1, -0.6, 0.4)])
def test_split_operators_against_finite_differences(p):
    l, lp, s1, s2 = 7, 3, 0.4, -0.3
    B = bs.extend_to_group(_test_function, l, lp, s1, s2)
    fj = _test_function(jx.chart_jet(p, 1))
    for op in bs.COMPLEX_OPS:
        fd = bs.fd_operator_split(B, p, op, 1e-3)
        rhs = bs.operator_rhs_split(op, p, fj, l, lp, s1, s2)
        assert abs(fd - rhs) < 1e-5 * abs(rhs), op


@given(st.integers(1, 9), st.integers(0, 5), regular, small, small)
def test_split_annihilators(lp, d, p, s1, s2):
    assume(_regular(p))
    l = lp + d
    fj = bs.f_split(jx.chart_jet(p, 1), l, lp, s1, s2)
    for op in ("Nplus", "Xminus", "P1minus", "P0minus"):
        assert abs(bs.operator_rhs_split(op, p, fj, l, lp, s1, s2)) < 1e-8 * abs(fj.value)


def test_split_raising_operator_is_nonzero():
    p = (0.6, 0.8, 0.5, 0.2)
    fj = bs.f_split(jx.chart_jet(p, 1), 7, 3)
    assert abs(bs.operator_rhs_split("Xplus", p, fj, 7, 3, 0.0, 0.0)) > 1e-3 * abs(fj.value)


@pytest.mark.parametrize("branch", [1, -1])
def test_growth_violation_both_branches(branch):
    rep = bs.growth_violation(10, 10, beta_max=50.0, branch=branch)
    assert rep.betas == (1.0, 5.0, 10.0, 20.0, 50.0)
    assert rep.witnessed.all()
    assert np.all(np.diff(rep.gaps[:, -5:], axis=1) > 0)


def test_growth_witness_location():
    rep = bs.growth_violation(10, 10, betas=[0.0, 20.0])
    first = rep.first_witness()
    assert first[0] is not None and first[1] is not None
    assert first[1] <= 100


def test_growth_custom_config():
    cfg = SplitConfig(t_max=200.0, n_ray=15)
    rep = bs.growth_violation(5, 3, 0.2, 0.1, betas=[3.0], cfg=cfg)
    assert rep.t[-1] == pytest.approx(200.0)
    assert rep.witnessed.all()


@given(st.floats(0.05, 20), st.floats(0.05, 20))
def test_torus_diagonalized(a, b):
    d = bs.torus_diagonalized(a, b)
    assert abs(d[0, 1]) < 1e-12 * max(a, b) and abs(d[1, 0]) < 1e-12 * max(a, b)
    assert sorted(np.diag(d)) == pytest.approx(sorted([a, b]))


def test_split_character_and_theta():
    char = bs.SplitCharacter(0.5, 1j)
    assert char(4.0, 1.0) == pytest.approx(2.0)
    assert bs.split_theta(0.25, 7.0, 0.0) == pytest.approx(1j)


def test_split_equivariance():
    l, lp, s1, s2 = 6, 2, 0.3, 0.1
    B = bs.extend_to_group(_test_function, l, lp, s1, s2)
    g = gc.chart_element_coords("split", 0.7, 0.4, 0.2, 0.1) @ gc.rotation(3, 0.3) @ gc.rotation(4, -0.2)
    a, b = 1.3, 0.6
    xyz = (0.2, -0.1, 0.15)
    lhs = B(gc.unipotent(*xyz) @ gc.torus_split(a, b) @ g)
    rhs = bs.split_theta(*xyz) * bs.SplitCharacter(s1, s2)(a, b) * B(g)
    assert abs(lhs - rhs) < 1e-9 * abs(rhs)
    assert B(g) == pytest.approx(np.exp(1j * (0.3 * l - 0.2 * lp)) * _test_function((0.7, 0.4, 0.2, 0.1)))
