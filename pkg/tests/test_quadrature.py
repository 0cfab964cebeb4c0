"""複合 Gauss–Jacobi 則"""
from fractions import Fraction

import pytest

from src.errors import BadNodeCount, EvaluationFailure, ExponentOutOfRange
from src.quadrature import (
    ExponentShift,
    breakpoints,
    build_rules,
    gauss_jacobi,
    integrate,
    integrate_checked,
    shift_admissible,
)
from src.weights import preset

from conftest import BITS, NODES


def test_gauss_legendre_is_exact_to_degree_2m_minus_1(ctx, rel):
    xs, ws = gauss_jacobi(Fraction(0), Fraction(0), 5, BITS)
    assert rel(ctx.fsum(ws), 2) < 1e-35
    assert rel(ctx.fsum(w * x ** 8 for x, w in zip(xs, ws)), ctx.mpf(2) / 9) < 1e-35
    assert list(xs) == sorted(xs)
    assert abs(xs[0] + xs[-1]) < 1e-35


def test_gauss_jacobi_total_mass(ctx, rel):
    a, b = Fraction(1, 2), Fraction(-1, 3)
    _, ws = gauss_jacobi(a, b, 12, BITS)
    av, bv = ctx.mpf(1) / 2, -ctx.mpf(1) / 3
    want = ctx.power(2, av + bv + 1) * ctx.beta(av + 1, bv + 1)
    assert rel(ctx.fsum(ws), want) < 1e-35
    assert all(w > 0 for w in ws)


def test_gauss_jacobi_rejects_bad_input():
    with pytest.raises(BadNodeCount):
        gauss_jacobi(Fraction(0), Fraction(0), 1, BITS)
    with pytest.raises(ExponentOutOfRange):
        gauss_jacobi(Fraction(-1), Fraction(0), 4, BITS)


def test_laguerre_gamma_moment(ctx, rel, laguerre_half):
    rules = build_rules(laguerre_half, NODES, degree=8, bits=BITS)
    got = integrate(rules, lambda x: x ** 3)
    assert rel(got, ctx.gamma(ctx.mpf(7) / 2)) < 1e-30


def test_breakpoints_include_jump_and_fh_points(two_jump, jacobi_fh, legendre):
    pts = breakpoints(two_jump, 16, BITS)
    assert Fraction(1, 2) in pts and Fraction(2) in pts
    assert pts[0] == 0
    assert Fraction(1, 5) in breakpoints(jacobi_fh, 16, BITS)
    assert breakpoints(legendre, 16, BITS) == [Fraction(-1), Fraction(0), Fraction(1)]


def test_zero_step_segments_are_dropped(two_jump):
    rules = build_rules(two_jump, 16, degree=8, bits=BITS)
    assert all(Fraction(1, 2) <= r.segment[0] and r.segment[1] <= 2 for r in rules)


def test_graded_mesh_toward_essential_singularity(pollaczek):
    pts = breakpoints(pollaczek, 16, BITS)
    small = [p for p in pts if 0 < p < Fraction(1, 8)]
    assert len(small) >= 3


def test_integrate_checked_estimates_small_error(ctx, legendre):
    value, err = integrate_checked(legendre, lambda x: ctx.exp(x), 40, bits=BITS)
    assert abs(value - (ctx.e - 1 / ctx.e)) < 1e-30
    assert err < 1e-25


def test_shift_admissible(laguerre_half, legendre):
    fh = preset("laguerre_fh", lam=0, t=1, gamma=Fraction(1, 2), A=1, B=0)
    assert shift_admissible(fh, ExponentShift(fh=-1))
    assert not shift_admissible(legendre, ExponentShift(left=-1))
    assert not shift_admissible(laguerre_half, ExponentShift(left=-1))


def test_shifted_rule_absorbs_inverse_distance(ctx, rel):
    # ∫_0^1 x^{1/2}/x dx = 2
    w = preset("shifted_jacobi_classical", alpha=Fraction(1, 2), beta=0)
    rules = build_rules(w, 40, degree=4, bits=BITS, shift=ExponentShift(left=-1))
    assert rel(integrate(rules, lambda x: 1 + 0 * x), 2) < 1e-35


def test_non_finite_integral_raises(ctx, legendre):
    rules = build_rules(legendre, 8, bits=BITS)
    with pytest.raises(EvaluationFailure):
        integrate(rules, lambda x: ctx.inf)
