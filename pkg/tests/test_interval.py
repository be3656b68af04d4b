import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from realind.interval import (PI, DomainError, Interval, arith, contains, div_checked, elem, hull,
                              square, subset, width)

from oracles import encloses, exact, point_in, random_interval, sub_interval


def I(lo, hi=None):
    return Interval(lo, lo if hi is None else hi)


class TestConstruction:
    def test_rejects_reversed(self):
        with pytest.raises(DomainError):
            Interval(2.0, 1.0)

    @pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(DomainError):
            Interval(0.0, bad)

    def test_negative_zero_normalised(self):
        assert math.copysign(1.0, Interval(-0.0, 0.0).lo) == 1.0


class TestArithExamples:
    def test_add(self):
        assert arith("add", I(1, 2), I(3, 4)) == I(4, 6)

    def test_mul_sign_cases(self):
        assert arith("mul", I(-1, 2), I(3, 4)) == I(-4, 8)

    def test_sub_zero(self):
        assert arith("sub", I(0), I(0)) == I(0)

    def test_inexact_sum_is_widened(self):
        r = arith("add", I(0.1), I(0.2))
        assert r.lo < r.hi
        assert encloses(r, exact("add", 0.1, 0.2))

    def test_unknown_op(self):
        with pytest.raises(ValueError):
            arith("pow", I(1), I(2))

    def test_overflow_is_a_domain_error(self):
        with pytest.raises(DomainError):
            arith("mul", I(1e300), I(1e300))


class TestElemExamples:
    def test_sin_zero_to_pi(self):
        r = elem("sin", I(0.0, PI.hi))
        assert r.hi == 1.0
        assert -1e-15 <= r.lo <= 0.0

    def test_abs_straddling(self):
        assert elem("abs", I(-3, 2)) == I(0, 3)

    def test_cos_zero(self):
        assert elem("cos", I(0)) == I(1)

    def test_wide_trig_is_full_range(self):
        assert elem("sin", I(0, 7)) == I(-1, 1)
        assert elem("cos", I(1e17)) == I(-1, 1)

    def test_cos_interior_minimum(self):
        r = elem("cos", I(3.0, 3.3))
        assert r.lo == -1.0 and r.hi < -0.98

    def test_min_max(self):
        assert elem("min2", I(0, 5), I(1, 2)) == I(0, 2)
        assert elem("max2", I(0, 5), I(1, 2)) == I(1, 5)

    def test_exp_overflow(self):
        with pytest.raises(DomainError):
            elem("exp", I(0, 800))

    def test_arity_checked(self):
        with pytest.raises(TypeError):
            elem("sin", I(0), I(1))


class TestDivision:
    def test_quarter_half(self):
        r = div_checked(I(1), I(2, 4))
        assert r == I(0.25, 0.5)

    def test_zero_in_denominator(self):
        with pytest.raises(DomainError):
            div_checked(I(1, 2), I(-1, 1))

    def test_zero_numerator(self):
        assert div_checked(I(0), I(1, 2)) == I(0)

    def test_one_third_is_enclosed(self):
        r = div_checked(I(1), I(3))
        assert r.lo < r.hi and encloses(r, exact("div", 1.0, 3.0))


class TestHelpers:
    def test_hull(self):
        assert hull(I(0, 1), I(2, 3)) == I(0, 3)

    def test_width(self):
        assert width(I(1, 4)) == 3

    def test_contains(self):
        assert contains(I(0, 1), 0.5)
        assert not contains(I(0, 1), 1.5)
        assert contains(I(0, 1), I(0.2, 0.3))

    def test_square_is_tight(self):
        assert square(I(-1, 2)) == I(0, 4)


def _apply(op, a, b=None):
    if op == "div":
        return div_checked(a, b)
    if op in ("add", "sub", "mul"):
        return arith(op, a, b)
    return elem(op, *((a,) if b is None else (a, b)))


@pytest.mark.parametrize("op", ["add", "sub", "mul", "div", "neg", "abs", "sin", "cos", "exp",
                                "min2", "max2"])
def test_containment_sample(op):
    rng = random.Random(op)
    binary = op in ("add", "sub", "mul", "div", "min2", "max2")
    for _ in range(2000):
        a = random_interval(rng, op)
        b = random_interval(rng, op) if binary else None
        try:
            r = _apply(op, a, b)
        except DomainError:
            continue
        x = point_in(rng, a)
        args = (x, point_in(rng, b)) if binary else (x,)
        assert encloses(r, exact(op, *args)), (op, a, b, args, r)


@pytest.mark.parametrize("op", ["add", "sub", "mul", "div", "sin", "cos", "exp", "abs"])
def test_inclusion_isotonic(op):
    rng = random.Random(f"iso-{op}")
    binary = op in ("add", "sub", "mul", "div")
    for _ in range(1000):
        A = random_interval(rng, op)
        B = random_interval(rng, op) if binary else None
        a = sub_interval(rng, A)
        b = sub_interval(rng, B) if binary else None
        try:
            outer = _apply(op, A, B)
        except DomainError:
            continue
        assert subset(_apply(op, a, b), outer)


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(finite, finite, finite, finite)
def test_add_sub_width_slack(a, b, c, d):
    x = Interval(min(a, b), max(a, b))
    y = Interval(min(c, d), max(c, d))
    slack = 4 * math.ulp(max(x.mag, y.mag, 1.0) * 2)
    for op in ("add", "sub"):
        assert arith(op, x, y).width <= x.width + y.width + slack


@settings(max_examples=300, deadline=None)
@given(st.floats(-50, 50, allow_nan=False), st.floats(0, 7, allow_nan=False))
def test_trig_stays_in_unit_range(lo, w):
    for fn in ("sin", "cos"):
        r = elem(fn, Interval(lo, lo + w))
        assert -1.0 <= r.lo <= r.hi <= 1.0
