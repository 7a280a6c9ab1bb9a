"""Fixed-point arithmetic and transcendental determinism checks against an
independent mpmath oracle."""

from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from rugsim.core import (
    FixedAmount,
    MAX_RAW,
    DomainError,
    RangeError,
    SCALE,
    SeededRng,
    amt,
    fixed_pow,
    fnv1a_64,
    quantize,
    safe_exp,
    safe_ln,
)

mpmath.mp.dps = 50

raw_amounts = st.integers(min_value=-MAX_RAW, max_value=MAX_RAW)


def oracle_ln(x: FixedAmount) -> FixedAmount:
    value = mpmath.log(mpmath.mpf(x.raw) / SCALE)
    return FixedAmount(int(mpmath.nint(value * SCALE)))


def test_quantize_examples():
    assert quantize(Fraction(1, 3)) == amt("0.333333333")
    assert quantize(0) == amt(0)
    # 2.5e-9 is exactly halfway: ties go to the even quantum, 2e-9
    assert quantize(Fraction(25, 10**10)).raw == 2


def test_quantize_idempotent():
    x = amt("123.456789123")
    assert quantize(x) is x
    assert quantize(x.as_fraction()) == x


def test_quantize_rejects_floats():
    with pytest.raises(TypeError):
        quantize(0.1)


def test_overflow_is_an_error():
    big = FixedAmount(MAX_RAW)
    with pytest.raises(RangeError):
        big + amt(1)
    with pytest.raises(RangeError):
        FixedAmount(MAX_RAW + 1)


@given(a=raw_amounts, b=raw_amounts)
def test_add_sub_roundtrip(a, b):
    x, y = FixedAmount(a), FixedAmount(b)
    if abs(a + b) > MAX_RAW:
        with pytest.raises(RangeError):
            x + y
    else:
        assert (x + y) - y == x


@given(raw=st.integers(min_value=-10**15, max_value=10**15))
def test_mul_div_half_even(raw):
    x = FixedAmount(raw)
    three = amt(3)
    # (x/3)*3 may differ from x by at most 2 quanta of accumulated rounding
    assert abs(((x / three) * three) - x).raw <= 2


def test_division_by_zero():
    with pytest.raises(DomainError):
        amt(1) / amt(0)


def test_str_parse_roundtrip():
    for text in ("0", "1", "-1.5", "0.000000001", "-0.000000001", "123456.789"):
        assert str(FixedAmount.parse(text)) == text


def test_safe_ln_examples():
    assert safe_ln(amt(1)) == amt(0)
    e = amt("2.718281828")
    assert abs(safe_ln(e) - amt(1)).raw <= 2
    assert safe_ln(amt(10)) == amt("2.302585093")


def test_safe_ln_domain():
    with pytest.raises(DomainError):
        safe_ln(amt(0))
    with pytest.raises(DomainError):
        safe_ln(amt(-1))


def test_safe_ln_matches_oracle_on_grid():
    rng = SeededRng(7).stream("ln-grid")
    for _ in range(300):
        x = FixedAmount(rng.randint(1, 10**20))
        assert abs(safe_ln(x) - oracle_ln(x)).raw <= 2


def test_ln_additivity():
    # ln(x*y) == ln(x) + ln(y) within 4 quanta on a random grid
    rng = SeededRng(11).stream("ln-add")
    for _ in range(200):
        x = FixedAmount(rng.randint(SCALE // 1000, 10**14))
        y = FixedAmount(rng.randint(SCALE // 1000, 10**14))
        lhs = safe_ln(x * y)
        rhs = safe_ln(x) + safe_ln(y)
        assert abs(lhs - rhs).raw <= 4


def test_safe_exp_inverts_ln():
    for text in ("0.5", "1", "2", "10", "40"):
        x = amt(text)
        assert abs(safe_ln(safe_exp(x)) - x).raw <= 2


def test_safe_exp_overflow():
    with pytest.raises(RangeError):
        safe_exp(amt(100))


def test_fixed_pow():
    assert fixed_pow(amt(10), amt(2)) == amt(100)
    assert fixed_pow(amt(100), amt("1.5")) == amt(1000)
    assert fixed_pow(amt(0), amt(3)) == amt(0)
    assert fixed_pow(amt(0), amt(0)) == amt(1)
    assert fixed_pow(amt(7), amt(0)) == amt(1)


def test_fnv1a_is_stable():
    # pinned reference values keep trace hashes comparable across builds
    assert fnv1a_64(b"") == 0xCBF29CE484222325
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C


def test_substreams_are_independent():
    rng = SeededRng(42)
    first = [rng.stream("a").random() for _ in range(3)]
    rng2 = SeededRng(42)
    rng2.stream("b").random()  # consuming another stream must not shift "a"
    assert [rng2.stream("a").random() for _ in range(3)] == first
