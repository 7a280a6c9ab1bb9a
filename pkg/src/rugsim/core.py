"""Deterministic arithmetic substrate: fixed-point amounts, identifiers,
simulated block time, and seeded randomness.

Every monetary quantity in the simulator is a ``FixedAmount``: an integer
count of 1e-9 units. Addition and subtraction are exact; multiplication and
division round half-to-even at the 1e-9 quantum. Transcendentals (ln, exp,
powers) are evaluated with the ``decimal`` module at 40 significant digits
and then quantized, so results are bit-identical across platforms -- no
libm involved anywhere.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from decimal import Context, Decimal, ROUND_HALF_EVEN
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Union


class RugsimError(Exception):
    """Base class for all simulator errors."""


class RangeError(RugsimError):
    """A value left the representable fixed-point range."""


class DomainError(RugsimError):
    """An operand outside the mathematical domain of an operation."""


class ParameterError(RugsimError):
    """A parameter violates a declared precondition."""


class StateError(RugsimError):
    """An operation is invalid in the current lifecycle state."""


class DustError(RugsimError):
    """An amount is too small to have any effect at the quantum."""


class IlliquidError(RugsimError):
    """A pool or market lacks the liquidity to serve a request."""


SCALE = 10**9
# Covers +/- 1e18 whole units (raw is a count of 1e-9 quanta).
MAX_RAW = 10**27

# 40 significant digits for intermediate transcendental evaluation,
# comfortably beyond 80-bit extended precision.
_EXT = Context(prec=40, rounding=ROUND_HALF_EVEN)

AmountLike = Union["FixedAmount", int, str, Fraction, Decimal]


def _div_round_half_even(num: int, den: int) -> int:
    """Integer division rounding to nearest, ties to even. den != 0."""
    if den < 0:
        num, den = -num, -den
    q, r = divmod(num, den)
    twice = 2 * r
    if twice > den or (twice == den and q % 2 != 0):
        q += 1
    return q


class FixedAmount:
    """Signed fixed-point quantity with 9 fractional decimal digits.

    Backed by a plain int of 1e-9 quanta. Overflow past +/-1e18 whole
    units raises ``RangeError`` instead of wrapping.
    """

    __slots__ = ("raw",)

    def __init__(self, raw: int):
        if not isinstance(raw, int):
            raise TypeError(f"raw must be int, got {type(raw).__name__}")
        if abs(raw) > MAX_RAW:
            raise RangeError(f"fixed-point overflow: raw={raw}")
        self.raw = raw

    @classmethod
    def from_int(cls, units: int) -> "FixedAmount":
        return cls(units * SCALE)

    @classmethod
    def parse(cls, text: str) -> "FixedAmount":
        try:
            dec = Decimal(text)
        except Exception:
            raise ParameterError(f"not a decimal literal: {text!r}") from None
        return quantize(Fraction(dec))

    def as_fraction(self) -> Fraction:
        return Fraction(self.raw, SCALE)

    def as_decimal(self) -> Decimal:
        return Decimal(self.raw).scaleb(-9)

    def is_zero(self) -> bool:
        return self.raw == 0

    # -- exact ops -----------------------------------------------------

    def __add__(self, other: "FixedAmount") -> "FixedAmount":
        return FixedAmount(self.raw + other.raw)

    def __sub__(self, other: "FixedAmount") -> "FixedAmount":
        return FixedAmount(self.raw - other.raw)

    def __neg__(self) -> "FixedAmount":
        return FixedAmount(-self.raw)

    def __abs__(self) -> "FixedAmount":
        return FixedAmount(abs(self.raw))

    # -- rounding ops --------------------------------------------------

    def __mul__(self, other: Union["FixedAmount", int]) -> "FixedAmount":
        if isinstance(other, int):
            return FixedAmount(self.raw * other)
        return FixedAmount(_div_round_half_even(self.raw * other.raw, SCALE))

    __rmul__ = __mul__

    def __truediv__(self, other: Union["FixedAmount", int]) -> "FixedAmount":
        if isinstance(other, int):
            if other == 0:
                raise DomainError("division by zero")
            return FixedAmount(_div_round_half_even(self.raw, other))
        if other.raw == 0:
            raise DomainError("division by zero")
        return FixedAmount(_div_round_half_even(self.raw * SCALE, other.raw))

    # -- comparisons ---------------------------------------------------

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FixedAmount) and self.raw == other.raw

    def __lt__(self, other: "FixedAmount") -> bool:
        return self.raw < other.raw

    def __le__(self, other: "FixedAmount") -> bool:
        return self.raw <= other.raw

    def __gt__(self, other: "FixedAmount") -> bool:
        return self.raw > other.raw

    def __ge__(self, other: "FixedAmount") -> bool:
        return self.raw >= other.raw

    def __hash__(self) -> int:
        return hash(("FixedAmount", self.raw))

    def __bool__(self) -> bool:
        return self.raw != 0

    def __float__(self) -> float:
        return self.raw / SCALE

    def __str__(self) -> str:
        sign = "-" if self.raw < 0 else ""
        whole, frac = divmod(abs(self.raw), SCALE)
        if frac == 0:
            return f"{sign}{whole}"
        return f"{sign}{whole}.{frac:09d}".rstrip("0")

    def __repr__(self) -> str:
        return f"FixedAmount('{self}')"


ZERO = FixedAmount(0)
ONE = FixedAmount(SCALE)
QUANTUM = FixedAmount(1)


def quantize(value: AmountLike) -> FixedAmount:
    """Round an exact value to the nearest 1e-9 quantum, ties to even.

    Floats are rejected: they are not exact and would break cross-platform
    determinism. Pass a string, int, Fraction, or Decimal instead.
    """
    if isinstance(value, FixedAmount):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"inexact type {type(value).__name__}; use str/int/Fraction")
    if isinstance(value, int):
        return FixedAmount(value * SCALE)
    if isinstance(value, str):
        return FixedAmount.parse(value)
    if isinstance(value, Decimal):
        value = Fraction(value)
    if isinstance(value, Fraction):
        return FixedAmount(_div_round_half_even(value.numerator * SCALE, value.denominator))
    raise TypeError(f"cannot quantize {type(value).__name__}")


def amt(value: AmountLike) -> FixedAmount:
    """Shorthand constructor, accepted everywhere an amount is expected."""
    return quantize(value)


def _from_context_decimal(d: Decimal) -> FixedAmount:
    raw = int(d.scaleb(9).to_integral_value(rounding=ROUND_HALF_EVEN))
    return FixedAmount(raw)


@lru_cache(maxsize=4096)
def _ln_raw(raw: int) -> int:
    d = _EXT.ln(Decimal(raw).scaleb(-9))
    return int(d.scaleb(9).to_integral_value(rounding=ROUND_HALF_EVEN))


def safe_ln(x: FixedAmount) -> FixedAmount:
    """Natural logarithm, evaluated at 40 digits then quantized.

    Raises DomainError for x <= 0.
    """
    if x.raw <= 0:
        raise DomainError(f"ln domain: x={x} <= 0")
    return FixedAmount(_ln_raw(x.raw))


def safe_exp(x: FixedAmount) -> FixedAmount:
    """e**x, evaluated at 40 digits then quantized; RangeError on overflow."""
    d = _EXT.exp(x.as_decimal())
    if d.adjusted() > 30:  # definitely out of range, skip the big int
        raise RangeError(f"exp overflow: x={x}")
    return _from_context_decimal(d)


def fixed_pow(base: FixedAmount, exponent: FixedAmount) -> FixedAmount:
    """base**exponent for base >= 0, via exp(exponent * ln(base))."""
    if base.raw < 0:
        raise DomainError(f"pow base must be >= 0, got {base}")
    if base.raw == 0:
        if exponent.raw > 0:
            return ZERO
        if exponent.raw == 0:
            return ONE
        raise DomainError("0 ** negative exponent")
    ln_b = _EXT.ln(base.as_decimal())
    d = _EXT.exp(_EXT.multiply(exponent.as_decimal(), ln_b))
    if d.adjusted() > 30:
        raise RangeError(f"pow overflow: {base} ** {exponent}")
    return _from_context_decimal(d)


# -- identifiers and time ----------------------------------------------

ChainId = str
TokenId = str
VaultId = str
PoolId = str


@dataclass(frozen=True)
class AccountId:
    """Opaque account identifier with a ground-truth beneficial-owner link.

    The simulator is omniscient about which accounts share an owner; this
    is what makes owner-aggregated penalty accounting possible at all.
    """

    value: str
    owner: str

    @classmethod
    def solo(cls, name: str) -> "AccountId":
        return cls(value=name, owner=name)

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class BlockTime:
    height: int
    chain: ChainId = "main"

    def __post_init__(self):
        if self.height < 0:
            raise ParameterError(f"negative block height: {self.height}")

    def next(self) -> "BlockTime":
        return BlockTime(self.height + 1, self.chain)


# -- seeded randomness --------------------------------------------------

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a_64(data: bytes, state: int = FNV_OFFSET) -> int:
    """64-bit FNV-1a hash; also used for trace fingerprints."""
    h = state
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


class SeededRng:
    """One master seed fanned out into stable, independent substreams.

    Each substream id maps to its own ``random.Random``, so adding a new
    consumer never perturbs the draws of existing ones.
    """

    def __init__(self, seed: int):
        self.seed = seed & 0xFFFFFFFFFFFFFFFF
        self._streams: dict[str, random.Random] = {}

    def stream(self, *labels: object) -> random.Random:
        key = "/".join(str(label) for label in labels)
        rng = self._streams.get(key)
        if rng is None:
            material = self.seed.to_bytes(8, "big") + key.encode("utf-8")
            rng = random.Random(fnv1a_64(material))
            self._streams[key] = rng
        return rng


def fsum(amounts: Iterable[FixedAmount]) -> FixedAmount:
    """Exact sum of fixed amounts (addition never rounds)."""
    total = 0
    for a in amounts:
        total += a.raw
    return FixedAmount(total)
