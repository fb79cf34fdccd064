"""Truncated p-adic arithmetic, norms on Q_p and Q_p^2, the additive character,
and volumes of balls and shells.

Elements are represented either as exact rationals (``int`` / ``Fraction``)
or as :class:`PAdicApprox`, a digit expansion with an explicit absolute
precision.  Every public function accepts both.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

__all__ = [
    "TruncationError",
    "PAdicApprox",
    "ShellIndex",
    "INF",
    "padic_valuation",
    "padic_abs",
    "fractional_part",
    "character",
    "pairing_2d",
    "trace_pairing_2d",
    "log_norm",
    "fine_index",
    "coarse_index",
    "norm_max",
    "norm_h",
    "fine_radius_log",
    "volume",
    "character_sum_over_ball",
]

INF = math.inf
DEFAULT_WINDOW = 32


class TruncationError(ArithmeticError):
    """Raised when a result needs digits outside the known window."""


def _vp_int(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of 0 requested")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _check_prime(p: int) -> None:
    if not isinstance(p, int) or p < 2 or any(p % q == 0 for q in range(2, math.isqrt(p) + 1)):
        raise ValueError(f"p={p} is not a prime")


@dataclass(frozen=True)
class PAdicApprox:
    """x = sum_i digits[i] p^(valuation+i) + O(p^precision).

    ``digits`` covers the window [valuation, precision).  Zero is flagged by
    ``is_zero`` and carries no valuation.
    """

    prime: int
    valuation: int | None
    digits: tuple[int, ...]
    precision: int
    is_zero: bool = False

    def __post_init__(self) -> None:
        p = self.prime
        if self.is_zero:
            if self.digits or self.valuation is not None:
                raise ValueError("zero carries no digits")
            return
        if not self.digits or self.digits[0] == 0:
            raise ValueError("leading digit must be nonzero")
        if any(not 0 <= d < p for d in self.digits):
            raise ValueError("digits must lie in [0, p)")
        if self.valuation + len(self.digits) != self.precision:
            raise ValueError("window length disagrees with precision")

    @classmethod
    def zero(cls, p: int, precision: int = DEFAULT_WINDOW) -> "PAdicApprox":
        return cls(p, None, (), precision, True)

    @classmethod
    def from_rational(cls, q: Union[int, Fraction], p: int, precision: int | None = None,
                      window: int = DEFAULT_WINDOW) -> "PAdicApprox":
        """Expand ``q`` up to absolute precision ``precision``.

        If ``precision`` is omitted the window holds ``window`` digits after
        the leading one.
        """
        q = Fraction(q)
        if q == 0:
            return cls.zero(p, precision if precision is not None else window)
        v = padic_valuation(q, p)
        N = v + window if precision is None else precision
        if N <= v:
            return cls.zero(p, N)
        unit = q / Fraction(p) ** v
        mod = p ** (N - v)
        u = unit.numerator * pow(unit.denominator, -1, mod) % mod
        digits = []
        for _ in range(N - v):
            u, d = divmod(u, p)
            digits.append(d)
        return cls(p, v, tuple(digits), N)

    def to_fraction(self) -> Fraction:
        """The canonical truncated representative, a nonnegative rational."""
        if self.is_zero:
            return Fraction(0)
        p = self.prime
        a = sum(d * p ** i for i, d in enumerate(self.digits))
        return Fraction(a) * Fraction(p) ** self.valuation

    def digit(self, k: int) -> int:
        if k >= self.precision:
            raise TruncationError(f"digit {k} lies outside the window (precision {self.precision})")
        if self.is_zero or k < self.valuation:
            return 0
        return self.digits[k - self.valuation]

    def _coerce(self, other) -> "PAdicApprox":
        if isinstance(other, PAdicApprox):
            if other.prime != self.prime:
                raise ValueError("mixed primes")
            return other
        # exact rationals never limit precision
        return PAdicApprox.from_rational(other, self.prime, precision=self.precision + 64)

    def __add__(self, other) -> "PAdicApprox":
        other = self._coerce(other)
        prec = min(self.precision, other.precision)
        return PAdicApprox.from_rational(self.to_fraction() + other.to_fraction(), self.prime, prec)

    __radd__ = __add__

    def __neg__(self) -> "PAdicApprox":
        return PAdicApprox.from_rational(-self.to_fraction(), self.prime, self.precision)

    def __sub__(self, other) -> "PAdicApprox":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "PAdicApprox":
        return self._coerce(other) - self

    def __mul__(self, other) -> "PAdicApprox":
        other = self._coerce(other)
        v1 = self.precision if self.is_zero else self.valuation
        v2 = other.precision if other.is_zero else other.valuation
        prec = min(v1 + other.precision, v2 + self.precision)
        return PAdicApprox.from_rational(self.to_fraction() * other.to_fraction(), self.prime, prec)

    __rmul__ = __mul__


@dataclass(frozen=True)
class ShellIndex:
    """A shell label: ``kind`` in {"1d", "coarse", "fine"}; coarse indices are even."""

    kind: str
    index: int

    def __post_init__(self) -> None:
        if self.kind not in ("1d", "coarse", "fine"):
            raise ValueError(f"unknown shell kind {self.kind!r}")
        if self.kind == "coarse" and self.index % 2:
            raise ValueError("coarse shell indices are even")


Scalar = Union[int, Fraction, PAdicApprox]


def _as_fraction(x: Scalar, need_precision: int | None = None) -> Fraction:
    if isinstance(x, PAdicApprox):
        if need_precision is not None and x.precision < need_precision:
            raise TruncationError(f"need precision {need_precision}, have {x.precision}")
        return x.to_fraction()
    return Fraction(x)


def padic_valuation(x: Scalar, p: int | None = None) -> float | int:
    """v_p(x); ``math.inf`` for zero."""
    if isinstance(x, PAdicApprox):
        return INF if x.is_zero else x.valuation
    if p is None:
        raise ValueError("prime required for rational input")
    q = Fraction(x)
    if q == 0:
        return INF
    if q.numerator % p == 0:
        return _vp_int(q.numerator, p)
    if q.denominator % p == 0:
        return -_vp_int(q.denominator, p)
    return 0


def padic_abs(x: Scalar, p: int | None = None) -> Fraction:
    """|x|_p as an exact rational."""
    v = padic_valuation(x, p)
    if v == INF:
        return Fraction(0)
    p = x.prime if isinstance(x, PAdicApprox) else p
    return Fraction(p) ** (-v)


def fractional_part(x: Scalar, p: int | None = None) -> Fraction:
    """{x}_p: the sum of the digits of negative index, in [0, 1)."""
    if isinstance(x, PAdicApprox):
        p = x.prime
    q = _as_fraction(x, need_precision=0)
    if q == 0:
        return Fraction(0)
    den = q.denominator
    e = _vp_int(den, p) if den % p == 0 else 0
    if e == 0:
        return Fraction(0)
    mod = p ** e
    unit_den = den // mod
    r = q.numerator * pow(unit_den, -1, mod) % mod
    return Fraction(r, mod)


def character(x: Scalar, p: int | None = None) -> complex:
    """exp(2 pi i {x}_p)."""
    f = fractional_part(x, p)
    if f == 0:
        return complex(1.0, 0.0)
    return cmath.exp(2j * math.pi * float(f))


def _prime_of(*xs, p=None) -> int:
    for x in xs:
        if isinstance(x, PAdicApprox):
            return x.prime
    if p is None:
        raise ValueError("prime required for rational input")
    return p


def _prod(a: Scalar, b: Scalar, p: int):
    if isinstance(a, PAdicApprox) or isinstance(b, PAdicApprox):
        if not isinstance(a, PAdicApprox):
            a = PAdicApprox.from_rational(a, p, precision=max(b.precision, 0) + 64)
        return a * b
    return Fraction(a) * Fraction(b)


def pairing_2d(x: Sequence[Scalar], y: Sequence[Scalar], p: int | None = None) -> complex:
    """chi(x1 y1 + x2 y2)."""
    p = _prime_of(*x, *y, p=p)
    s = _prod(x[0], y[0], p) + _prod(x[1], y[1], p)
    return character(s, p)


def trace_pairing_2d(x: Sequence[Scalar], y: Sequence[Scalar], p: int | None = None) -> complex:
    """chi(x1 y2 + x2 y1).

    This is the pairing under which the fine filtration is self-dual:
    the annihilator of B_2(j) is B_2(-j).
    """
    p = _prime_of(*x, *y, p=p)
    s = _prod(x[0], y[1], p) + _prod(x[1], y[0], p)
    return character(s, p)


def log_norm(x: Scalar, p: int | None = None) -> float | int:
    """log_p |x|_p, i.e. -v_p(x); ``-inf`` for zero."""
    v = padic_valuation(x, p)
    return -INF if v == INF else -v


def fine_index(x: Sequence[Scalar], p: int | None = None) -> float | int:
    """Least j with x in B_2(j) = p^-k Z_p x p^-(k+eps) Z_p, j = 2k + eps."""
    p = _prime_of(*x, p=p)
    a, c = log_norm(x[0], p), log_norm(x[1], p)
    return max(2 * a, 2 * c - 1)


def coarse_index(x: Sequence[Scalar], p: int | None = None) -> float | int:
    """log_p of the max-norm."""
    p = _prime_of(*x, p=p)
    return max(log_norm(x[0], p), log_norm(x[1], p))


def fine_radius_log(j: int, h: float) -> float:
    """log_p of the radius of B_2(j): k for j = 2k, k + h for j = 2k + 1."""
    k, eps = divmod(j, 2)
    return k + h * eps


def norm_max(x: Sequence[Scalar], p: int | None = None) -> float:
    p = _prime_of(*x, p=p)
    c = coarse_index(x, p)
    return 0.0 if c == -INF else float(p) ** c


def norm_h(x: Sequence[Scalar], h: float, p: int | None = None) -> float:
    """max(|x1|, p^(h-1) |x2|), evaluated through the fine index."""
    if not 0 < h <= 1:
        raise ValueError(f"h={h} outside (0, 1]")
    p = _prime_of(*x, p=p)
    if h == 1:
        return norm_max(x, p)
    j = fine_index(x, p)
    return 0.0 if j == -INF else float(p) ** fine_radius_log(j, h)


def _min_index(kind: str, level: int | None) -> float:
    if level is None:
        return -INF
    return -level if kind in ("1d", "coarse") else -2 * level


def volume(kind: str, index: int, p: int, shell: bool = False, level: int | None = None) -> Fraction:
    """Exact Haar volume of a centred ball or shell.

    ``kind`` is "1d" (index k, ball p^-k Z_p), "coarse" (index k, ball
    (p^-k Z_p)^2) or "fine" (index j).  ``level`` selects the discrete group
    G_m, where the bottom ball is the single point {0} of mass p^(-d m).
    """
    lo = _min_index(kind, level)
    if index < lo:
        raise ValueError(f"index {index} below the minimum {lo} at level {level}")
    P = Fraction(p)
    if kind == "1d":
        ball, ratio = P ** index, 1 - 1 / P
    elif kind == "coarse":
        ball, ratio = P ** (2 * index), 1 - 1 / P ** 2
    elif kind == "fine":
        ball, ratio = P ** index, 1 - 1 / P
    else:
        raise ValueError(f"unknown kind {kind!r}")
    if not shell:
        return ball
    if index == lo:
        return ball
    return ball * ratio


def character_sum_over_ball(k: int, y: Scalar, m: int, p: int | None = None) -> complex:
    """sum over x in B^(m)(k) of chi(x y) times the point mass p^-m.

    Equals vol(B(k)) when |y| <= p^-k and 0 otherwise.
    """
    p = _prime_of(y, p=p)
    if k < -m:
        raise ValueError(f"k={k} below -m={-m}")
    yq = _as_fraction(y, need_precision=k + m if isinstance(y, PAdicApprox) else None)
    count = p ** (k + m)
    base = Fraction(p) ** (-k)
    total = 0j
    for a in range(count):
        total += character(base * a * yq, p)
    return total * float(Fraction(1, p ** m))
