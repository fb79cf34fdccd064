"""Finite-resolution groups G_m = Q_p / p^m Z_p and (G_m)^2, the quotient and
embedding maps, and exact uniform samplers on shells.

A coset is stored by its canonical representative sum_{k<m} a_k p^k, an exact
nonnegative rational below p^m whose denominator is a power of p.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .padic import INF, PAdicApprox, coarse_index, fine_index, log_norm

__all__ = [
    "K_MAX_DEFAULT",
    "ShellOverflowError",
    "GroupElem",
    "EmbeddingScheme",
    "quotient_map",
    "embed",
    "sample_shell_1d",
    "sample_ball_1d",
    "sample_fine_shell_2d",
    "sample_coarse_shell_2d",
]

K_MAX_DEFAULT = 64


class ShellOverflowError(OverflowError):
    """A draw landed beyond the representable shell cap K_max."""


def _canon(x, p: int, m: int) -> Fraction:
    x = Fraction(x)
    if x.denominator != 1:
        d = x.denominator
        while d % p == 0:
            d //= p
        if d != 1:
            raise ValueError(f"{x} has a denominator prime to p; not a canonical coset")
    return x % (Fraction(p) ** m)


@dataclass(frozen=True)
class GroupElem:
    """An element of G_m (dim 1) or (G_m)^2 (dim 2)."""

    p: int
    m: int
    coords: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if self.m < 0:
            raise ValueError("level must be >= 0")
        if len(self.coords) not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        object.__setattr__(self, "coords", tuple(_canon(c, self.p, self.m) for c in self.coords))

    @classmethod
    def of(cls, p: int, m: int, *coords) -> "GroupElem":
        return cls(p, m, tuple(Fraction(c) for c in coords))

    @classmethod
    def identity(cls, p: int, m: int = 0, dim: int = 1) -> "GroupElem":
        return cls(p, m, (Fraction(0),) * dim)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def _check(self, other: "GroupElem") -> None:
        if (self.p, self.m, self.dim) != (other.p, other.m, other.dim):
            raise ValueError("elements live in different groups")

    def __add__(self, other: "GroupElem") -> "GroupElem":
        self._check(other)
        return GroupElem(self.p, self.m, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "GroupElem":
        return GroupElem(self.p, self.m, tuple(-a for a in self.coords))

    def __sub__(self, other: "GroupElem") -> "GroupElem":
        return self + (-other)

    def is_identity(self) -> bool:
        return all(c == 0 for c in self.coords)

    def digits(self, coord: int = 0) -> dict[int, int]:
        """Nonzero digits of one coordinate, keyed by index in [-K, m)."""
        x = self.coords[coord]
        out: dict[int, int] = {}
        if x == 0:
            return out
        p = self.p
        k = 0
        den = x.denominator
        while den % p == 0:
            den //= p
            k += 1
        a = x.numerator  # x = a / p^k
        idx = -k
        while a:
            a, d = divmod(a, p)
            if d:
                out[idx] = d
            idx += 1
        return out

    def log_norm(self, coord: int = 0) -> float | int:
        """log_p |x_coord|; -inf for the zero coset."""
        return log_norm(self.coords[coord], self.p)

    def index(self, kind: str | None = None) -> float | int:
        """Shell label: log-norm (1d), coarse log max-norm, or fine index."""
        if self.dim == 1:
            return self.log_norm(0)
        kind = kind or "fine"
        if kind == "fine":
            return fine_index(self.coords, self.p)
        if kind == "coarse":
            return coarse_index(self.coords, self.p)
        raise ValueError(f"unknown index kind {kind!r}")

    def norm(self) -> float:
        """|x| for dim 1, the max-norm for dim 2."""
        c = self.log_norm(0) if self.dim == 1 else coarse_index(self.coords, self.p)
        return 0.0 if c == -INF else float(self.p) ** c


@dataclass(frozen=True)
class EmbeddingScheme:
    """Time scale lambda(m) = D p^(m b) of the level-m walk."""

    p: int
    b: float
    D: float
    m: int

    def __post_init__(self) -> None:
        if self.D <= 0 or self.b <= 0 or self.m < 0:
            raise ValueError("need D > 0, b > 0, m >= 0")

    @property
    def lam(self) -> float:
        return self.D * float(self.p) ** (self.m * self.b)

    @property
    def tau(self) -> float:
        return 1.0 / self.lam

    def steps(self, t: float) -> int:
        """floor(lambda(m) t), computed in extended precision."""
        if t < 0:
            raise ValueError("t must be >= 0")
        x = np.longdouble(self.D) * np.longdouble(self.p) ** (np.longdouble(self.m) * np.longdouble(self.b)) * np.longdouble(t)
        n = int(np.floor(x))
        # snap values a few ulps below an integer
        if float(x) - n > 1 - 1e-12 * max(1.0, float(x)):
            n += 1
        return n

    def grid_time(self, t: float) -> float:
        return self.steps(t) / self.lam


def quotient_map(x: GroupElem, m: int) -> GroupElem:
    """Q_m: G_0 -> G_m, x + Z_p -> p^m x + p^m Z_p."""
    if x.m != 0:
        raise ValueError("quotient_map expects a level-0 element")
    s = Fraction(x.p) ** m
    return GroupElem(x.p, m, tuple(c * s for c in x.coords))


def embed(g: GroupElem) -> Fraction | tuple[Fraction, ...]:
    """Gamma_m: the canonical representative sum_{k<m} a_k p^k in Q_p^d."""
    return g.coords[0] if g.dim == 1 else g.coords


def embed_padic(g: GroupElem, window: int = 32) -> PAdicApprox | tuple[PAdicApprox, ...]:
    out = tuple(PAdicApprox.from_rational(c, g.p, precision=g.m + window) for c in g.coords)
    return out[0] if g.dim == 1 else out


def _uniform_below(rng: np.random.Generator, n: int) -> int:
    """Uniform integer in [0, n) for arbitrarily large n."""
    if n <= 1 << 62:
        return int(rng.integers(0, n))
    chunk = 1 << 60
    nchunks = (n.bit_length() + 59) // 60 + 1
    while True:
        v = 0
        for _ in range(nchunks):
            v = v * chunk + int(rng.integers(0, chunk))
        limit = chunk ** nchunks - (chunk ** nchunks) % n
        if v < limit:
            return v % n


def _check_cap(k: int, k_max: int | None) -> None:
    if k_max is not None and k > k_max:
        raise ShellOverflowError(f"shell {k} exceeds K_max={k_max}")


def sample_ball_1d(k: int, p: int, m: int, rng: np.random.Generator) -> Fraction:
    """Uniform representative of B^(m)(k) = p^-k Z_p / p^m Z_p."""
    if k < -m:
        raise ValueError(f"k={k} below -m={-m}")
    return Fraction(_uniform_below(rng, p ** (k + m)), 1) / Fraction(p) ** k


def _shell_rep(k: int, p: int, m: int, rng) -> Fraction:
    lead = int(rng.integers(1, p))
    rest = _uniform_below(rng, p ** (k + m - 1))
    return Fraction(lead + p * rest) / Fraction(p) ** k


def sample_shell_1d(k: int, p: int, m: int, rng: np.random.Generator,
                    k_max: int | None = K_MAX_DEFAULT) -> GroupElem:
    """Uniform draw from S^(m)(k): leading digit at index -k in {1..p-1}."""
    if k <= -m:
        raise ValueError(f"shell index k={k} must exceed -m={-m}")
    _check_cap(k, k_max)
    return GroupElem(p, m, (_shell_rep(k, p, m, rng),))


def sample_fine_shell_2d(j: int, p: int, m: int, rng: np.random.Generator,
                         k_max: int | None = K_MAX_DEFAULT) -> GroupElem:
    """Uniform draw from the fine shell B_2(j) minus B_2(j-1)."""
    if j <= -2 * m:
        raise ValueError(f"fine index j={j} must exceed -2m={-2 * m}")
    _check_cap(j, None if k_max is None else 2 * k_max)
    k, eps = divmod(j - 1, 2)
    if eps == 0:  # j = 2k+1: B(k) x S(k+1)
        x1 = sample_ball_1d(k, p, m, rng)
        x2 = _shell_rep(k + 1, p, m, rng)
    else:  # j = 2k+2: S(k+1) x B(k+1)
        x1 = _shell_rep(k + 1, p, m, rng)
        x2 = sample_ball_1d(k + 1, p, m, rng)
    return GroupElem(p, m, (x1, x2))


def sample_coarse_shell_2d(j: int, p: int, m: int, rng: np.random.Generator,
                           k_max: int | None = K_MAX_DEFAULT) -> GroupElem:
    """Uniform draw from the coarse shell of (even) fine index j = 2k.

    Mixture of the fine shells 2k-1 and 2k with weights 1 : p.
    """
    if j % 2:
        raise ValueError("coarse shell indices are even")
    if j <= -2 * m:
        raise ValueError(f"index {j} must exceed -2m={-2 * m}")
    sub = j - 1 if rng.random() < 1.0 / (1 + p) else j
    return sample_fine_shell_2d(sub, p, m, rng, k_max)


def enumerate_ball_1d(k: int, p: int, m: int) -> list[Fraction]:
    """All canonical representatives of B^(m)(k)."""
    s = Fraction(p) ** k
    return [Fraction(a) / s for a in range(p ** (k + m))]


def coset_reps(center: Sequence[Fraction], radii: Sequence[int], finest: Sequence[int],
               p: int) -> list[tuple[Fraction, ...]]:
    """Representatives of (center + prod p^-r_i Z_p) modulo prod p^-f_i Z_p."""
    per_coord = []
    for c, r, f in zip(center, radii, finest):
        if f > r:
            raise ValueError("finest resolution is coarser than the ball")
        step = Fraction(p) ** (-r)
        count = p ** (r - f)
        # digits at indices -r .. -f-1
        per_coord.append([Fraction(c) + step * a for a in range(count)])
    out: list[tuple[Fraction, ...]] = [()]
    for vals in per_coord:
        out = [t + (v,) for t in out for v in vals]
    return out
