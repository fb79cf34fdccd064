"""One-step and n-step laws of the three hierarchical walk families.

Every family is radial with respect to a nested filtration of balls B(i),
i >= 0, of the level-0 group, where B(0) = {0} and |B(i)| = N^i points:

* ``1d``      N = p,   B(i) = p^-i Z_p / Z_p
* ``iso2d``   N = p^2, B(i) = (p^-i Z_p / Z_p)^2          (max-norm)
* ``aniso2d`` N = p,   B(i) = fine ball of index i        (weighted norm)

Shell ``i`` is B(i) minus B(i-1); index 0 is the atom {0}.  The dual ball of
B(i) is the dual ball of index -i, with Haar volume N^-i, and the
characteristic function is constant on the dual shells.  Writing
phi_i = 1 - M_i for its value on dual shell -i, all n-step quantities are
series in phi_i^n.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .groups import (
    K_MAX_DEFAULT,
    GroupElem,
    ShellOverflowError,
    sample_coarse_shell_2d,
    sample_fine_shell_2d,
    sample_shell_1d,
)
from .padic import INF, _check_prime, fine_radius_log, padic_valuation

__all__ = [
    "SERIES_RTOL",
    "WalkLaw1D",
    "IsoLaw2D",
    "AnisoLaw2D",
    "make_law",
    "law_from_dict",
    "law_from_json",
    "aniso_constants",
    "kernel_multiplier",
    "pow_diff",
    "one_minus_pow",
]

SERIES_RTOL = 1e-15
_MAX_TERMS = 20000


def pow_diff(Ma: np.ndarray | float, Mc: np.ndarray | float, n: int):
    """(1 - Ma)^n - (1 - Mc)^n, relatively accurate when 0 <= Ma <= Mc < 1."""
    Ma = np.asarray(Ma, dtype=float)
    Mc = np.asarray(Mc, dtype=float)
    pos = (Ma < 1) & (Mc < 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        la, lc = np.log1p(-Ma), np.log1p(-Mc)
        stable = -np.expm1(n * (lc - la)) * np.exp(n * la)
    out = np.where(pos, stable, (1 - Ma) ** n - (1 - Mc) ** n)
    return out if out.ndim else float(out)


def one_minus_pow(M: np.ndarray | float, n: int):
    """1 - (1 - M)^n, accurate for small M."""
    M = np.asarray(M, dtype=float)
    with np.errstate(invalid="ignore"):
        stable = -np.expm1(n * np.log1p(-M))
    out = np.where(M < 1, stable, 1 - (1 - M) ** n)
    return out if out.ndim else float(out)


def aniso_constants(p: int, b: float, h: float) -> dict[str, float]:
    """C(h), alpha_0 and alpha_1 of the anisotropic family."""
    pb, phb = float(p) ** b, float(p) ** (h * b)
    C = (pb - 1) / pb / (1 / phb + 1 / pb)
    a0 = 1 + (pb - 1) / ((pb + phb) * (p - 1))
    a1 = (1 + phb * (pb - 1) * p / ((phb + pb) * (p - 1))) * phb / pb ** 2
    return {"C": C, "alpha0": a0, "alpha1": a1}


def kernel_multiplier(family: str, p: int, b: float, h: float | None, s: int) -> float:
    """Fourier multiplier of the limit generator on dual shell ``s``.

    Dual shell s of Q_p^d has Haar volume N^s (1 - 1/N).  For ``1d`` and
    ``iso2d`` the multiplier is the norm to the power b; for ``aniso2d`` it
    is alpha_0 p^(k b) on s = 2k and alpha_1 p^((k+2-h) b) on s = 2k+1.
    """
    if family in ("1d", "iso2d"):
        return float(p) ** (s * b)
    c = aniso_constants(p, b, h)
    k, eps = divmod(s, 2)
    if eps == 0:
        return c["alpha0"] * float(p) ** (k * b)
    return c["alpha1"] * float(p) ** ((k + 2 - h) * b)


@dataclass(frozen=True)
class _RadialLaw:
    p: int
    b: float

    family = ""
    dim = 1
    N = 0
    index_kind = "1d"

    def _validate(self) -> None:
        _check_prime(self.p)
        if not (self.b > 0 and math.isfinite(self.b)):
            raise ValueError(f"b={self.b} must be a positive real")

    # ----- one-step law -------------------------------------------------
    def shell_prob(self, i: int) -> float:
        raise NotImplementedError

    def tail(self, i: int) -> float:
        """P(index >= i) for i >= 1, in closed form."""
        raise NotImplementedError

    def total_mass(self) -> float:
        """Atom plus all shells, the geometric tail summed analytically."""
        return self.shell_prob(0) + self.tail(1)

    def multiplier(self, i: int | float) -> float:
        """M_i = 1 - phi on the dual shell of index -i (i >= 0)."""
        raise NotImplementedError

    def multipliers(self, count: int) -> np.ndarray:
        return np.array([self.multiplier(i) for i in range(count)])

    def dual_index(self, y: Sequence[Any] | Any) -> float | int:
        raise NotImplementedError

    def point_index(self, g: GroupElem | int) -> int:
        """Index i with g in shell i (0 for the identity)."""
        if isinstance(g, (int, np.integer)):
            return max(int(g), 0)
        if g.m != 0:
            raise ValueError("n-step laws live on the level-0 group")
        J = g.index(self.index_kind if self.dim == 2 else None)
        return 0 if J == -INF else int(J)

    def radius_log(self, i: int) -> float:
        """log_p of the norm of points in shell i >= 1."""
        return float(i)

    def char_fn(self, y) -> float:
        """E chi(<X, y>) for a dual point y (Z_p or Z_p^2)."""
        i = self.dual_index(y)
        if i == INF:
            return 1.0
        if i < 0:
            raise ValueError("dual point outside the dual group of G_0")
        return 1.0 - self.multiplier(int(i))

    # ----- n-step law ---------------------------------------------------
    def nstep_mass(self, n: int, g: GroupElem | int) -> float:
        """Density of S_n at g w.r.t. counting measure on G_0.

        Ball-indicator series: phi_0^n 1_B(0) + sum_i (phi_i^n - phi_{i-1}^n) N^-i 1_B(i).
        """
        return self.nstep_mass_with_budget(n, g)[0]

    def nstep_mass_with_budget(self, n: int, g: GroupElem | int) -> tuple[float, float]:
        if n < 1:
            raise ValueError("n must be >= 1")
        J = self.point_index(g)
        N = float(self.N)
        total = (1 - self.multiplier(0)) ** n if J == 0 else 0.0
        i = max(J, 1)
        budget = 0.0
        prev = self.multiplier(i - 1)
        for _ in range(_MAX_TERMS):
            Mi = self.multiplier(i)
            total += pow_diff(Mi, prev, n) * N ** (-i)
            # |phi_j^n - phi_{j-1}^n| <= n M_{j-1} for phi in [0,1]
            bound = n * Mi * N ** (-i - 1) / (1 - 1 / N)
            if bound <= SERIES_RTOL * abs(total) or bound < 1e-300:
                budget = bound
                break
            prev = Mi
            i += 1
        else:
            raise RuntimeError("n-step series did not converge")
        return total, budget

    def _q_table(self, n: int, count: int) -> np.ndarray:
        """Q(J) = P(S_n not in B(J)) for J = 0..count-1."""
        N = float(self.N)
        top = count + 64
        M = self.multipliers(top + 1)
        one_m = one_minus_pow(M, n)
        Q = np.zeros(top + 1)
        # start from the leading-order tail; its error shrinks by 1/N per step down
        Q[top] = one_m[top]
        for J in range(top - 1, -1, -1):
            Q[J] = (1 - 1 / N) * one_m[J] + Q[J + 1] / N
        return Q[:count]

    def _count_for(self, n: int, rate: float) -> int:
        # smallest count with n * p^(-b * count * rate) negligible
        need = math.log(max(n, 1) * 1e18) / (self.b * math.log(self.p) * rate)
        return int(need) + 8

    def ball_prob(self, n: int, J: int) -> float:
        """P(S_n in B(J)), via the dual-side series."""
        if J < 0:
            raise ValueError("ball index must be >= 0 at level 0")
        Q = self._q_table(n, max(J + 1, 2))
        return 1.0 - float(Q[J])

    def shell_masses(self, n: int, count: int | None = None) -> np.ndarray:
        """P(S_n in shell J) for J = 0..count-1 (J = 0 is the atom)."""
        rate = 0.5 if self.family == "aniso2d" else 1.0
        count = count or self._count_for(n, rate)
        Q = self._q_table(n, count + 1)
        out = np.empty(count)
        out[0] = 1.0 - Q[0]
        out[1:] = Q[:count - 1] - Q[1:count]
        return out

    def moment_from_shells(self, n: int, r: float) -> float:
        """E ||S_n||^r = sum_J Q(J) (R_{J+1}^r - R_J^r), R_0 = 0."""
        self._check_r(r)
        rate = (self.b - r) / self.b * (0.5 if self.family == "aniso2d" else 1.0)
        count = self._count_for(n, rate)
        Q = self._q_table(n, count + 1)
        R = np.array([0.0] + [float(self.p) ** (r * self.radius_log(J)) for J in range(1, count + 2)])
        return float(np.sum(Q * np.diff(R)[: count + 1]))

    def _check_r(self, r: float) -> None:
        if not 0 < r < self.b:
            raise ValueError(f"moment order r={r} must lie in (0, b={self.b})")

    def moment_closed_form(self, n: int, r: float) -> float:
        return self.moment_from_shells(n, r)

    # ----- sampling -----------------------------------------------------
    def sample_index(self, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def sample_step(self, rng: np.random.Generator, k_max: int | None = K_MAX_DEFAULT) -> GroupElem:
        """Exact draw of one increment X as a level-0 group element."""
        i = self.sample_index(rng)
        if i == 0:
            return GroupElem.identity(self.p, 0, self.dim)
        if self.family == "1d":
            return sample_shell_1d(i, self.p, 0, rng, k_max)
        if self.family == "iso2d":
            if k_max is not None and i > k_max:
                raise ShellOverflowError(f"shell {i} exceeds K_max={k_max}")
            return sample_coarse_shell_2d(2 * i, self.p, 0, rng, k_max)
        return sample_fine_shell_2d(i, self.p, 0, rng, k_max)

    # ----- serialization ------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "p": self.p, "b": self.b}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _geom_index(u: float, q: float) -> int:
    """floor(log(u) / log(q)) for u in (0, 1], q in (0, 1): P(result >= k) = q^k."""
    return int(math.floor(math.log(u) / math.log(q)))


def _u01(rng: np.random.Generator) -> float:
    return 1.0 - rng.random()  # (0, 1]


@dataclass(frozen=True)
class WalkLaw1D(_RadialLaw):
    """Shell k >= 1 with probability C p^(-k b), atom with probability P0."""

    P0: float = 0.0

    family = "1d"
    dim = 1
    index_kind = "1d"

    def __post_init__(self) -> None:
        self._validate()
        if not 0 <= self.P0 < 1:
            raise ValueError(f"P0={self.P0} must lie in [0, 1)")

    @property
    def N(self) -> int:  # type: ignore[override]
        return self.p

    @property
    def C(self) -> float:
        return (1 - self.P0) * (float(self.p) ** self.b - 1)

    @property
    def alpha(self) -> float:
        p, b = self.p, self.b
        return (1 - self.P0) * (float(p) ** (b + 1) - 1) / (float(p) ** b * (p - 1))

    def shell_prob(self, i: int) -> float:
        if i < 0:
            raise ValueError("shell index must be >= 0")
        return self.P0 if i == 0 else self.C * float(self.p) ** (-i * self.b)

    def tail(self, i: int) -> float:
        pb = float(self.p) ** self.b
        return self.C * float(self.p) ** (-i * self.b) * pb / (pb - 1)

    def multiplier(self, i) -> float:
        return self.alpha * float(self.p) ** (-i * self.b)

    def multipliers(self, count: int) -> np.ndarray:
        return self.alpha * float(self.p) ** (-self.b * np.arange(count))

    def dual_index(self, y) -> float | int:
        return padic_valuation(y, self.p)

    def moment_closed_form(self, n: int, r: float) -> float:
        """C(r,1) sum_i [phi_i^n - phi_{i-1}^n] (p^(i r) - p^-i)."""
        return _radial_moment_series(self, n, r, self.p)

    def sample_index(self, rng: np.random.Generator) -> int:
        u = rng.random()
        if u < self.P0:
            return 0
        w = 1.0 - (u - self.P0) / (1 - self.P0)
        w = w if w > 0 else 5e-324
        return 1 + _geom_index(w, float(self.p) ** (-self.b))

    def to_dict(self) -> dict[str, Any]:
        return {**super().to_dict(), "P0": self.P0}


@dataclass(frozen=True)
class IsoLaw2D(_RadialLaw):
    """Coarse shell k >= 1 with probability (p^b - 1) p^(-k b)."""

    family = "iso2d"
    dim = 2
    index_kind = "coarse"

    def __post_init__(self) -> None:
        self._validate()

    @property
    def N(self) -> int:  # type: ignore[override]
        return self.p ** 2

    @property
    def C1(self) -> float:
        return float(self.p) ** self.b - 1

    @property
    def alpha_max(self) -> float:
        p, b = self.p, self.b
        return (float(p) ** (b + 2) - 1) / (float(p) ** b * (p * p - 1))

    def shell_prob(self, i: int) -> float:
        if i < 0:
            raise ValueError("shell index must be >= 0")
        return 0.0 if i == 0 else self.C1 * float(self.p) ** (-i * self.b)

    def tail(self, i: int) -> float:
        pb = float(self.p) ** self.b
        return self.C1 * float(self.p) ** (-i * self.b) * pb / (pb - 1)

    def multiplier(self, i) -> float:
        return self.alpha_max * float(self.p) ** (-i * self.b)

    def multipliers(self, count: int) -> np.ndarray:
        return self.alpha_max * float(self.p) ** (-self.b * np.arange(count))

    def dual_index(self, y) -> float | int:
        return min(padic_valuation(y[0], self.p), padic_valuation(y[1], self.p))

    def moment_closed_form(self, n: int, r: float) -> float:
        """C(r,2) sum_i [phi_i^n - phi_{i-1}^n] (p^(i r) - p^(-2 i))."""
        return _radial_moment_series(self, n, r, self.p ** 2)

    def component_marginal(self, coord: int, k: int) -> float:
        """P(X_coord in S(k)); k = 0 gives the holding probability P0(max)."""
        if coord not in (1, 2):
            raise ValueError("coordinate must be 1 or 2")
        p, b = self.p, self.b
        pb1 = float(p) ** (b + 1)
        if k < 0:
            raise ValueError("k must be >= 0")
        if k == 0:
            return p * (p - 1) * (float(p) ** b - 1) / ((p * p - 1) * (pb1 - 1))
        return self.C1 * (p - 1) / (p * p - 1) * (1 + (p - 1) * pb1 / (pb1 - 1)) * float(p) ** (-k * b)

    def sample_index(self, rng: np.random.Generator) -> int:
        return 1 + _geom_index(_u01(rng), float(self.p) ** (-self.b))


@dataclass(frozen=True)
class AnisoLaw2D(_RadialLaw):
    """Fine shell j >= 1 with probability C(h) r_j^-b."""

    h: float = 0.5

    family = "aniso2d"
    dim = 2
    index_kind = "fine"

    def __post_init__(self) -> None:
        self._validate()
        if self.h == 1:
            raise ValueError("h=1 is the isotropic family")
        if not 0 < self.h < 1:
            raise ValueError(f"h={self.h} must lie in (0, 1)")

    @property
    def N(self) -> int:  # type: ignore[override]
        return self.p

    @property
    def constants(self) -> dict[str, float]:
        return aniso_constants(self.p, self.b, self.h)

    @property
    def C(self) -> float:
        return self.constants["C"]

    @property
    def alpha0(self) -> float:
        return self.constants["alpha0"]

    @property
    def alpha1(self) -> float:
        return self.constants["alpha1"]

    def radius_log(self, j: int) -> float:
        return fine_radius_log(j, self.h)

    def dual_radius_log(self, j: int) -> float:
        """log_p radius of the dual fine ball of index -j."""
        return fine_radius_log(-j, self.h)

    def shell_prob(self, j: int) -> float:
        if j < 0:
            raise ValueError("shell index must be >= 0")
        return 0.0 if j == 0 else self.C * float(self.p) ** (-self.b * self.radius_log(j))

    def tail(self, j: int) -> float:
        # pairs (2k+1, 2k+2) carry (1 - p^-b) p^(-k b)
        p, b = float(self.p), self.b
        k, eps = divmod(j - 1, 2)
        full = p ** (-k * b)
        return full if eps == 0 else full - self.shell_prob(2 * k + 1)

    def multiplier(self, i) -> float:
        return kernel_multiplier("aniso2d", self.p, self.b, self.h, -int(i))

    def multipliers(self, count: int) -> np.ndarray:
        c = self.constants
        i = np.arange(count)
        k = i // 2
        pb = float(self.p) ** self.b
        even = c["alpha0"] * pb ** (-k)
        odd = c["alpha1"] * float(self.p) ** ((1 - self.h - k) * self.b)
        return np.where(i % 2 == 0, even, odd)

    def dual_index(self, y) -> float | int:
        """Index i with y in the dual fine shell -i under the trace pairing."""
        v1, v2 = padic_valuation(y[0], self.p), padic_valuation(y[1], self.p)
        if v1 == INF and v2 == INF:
            return INF
        return 2 * v1 if v1 <= v2 else 2 * v2 + 1

    def component_marginal(self, coord: int, k: int) -> float:
        """P(X_coord in S(k)); k = 0 gives P0(1) or P0(2)."""
        p, b, h = self.p, self.b, self.h
        pb, phb, pb1 = float(p) ** b, float(p) ** (h * b), float(p) ** (b + 1)
        C = self.C
        if coord not in (1, 2):
            raise ValueError("coordinate must be 1 or 2")
        if k < 0:
            raise ValueError("k must be >= 0")
        if coord == 1:
            if k == 0:
                return pb1 / (pb + phb) * (pb - 1) / (pb1 - 1)
            return C * (1 + (1 - 1 / p) * pb1 / (phb * (pb1 - 1))) * float(p) ** (-k * b)
        if k == 0:
            return phb / (pb + phb) * (pb - 1) / (pb1 - 1)
        return C * (1 + (p - 1) * phb / (pb1 - 1)) * float(p) ** (-(k - 1 + h) * b)

    def sample_index(self, rng: np.random.Generator) -> int:
        k = _geom_index(_u01(rng), float(self.p) ** (-self.b))
        odd_w = float(self.p) ** (-self.h * self.b)
        even_w = float(self.p) ** (-self.b)
        return 2 * k + 1 if rng.random() * (odd_w + even_w) < odd_w else 2 * k + 2

    def to_dict(self) -> dict[str, Any]:
        return {**super().to_dict(), "h": self.h}


def _radial_moment_series(law: _RadialLaw, n: int, r: float, N: int) -> float:
    law._check_r(r)
    p = float(law.p)
    Cr = (p ** r * N - p ** r) / (p ** r * N - 1)
    count = law._count_for(n, (law.b - r) / law.b)
    i = np.arange(1, count + 1)
    M = law.multipliers(count + 1)
    D = pow_diff(M[1:], M[:-1], n)
    terms = D * (p ** (i * r) - float(N) ** (-i))
    return float(Cr * np.sum(terms))


def make_law(family: str, p: int, b: float, P0: float | None = None, h: float | None = None) -> _RadialLaw:
    """Build a law; an anisotropic request with h = 1 is routed to IsoLaw2D."""
    family = family.lower()
    if family in ("1d", "walklaw1d"):
        return WalkLaw1D(p, b, 0.0 if P0 is None else P0)
    if family in ("iso2d", "iso"):
        return IsoLaw2D(p, b)
    if family in ("aniso2d", "aniso"):
        if h is None:
            raise ValueError("aniso2d needs h")
        if h == 1:
            return IsoLaw2D(p, b)
        return AnisoLaw2D(p, b, h)
    raise ValueError(f"unknown family {family!r}")


def law_from_dict(d: dict[str, Any]) -> _RadialLaw:
    return make_law(d["family"], int(d["p"]), float(d["b"]), d.get("P0"), d.get("h"))


def law_from_json(s: str) -> _RadialLaw:
    return law_from_dict(json.loads(s))
