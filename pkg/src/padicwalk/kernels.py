"""Heat kernels of the limit processes on Q_p and Q_p^2.

The limit generator is a Fourier multiplier constant on the dual shells of
the family's filtration, so the kernel is a ball-indicator series.  With
a = sigma t and M_s the multiplier on dual shell s,

    rho(t, x) = sum_{s <= -J} N^s (exp(-a M_s) - exp(-a M_{s+1})),

where J is the index of the shell containing x.  Ball masses follow from
the same multipliers:

    P(Y_t in B(J)) = (1 - 1/N) sum_{s <= -J} N^(s+J) exp(-a M_s).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from typing import Any, Sequence

import numpy as np

from ._fdd import Ball, history_prob, point_index
from .laws import aniso_constants, make_law
from .padic import INF, _check_prime, fine_radius_log, padic_valuation

__all__ = [
    "KernelSpec",
    "limit_char",
    "heat_kernel",
    "heat_kernel_shell",
    "kernel_terms",
    "ball_mass",
    "ball_tail",
    "shell_mass",
    "kernel_mass",
    "kernel_moment",
    "gamma_bound",
    "kernel_moment_bound",
    "convolved_ball_mass",
    "fdd_prob",
]

FAMILIES = ("1d", "iso2d", "aniso2d")
_EXP_CUT = 45.0      # exp(-45) ~ 2.9e-20
_REL = 1e-18


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of a limit process.

    ``sigma`` multiplies the generator's symbol.  For ``1d`` and ``iso2d``
    the symbol is the norm to the power b; for ``aniso2d`` it already
    contains alpha_0 or alpha_1, so sigma = D there.
    """

    family: str
    p: int
    b: float
    sigma: float
    h: float | None = None
    tolerance: float = 1e-12

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        _check_prime(self.p)
        if not self.b > 0:
            raise ValueError("b must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0 < self.tolerance <= 1e-6:
            raise ValueError("tolerance must lie in (0, 1e-6]")
        if self.family == "aniso2d":
            if self.h is None or not 0 < self.h < 1:
                raise ValueError("aniso2d needs h in (0, 1)")

    @classmethod
    def from_law(cls, law, D: float, tolerance: float = 1e-12) -> "KernelSpec":
        """Limit of the walk with time scale D p^(m b)."""
        if law.family == "1d":
            sigma = D * law.alpha
        elif law.family == "iso2d":
            sigma = D * law.alpha_max
        else:
            sigma = D
        return cls(law.family, law.p, law.b, sigma, getattr(law, "h", None), tolerance)

    @property
    def N(self) -> int:
        return self.p ** 2 if self.family == "iso2d" else self.p

    @property
    def dim(self) -> int:
        return 1 if self.family == "1d" else 2

    @property
    def alpha0(self) -> float:
        return aniso_constants(self.p, self.b, self.h)["alpha0"] if self.family == "aniso2d" else 1.0

    def multiplier(self, s) -> np.ndarray | float:
        """Symbol on dual shell s (vectorized)."""
        s = np.asarray(s, dtype=np.int64)
        p, b = float(self.p), self.b
        if self.family != "aniso2d":
            out = p ** (s * b)
        else:
            c = aniso_constants(self.p, b, self.h)
            k = s // 2
            out = np.where(s % 2 == 0, c["alpha0"] * p ** (k * b),
                           c["alpha1"] * p ** ((k + 2 - self.h) * b))
        return out if out.ndim else float(out)

    def radius_log(self, J: int) -> float:
        """log_p of the norm on shell J."""
        return fine_radius_log(J, self.h) if self.family == "aniso2d" else float(J)

    def dual_shell(self, y) -> float | int:
        """Dual shell index of y; -inf for y = 0."""
        if self.family == "1d":
            v = padic_valuation(y, self.p)
            return -INF if v == INF else -v
        v1, v2 = padic_valuation(y[0], self.p), padic_valuation(y[1], self.p)
        if v1 == INF and v2 == INF:
            return -INF
        if self.family == "iso2d":
            return -min(v1, v2)
        return -2 * v1 if v1 <= v2 else -2 * v2 - 1

    def shell_of(self, x) -> float | int:
        if self.family == "1d":
            x = (x,) if not isinstance(x, (tuple, list)) else x
        return point_index(self.family, tuple(Fraction(c) for c in x), self.p)

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "p": self.p, "b": self.b, "sigma": self.sigma,
                "h": self.h, "tolerance": self.tolerance}


def _top(spec: KernelSpec, a: float) -> int:
    """Smallest s with a M_s > _EXP_CUT; beyond it exp(-a M) is negligible."""
    step = 0.5 if spec.family == "aniso2d" else 1.0
    s = int(math.floor(math.log(_EXP_CUT / a) / (spec.b * math.log(spec.p) * step))) - 3
    while a * spec.multiplier(s) <= _EXP_CUT:
        s += 1
    return s


def _depth(spec: KernelSpec) -> int:
    # number of downward steps for N^-L < _REL
    return int(math.ceil(-math.log(_REL) / math.log(spec.N))) + 2


def limit_char(spec: KernelSpec, t: float, y) -> float:
    """exp(-sigma t M(y))."""
    if t <= 0:
        raise ValueError("t must be positive")
    s = spec.dual_shell(y)
    if s == -INF:
        return 1.0
    return math.exp(-spec.sigma * t * spec.multiplier(int(s)))


def kernel_terms(spec: KernelSpec, t: float, s: Sequence[int]) -> np.ndarray:
    """exp(-a M_s) - exp(-a M_{s+1}) for each s, via expm1."""
    a = spec.sigma * t
    s = np.asarray(s, dtype=np.int64)
    Ms, Mn = spec.multiplier(s), spec.multiplier(s + 1)
    return np.exp(-a * Ms) * -np.expm1(-a * (Mn - Ms))


def heat_kernel_shell(spec: KernelSpec, t: float, J: float | int) -> tuple[float, float]:
    """(rho(t, x), error budget) for x in shell J; J = -inf is the origin."""
    if t <= 0:
        raise ValueError("t must be positive")
    a = spec.sigma * t
    N = float(spec.N)
    top = _top(spec, a)
    hi = top if J == -INF else min(int(-J), top)
    budget = 0.0
    if hi == top:
        budget += 2 * N ** (top + 1) * math.exp(-a * spec.multiplier(top + 1))
    total = 0.0
    s_hi = hi
    for _ in range(4096):
        s = np.arange(s_hi, s_hi - 64, -1)
        terms = N ** s.astype(float) * kernel_terms(spec, t, s)
        total += float(terms.sum())
        s_lo = int(s[-1])
        # below s_lo the terms are bounded by N^s a M_{s+1}, decaying by >= N per step
        tail = N ** s_lo * a * spec.multiplier(s_lo) / (N - 1)
        if a * spec.multiplier(s_lo) < 1 and tail <= _REL * total:
            return total, budget + tail
        if total == 0.0 and tail < 1e-300:
            return 0.0, budget
        s_hi = s_lo - 1
    raise RuntimeError("heat-kernel series did not converge")


def heat_kernel(spec: KernelSpec, t: float, x) -> float:
    """rho(t, x) at a point x of Q_p (Fraction) or Q_p^2 (pair)."""
    return heat_kernel_shell(spec, t, spec.shell_of(x))[0]


def _sum_F(spec: KernelSpec, a: float, J: int) -> float:
    N = float(spec.N)
    hi = min(-J, _top(spec, a))
    s = np.arange(hi, hi - _depth(spec) - 1, -1)
    return float((1 - 1 / N) * np.sum(N ** (s + J).astype(float) * np.exp(-a * spec.multiplier(s))))


def _sum_Q(spec: KernelSpec, a: float, J: int) -> float:
    N = float(spec.N)
    s = np.arange(-J, -J - _depth(spec) - 1, -1)
    return float((1 - 1 / N) * np.sum(N ** (s + J).astype(float) * -np.expm1(-a * spec.multiplier(s))))


def ball_mass(spec: KernelSpec, t: float, J: int) -> float:
    """P(Y_t in B(J)) for any integer J."""
    if t <= 0:
        raise ValueError("t must be positive")
    a = spec.sigma * t
    F = _sum_F(spec, a, J)
    return F if F < 0.5 else 1.0 - _sum_Q(spec, a, J)


def ball_tail(spec: KernelSpec, t: float, J: int) -> float:
    """P(Y_t not in B(J)), accurate when small."""
    a = spec.sigma * t
    Q = _sum_Q(spec, a, J)
    return Q if Q < 0.5 else 1.0 - _sum_F(spec, a, J)


def shell_mass(spec: KernelSpec, t: float, J: int) -> float:
    """P(Y_t in shell J) without cancellation in either tail."""
    a = spec.sigma * t
    F1 = _sum_F(spec, a, J)
    if F1 < 0.5:
        return F1 - _sum_F(spec, a, J - 1)
    return _sum_Q(spec, a, J - 1) - _sum_Q(spec, a, J)


def _shell_range(spec: KernelSpec, t: float, rate: float = 1.0) -> tuple[int, int]:
    """Shell indices carrying all but ~1e-17 of the mass (moment weight ``rate``)."""
    a = spec.sigma * t
    step = 0.5 if spec.family == "aniso2d" else 1.0
    centre = -_top(spec, a)
    lo = centre - _depth(spec) - 2
    # outer mass ~ a M_{-J}, decaying like p^(-J b step rate)
    span = (math.log(max(a, 1e-300)) + 40 * math.log(10)) / (spec.b * math.log(spec.p) * step * rate)
    hi = centre + int(math.ceil(max(span, 0))) + 60
    return lo, hi


def kernel_mass(spec: KernelSpec, t: float) -> tuple[float, float]:
    """Numeric integral of rho(t, .) shell by shell, with its error budget."""
    lo, hi = _shell_range(spec, t)
    N = float(spec.N)
    rho0, budget = heat_kernel_shell(spec, t, -INF)
    total = rho0 * N ** (lo - 1)  # inner ball B(lo - 1), where rho <= rho(0)
    budget += rho0 * N ** (lo - 1)
    for J in range(lo, hi + 1):
        rho, b = heat_kernel_shell(spec, t, J)
        vol = N ** J * (1 - 1 / N)
        total += rho * vol
        budget += b * vol
    budget += ball_tail(spec, t, hi)
    # rounding: each shell value is a sum of positive terms, then shells are summed
    budget += 2 * np.finfo(float).eps * (hi - lo + 2 + 128) * total
    return total, budget


def kernel_moment(spec: KernelSpec, t: float, r: float) -> float:
    """E ||Y_t||^r = sum_J P(shell J) R_J^r."""
    if not 0 < r < spec.b:
        raise ValueError(f"r={r} must lie in (0, b={spec.b})")
    if t <= 0:
        raise ValueError("t must be positive")
    lo, hi = _shell_range(spec, t, rate=(spec.b - r) / spec.b)
    logp = math.log(spec.p)
    total = 0.0
    for J in range(lo, hi + 1):
        mass = shell_mass(spec, t, J)
        if mass > 0:
            # log space: far shells pair an underflowing mass with a huge radius
            total += math.exp(math.log(mass) + r * spec.radius_log(J) * logp)
    return total


def gamma_bound(a: float, p: int, b: float, r: float) -> float:
    """Upper bound p^r a^(r/b) Gamma(1 - r/b) for
    sum_k (exp(-a p^(k b)) - exp(-a p^((k+1) b))) p^(-k r)."""
    return float(p) ** r * a ** (r / b) * math.gamma(1 - r / b)


def kernel_moment_bound(spec: KernelSpec, t: float, r: float) -> float:
    """Gamma-function bound on kernel_moment from the ball-indicator series.

    ``1d``: C(r,1) p^r (sigma t)^(r/b) Gamma(1 - r/b); ``iso2d``: the same
    with C(r,2); ``aniso2d``: p C(r,2) p^r (sigma alpha_0 t)^(r/b) Gamma(1 - r/b).
    """
    p = float(spec.p)
    if spec.family == "1d":
        c = (p ** (r + 1) - p ** r) / (p ** (r + 1) - 1)
        return c * gamma_bound(spec.sigma * t, spec.p, spec.b, r)
    c2 = p ** r * (p * p - 1) / (p ** (r + 2) - 1)
    if spec.family == "iso2d":
        return c2 * gamma_bound(spec.sigma * t, spec.p, spec.b, r)
    return p * c2 * gamma_bound(spec.sigma * spec.alpha0 * t, spec.p, spec.b, r)


def convolved_ball_mass(spec: KernelSpec, t: float, s: float, J: int) -> float:
    """P(X + Y in B(J)) for independent X ~ rho(t), Y ~ rho(s), computed
    spatially from ball and shell masses.

    Both in B(J) always lands in B(J).  Both in the same shell L > J lands in
    B(J) with chance vol B(J) / vol S(L); different shells land outside.
    """
    N = float(spec.N)
    total = ball_mass(spec, t, J) * ball_mass(spec, s, J)
    L = J + 1
    # remaining terms are bounded by the product of the two tails
    while ball_tail(spec, t, L - 1) * ball_tail(spec, s, L - 1) * N ** (J - L) > _REL * total:
        total += shell_mass(spec, t, L) * shell_mass(spec, s, L) * N ** (J - L) / (1 - 1 / N)
        L += 1
    return total


def _as_ball(spec: KernelSpec, ball) -> Ball | None:
    if ball is None or isinstance(ball, Ball):
        return ball
    center, index = ball
    return Ball.at(center, index)


def fdd_prob(spec: KernelSpec, history: Sequence[tuple[float, Any]]) -> float:
    """P(Y_t1 in U_1, ..., Y_tk in U_k) for Y_0 = 0.

    ``history`` is a list of (time, ball) with strictly increasing times; a
    ball may be a :class:`Ball`, a (center, index) pair, or None to leave
    that time unconstrained.  A leading entry at time 0 constrains the
    starting point.
    """
    if not history:
        raise ValueError("empty history")
    items = list(history)
    start = None
    if items[0][0] == 0:
        start = _as_ball(spec, items[0][1])
        items = items[1:]
    times = [float(t) for t, _ in items]
    if any(t <= 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be positive and strictly increasing")
    balls, probs = _collect(items, [partial(ball_mass, spec, dt) for dt in np.diff([0.0] + times)], spec)
    if not balls:
        return 1.0 if start is None else float(_start_ok(spec, start))
    return history_prob(spec.family, spec.p, spec.N, balls, probs, start)


def _start_ok(spec: KernelSpec, start: Ball) -> bool:
    d = tuple(-c for c in start.center)
    return point_index(spec.family, d, spec.p) <= start.index


def _collect(items, step_probs, spec: KernelSpec):
    """Drop unconstrained times by merging their increments."""
    balls, probs = [], []
    pending: list = []
    for (_, ball), F in zip(items, step_probs):
        pending.append(F)
        ball = _as_ball(spec, ball)
        if ball is None:
            continue
        balls.append(ball)
        probs.append(_merge(pending))
        pending = []
    return balls, probs


def _merge(fs: list):
    """Ball probabilities of a sum of independent radial increments.

    For the limit process the increments over consecutive intervals merge
    into one increment over the summed interval.
    """
    if len(fs) == 1:
        return fs[0]
    spec = fs[0].args[0]
    dt = sum(f.args[1] for f in fs)
    return partial(ball_mass, spec, dt)


def kernel_for_law(family: str, p: int, b: float, D: float, P0: float | None = None,
                   h: float | None = None) -> KernelSpec:
    return KernelSpec.from_law(make_law(family, p, b, P0, h), D)
