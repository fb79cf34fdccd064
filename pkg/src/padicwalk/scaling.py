"""Embedded pre-limit laws and their convergence to the limit kernels.

The level-m walk lives on the lattice Gamma_m(G_m) with time step
1/lambda(m).  Its Haar density at time t is p^(d m) times the n-step mass
of the level-0 walk at p^-m x, with n = floor(lambda(m) t).  On the dual
side it is the truncated power E_m(n, y) = (1 - M(y) p^(-m b))^n on the
dual ball of radius p^m, which is compared with exp(-sigma t M(y)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from ._fdd import Ball, history_prob
from .groups import EmbeddingScheme
from .kernels import KernelSpec, _as_ball, _top, fdd_prob, heat_kernel_shell
from .padic import INF

__all__ = [
    "PreLimitLaw",
    "prelimit_density",
    "prelimit_char",
    "prelimit_ball_prob",
    "l1_dual",
    "sup_grid",
    "sup_distance",
    "fdd_compare",
    "FddComparison",
    "convergence_table",
    "CONVERGENCE_COLUMNS",
]

CONVERGENCE_COLUMNS = ("family", "p", "b", "h", "P0", "sigma", "m", "t", "l1_dual", "sup_grid")


@dataclass(frozen=True)
class PreLimitLaw:
    """A walk law together with the embedding at level m."""

    law: Any
    scheme: EmbeddingScheme

    def __post_init__(self) -> None:
        if (self.law.p, self.law.b) != (self.scheme.p, self.scheme.b):
            raise ValueError("law and embedding scheme disagree on (p, b)")

    @classmethod
    def build(cls, law, m: int, D: float | None = None, sigma: float | None = None) -> "PreLimitLaw":
        """Fix the time scale by D or by the limit diffusion parameter sigma."""
        if (D is None) == (sigma is None):
            raise ValueError("give exactly one of D and sigma")
        if D is None:
            D = sigma / _alpha_scale(law)
        return cls(law, EmbeddingScheme(law.p, law.b, D, m))

    @property
    def m(self) -> int:
        return self.scheme.m

    @property
    def shift(self) -> int:
        """Index offset between Q_p^d shells and level-0 shells."""
        return 2 * self.m if self.law.family == "aniso2d" else self.m

    @property
    def spec(self) -> KernelSpec:
        return KernelSpec.from_law(self.law, self.scheme.D)

    @property
    def sigma(self) -> float:
        return self.spec.sigma

    def steps(self, t: float) -> int:
        return self.scheme.steps(t)


def _alpha_scale(law) -> float:
    if law.family == "1d":
        return law.alpha
    if law.family == "iso2d":
        return law.alpha_max
    return 1.0


def _level0_index(pl: PreLimitLaw, J) -> int:
    if J == -INF:
        return 0
    return max(int(J) + pl.shift, 0)


def prelimit_density(pl: PreLimitLaw, t: float, x) -> float:
    """Haar density of Y_t at the lattice point x (any point of its coset)."""
    if t <= 0:
        raise ValueError("t must be positive")
    return _density_at(pl, pl.steps(t), pl.spec.shell_of(x))


def _density_at(pl: PreLimitLaw, n: int, J) -> float:
    i = _level0_index(pl, J)
    scale = float(pl.law.p) ** (pl.law.dim * pl.m)
    if n == 0:
        return scale if i == 0 else 0.0
    return scale * pl.law.nstep_mass(n, i)


def prelimit_char(pl: PreLimitLaw, t: float, y) -> float:
    """E_m(floor(lambda t), y); zero outside the dual ball of radius p^m."""
    if t <= 0:
        raise ValueError("t must be positive")
    s = pl.spec.dual_shell(y)
    if s == -INF:
        return 1.0
    if s > pl.shift:
        return 0.0
    return (1.0 - pl.law.multiplier(pl.shift - int(s))) ** pl.steps(t)


def prelimit_ball_prob(pl: PreLimitLaw, n: int, J: int) -> float:
    """P(S_n^(m) in B(J)) for a ball of Q_p^d."""
    i = J + pl.shift
    if i < 0:
        raise ValueError(f"ball index {J} is finer than the lattice resolution")
    if n == 0:
        return 1.0
    return pl.law.ball_prob(n, i)


def l1_dual(pl: PreLimitLaw, t: float) -> tuple[float, float]:
    """(integral of |exp(-sigma t M) - E_m|, analytic tail bound) over the dual."""
    if t <= 0:
        raise ValueError("t must be positive")
    spec = pl.spec
    n = pl.steps(t)
    a = spec.sigma * t
    N = float(spec.N)
    pmb = float(pl.law.p) ** (pl.m * pl.law.b)
    hi = max(pl.shift, _top(spec, a))
    step = 0.5 if spec.family == "aniso2d" else 1.0
    # below s_star a M_s < 1 and the integrand decays at least like N^s
    s_star = int(math.floor(-math.log(a) / (spec.b * math.log(spec.p) * step)))
    lo = min(s_star, 0) - int(math.ceil(60 / math.log(N))) - 4
    s = np.arange(lo, hi + 1)
    M = spec.multiplier(s)
    lim = np.exp(-a * M)
    inside = s <= pl.shift
    Md = np.where(inside, _alpha_scale(pl.law) * M / pmb, 0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        pre = np.where(inside, (1.0 - Md) ** n, 0.0)
    vol = N ** s.astype(float) * (1 - 1 / N)
    total = float(np.sum(vol * np.abs(lim - pre)))
    # below lo both values lie in [1 - max(a M, n M'), 1]; the bound decays by >= N per step
    tail = float(vol[0] * max(a * M[0], n * Md[0]) / (N - 1))
    # above hi the limit term is below exp(-_EXP_CUT) and super-geometric
    tail += float(2 * N ** (hi + 1) * math.exp(-a * spec.multiplier(hi + 1)))
    return total, tail


def sup_grid(pl: PreLimitLaw, t: float, extra: int = 4) -> float:
    """max |rho(t, x) - rho_m(t, x)| over one point per shell plus the origin."""
    spec = pl.spec
    n = pl.steps(t)
    lo = -pl.shift - extra
    a = spec.sigma * t
    hi = -lo + int(math.ceil(60 / (pl.law.b * math.log(pl.law.p)))) + max(0, -_top(spec, a)) + 8
    worst = abs(heat_kernel_shell(spec, t, -INF)[0] - _density_at(pl, n, -INF))
    for J in range(lo, hi + 1):
        worst = max(worst, abs(heat_kernel_shell(spec, t, J)[0] - _density_at(pl, n, J)))
    return worst


def sup_distance(pl: PreLimitLaw, t: float, resolution: int = 4) -> dict[str, float]:
    """Dual-side L1 distance (a bound on the sup distance) and the grid sup."""
    l1, tail = l1_dual(pl, t)
    return {"l1_dual": l1, "l1_tail_bound": tail, "sup_grid": sup_grid(pl, t, resolution)}


class FddComparison(tuple):
    """(prob_m, prob_limit, diff) with a flag for collapsed time points."""

    def __new__(cls, prob_m: float, prob_limit: float, collapsed: bool = False):
        obj = super().__new__(cls, (prob_m, prob_limit, abs(prob_m - prob_limit)))
        obj.collapsed = collapsed
        return obj

    @property
    def prob_m(self) -> float:
        return self[0]

    @property
    def prob_limit(self) -> float:
        return self[1]

    @property
    def diff(self) -> float:
        return self[2]


def fdd_compare(pl: PreLimitLaw, spec: KernelSpec | None, history: Sequence[tuple[float, Any]]) -> FddComparison:
    """Finite-dimensional probabilities of the level-m walk and of the limit.

    Times that map to the same step count are merged: the walk does not
    move between them, so their balls are intersected (``collapsed`` is set).
    """
    spec = spec or pl.spec
    if not history:
        raise ValueError("empty history")
    items = list(history)
    start = None
    if items[0][0] == 0:
        start = _as_ball(spec, items[0][1])
        items = items[1:]
    limit = fdd_prob(spec, ([(0, start)] if start is not None else []) + items)
    balls: list[Ball] = []
    probs: list = []
    collapsed = False
    prev_n, pending = 0, 0
    for t, ball in items:
        n = pl.steps(t)
        pending += n - prev_n
        prev_n = n
        ball = _as_ball(spec, ball)
        if ball is None:
            continue
        if ball.index + pl.shift < 0:
            raise ValueError(f"ball index {ball.index} is finer than the lattice resolution")
        if pending == 0 and balls:
            collapsed = True
        balls.append(ball)
        probs.append(None if pending == 0 else _ball_fn(pl, pending))
        pending = 0
    if not balls:
        prob_m = 1.0 if start is None else history_prob(spec.family, spec.p, spec.N, [start], [None])
    else:
        prob_m = history_prob(spec.family, spec.p, spec.N, balls, probs, start)
    return FddComparison(prob_m, limit, collapsed)


def _ball_fn(pl: PreLimitLaw, n: int):
    cache: dict[int, float] = {}

    def F(J: int) -> float:
        if J not in cache:
            cache[J] = prelimit_ball_prob(pl, n, J)
        return cache[J]
    return F


def convergence_table(law, ms: Iterable[int], ts: Iterable[float], D: float | None = None,
                      sigma: float | None = None) -> list[dict[str, Any]]:
    """Rows of (family, p, b, h, P0, sigma, m, t, l1_dual, sup_grid)."""
    rows = []
    for m in ms:
        pl = PreLimitLaw.build(law, m, D=D, sigma=sigma)
        for t in ts:
            d = sup_distance(pl, t)
            rows.append({
                "family": law.family, "p": law.p, "b": law.b,
                "h": getattr(law, "h", None), "P0": getattr(law, "P0", None),
                "sigma": pl.sigma, "m": m, "t": t,
                "l1_dual": d["l1_dual"], "sup_grid": d["sup_grid"],
            })
    return rows
