"""Finite-dimensional distributions of radial processes on balls.

A radial increment law is described by its ball probabilities F(J) =
P(X in B(J)).  Its mass on a non-centred coset c + B(s) follows from
radiality: the coset sits inside the shell of c, so it receives the shell
mass times the volume share N^(s-J) / (1 - 1/N).  Histories of balls are
resolved into cosets of the finest ball still to come, which turns the
iterated integral into a product of small matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .groups import coset_reps
from .padic import INF, coarse_index, fine_index, log_norm

__all__ = ["Ball", "point_index", "coord_radii", "history_prob"]


@dataclass(frozen=True)
class Ball:
    """center + B(index) in the family's ball filtration.

    ``index`` is log_p of the radius for ``1d`` and ``iso2d`` and the fine
    index for ``aniso2d``.
    """

    center: tuple[Fraction, ...]
    index: int

    @classmethod
    def centred(cls, index: int, dim: int = 1) -> "Ball":
        return cls((Fraction(0),) * dim, index)

    @classmethod
    def at(cls, center, index: int) -> "Ball":
        if not isinstance(center, (tuple, list)):
            center = (center,)
        return cls(tuple(Fraction(c) for c in center), index)


def point_index(family: str, x: Sequence[Fraction], p: int):
    if family == "1d":
        return log_norm(x[0], p)
    if family == "iso2d":
        return coarse_index(x, p)
    return fine_index(x, p)


def coord_radii(family: str, index: int) -> tuple[int, ...]:
    if family == "1d":
        return (index,)
    if family == "iso2d":
        return (index, index)
    k, eps = divmod(index, 2)
    return (k, k + eps)


def coset_mass(ball_prob: Callable[[int], float], N: int, J, s: int) -> float:
    """Mass of a radial law on c + B(s) where c has index J."""
    if J == -INF or J <= s:
        return ball_prob(s)
    shell = ball_prob(J) - ball_prob(J - 1)
    return shell * float(N) ** (s - J) / (1 - 1 / N)


def _contains(family: str, ball: Ball, x: Sequence[Fraction], p: int) -> bool:
    d = tuple(a - c for a, c in zip(x, ball.center))
    return point_index(family, d, p) <= ball.index


def history_prob(family: str, p: int, N: int, balls: Sequence[Ball],
                 ball_probs: Sequence[Callable[[int], float] | None],
                 start: Ball | None = None) -> float:
    """P(Z_1 in U_1, ..., Z_k in U_k) for a process started at 0.

    ``ball_probs[i]`` is the ball-probability function of the increment
    between consecutive times; ``None`` means a zero increment.
    """
    if not balls:
        raise ValueError("empty history")
    dim = len(balls[0].center)
    zero = (Fraction(0),) * dim
    if start is not None and not _contains(family, start, zero, p):
        return 0.0
    # the conditional future given Z_i is constant on cosets of B(res[i])
    res = [min(b.index for b in balls[i:]) for i in range(len(balls))]
    cells = [coset_reps(b.center, coord_radii(family, b.index), coord_radii(family, r), p)
             for b, r in zip(balls, res)]

    def kernel(src: list, dst: list, F, s: int) -> np.ndarray:
        K = np.empty((len(src), len(dst)))
        cache: dict = {}
        for i, a in enumerate(src):
            for j, c in enumerate(dst):
                J = point_index(family, tuple(x - y for x, y in zip(c, a)), p)
                if F is None:
                    K[i, j] = 1.0 if J == -INF or J <= s else 0.0
                    continue
                if J not in cache:
                    cache[J] = coset_mass(F, N, J, s)
                K[i, j] = cache[J]
        return K

    vec = kernel([zero], cells[0], ball_probs[0], res[0])[0]
    for i in range(1, len(balls)):
        vec = vec @ kernel(cells[i - 1], cells[i], ball_probs[i], res[i])
    return float(vec.sum())
