"""Diffusion constants of the coordinate processes of 2D walks.

A 1D component that stays put with probability P0 and otherwise jumps with
the radial tail of exponent b has diffusion constant
D (1 - P0) (p^(b+1) - 1) / (p^b (p - 1)).  Applying this to the holding
probabilities of the coordinates of the isotropic and anisotropic 2D laws
gives sigma(max), sigma(h, 1) and sigma(h, 2); both the closed forms and
the holding-probability route are evaluated and stored.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable

import numpy as np

from .laws import AnisoLaw2D, IsoLaw2D

__all__ = [
    "DEFAULT_H_GRID",
    "DiffusionReport",
    "sigma_from_p0",
    "p0_components",
    "p0_max",
    "sigma_components",
    "sigma_left_limits",
    "gap_report",
    "diffusion_report",
    "endpoint_scan",
    "write_gnuplot",
]

DEFAULT_H_GRID: tuple[float, ...] = tuple(sorted(
    {round(0.05 * j, 10) for j in range(1, 20)} | {1 - 10.0 ** -k for k in range(2, 7)}))
ROUTE_TOL = 1e-13


def _check_h(h: float) -> None:
    if not 0 < h < 1:
        raise ValueError(f"h={h} must lie in (0, 1); h=1 is the isotropic family")


def sigma_from_p0(D: float, p: int, b: float, P0: float) -> float:
    """Diffusion constant of a 1D radial walk with holding probability P0."""
    if not 0 <= P0 < 1:
        raise ValueError(f"P0={P0} must lie in [0, 1)")
    pb = float(p) ** b
    return D * (1 - P0) * (pb * p - 1) / (pb * (p - 1))


def p0_max(p: int, b: float) -> float:
    """Holding probability of either coordinate of the isotropic law."""
    pb = float(p) ** b
    return p * (p - 1) * (pb - 1) / ((p * p - 1) * (pb * p - 1))


def p0_components(p: int, b: float, h: float) -> tuple[float, float]:
    """Holding probabilities of the two coordinates of the anisotropic law."""
    _check_h(h)
    pb, phb = float(p) ** b, float(p) ** (h * b)
    common = (pb - 1) / (pb * p - 1) / (pb + phb)
    return pb * p * common, phb * common


def sigma_components(D: float, p: int, b: float, h: float) -> tuple[float, float, float]:
    """Closed forms (sigma(h,1), sigma(h,2), sigma(max))."""
    _check_h(h)
    pb, phb = float(p) ** b, float(p) ** (h * b)
    s1 = D / (p - 1) * (p * (phb + 1) / (pb + phb) - 1 / pb)
    s2 = D * (1 + (pb - 1) / ((p - 1) * (pb + phb)))
    smax = D * (pb * p * p - 1) / (pb * (p * p - 1))
    return s1, s2, smax


def sigma_left_limits(D: float, p: int, b: float) -> tuple[float, float]:
    """Limits of sigma(h,1) and sigma(h,2) as h -> 1 from below."""
    pb = float(p) ** b
    return (D * (pb * p + p - 2) / (2 * pb * (p - 1)),
            D * (1 + (pb - 1) / (2 * pb * (p - 1))))


def gap_report(D: float, p: int, b: float) -> tuple[float, float]:
    """(sigma(max) - sigma(1-,1), sigma(1-,2) - sigma(max)) in closed form."""
    if b <= 0:
        raise ValueError("b must be positive")
    pb = float(p) ** b
    return D * (pb - 1) / (2 * pb / p * (p + 1)), D * (pb - 1) / (2 * pb * (p + 1))


@dataclass
class DiffusionReport:
    p: int
    b: float
    D: float
    h: list[float]
    sigma1: list[float]
    sigma2: list[float]
    sigma_max: float
    sigma1_left: float
    sigma2_left: float
    gap1: float
    gap2: float
    P0_max: float
    P0_1: list[float]
    P0_2: list[float]
    # the same constants through sigma_from_p0
    sigma1_p0: list[float] = field(default_factory=list)
    sigma2_p0: list[float] = field(default_factory=list)
    sigma_max_p0: float = 0.0

    def rows(self) -> list[dict[str, Any]]:
        return [{"p": self.p, "b": self.b, "D": self.D, "h": h, "sigma1": s1, "sigma2": s2,
                 "sigma_max": self.sigma_max, "sigma1_p0": r1, "sigma2_p0": r2,
                 "P0_1": q1, "P0_2": q2, "P0_max": self.P0_max}
                for h, s1, s2, r1, r2, q1, q2 in zip(self.h, self.sigma1, self.sigma2, self.sigma1_p0,
                                                     self.sigma2_p0, self.P0_1, self.P0_2)]

    def summary(self) -> dict[str, float]:
        return {"sigma_max": self.sigma_max, "sigma_max_p0": self.sigma_max_p0,
                "sigma1_left": self.sigma1_left, "sigma2_left": self.sigma2_left,
                "gap1": self.gap1, "gap2": self.gap2, "P0_max": self.P0_max}

    def checks(self, tol: float = ROUTE_TOL) -> dict[str, bool]:
        """Internal consistency of the report; every value should be True."""
        s1, s2 = np.array(self.sigma1), np.array(self.sigma2)
        p = self.p
        scale = max(1.0, abs(self.sigma_max))
        convex = s1 / (p + 1) + s2 * p / (p + 1)
        return {
            "ordering": bool(np.all(s1 < self.sigma_max) and np.all(self.sigma_max < s2)),
            "monotone": bool(np.all(np.diff(s1) >= 0) and np.all(np.diff(s2) <= 0)),
            "convex_identity": bool(np.max(np.abs(convex - self.sigma_max), initial=0) <= tol * scale),
            "p0_route": bool(np.max(np.abs(s1 - self.sigma1_p0), initial=0) <= tol * scale
                             and np.max(np.abs(s2 - self.sigma2_p0), initial=0) <= tol * scale
                             and abs(self.sigma_max - self.sigma_max_p0) <= tol * scale),
            "gaps": abs(self.gap1 - (self.sigma_max - self.sigma1_left)) <= tol * scale
                    and abs(self.gap2 - (self.sigma2_left - self.sigma_max)) <= tol * scale,
        }

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["checks"] = self.checks()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def diffusion_report(p: int, b: float, D: float = 1.0, h_grid: Iterable[float] | None = None) -> DiffusionReport:
    if p < 2 or b <= 0 or D <= 0:
        raise ValueError("need p >= 2, b > 0, D > 0")
    hs = [float(h) for h in (DEFAULT_H_GRID if h_grid is None else h_grid)]
    for h in hs:
        _check_h(h)
    sig = [sigma_components(D, p, b, h) for h in hs]
    p0s = [p0_components(p, b, h) for h in hs]
    smax = D * (float(p) ** (b + 2) - 1) / (float(p) ** b * (p * p - 1))
    left1, left2 = sigma_left_limits(D, p, b)
    g1, g2 = gap_report(D, p, b)
    pm = p0_max(p, b)
    return DiffusionReport(
        p, b, D, hs, [s[0] for s in sig], [s[1] for s in sig], smax, left1, left2, g1, g2, pm,
        [q[0] for q in p0s], [q[1] for q in p0s],
        [sigma_from_p0(D, p, b, q[0]) for q in p0s], [sigma_from_p0(D, p, b, q[1]) for q in p0s],
        sigma_from_p0(D, p, b, pm))


def endpoint_scan(p: int, b: float, D: float = 1.0, h_grid: Iterable[float] | None = None,
                  k_max: int = 6) -> list[dict[str, Any]]:
    """Per h: component sigmas and holding probabilities, and the largest gap
    between paired fine shell probabilities and the isotropic coarse ones.

    ``odd_share`` is the weight of the inner fine shell within its pair; the
    isotropic law splits a coarse shell by volume, giving ``iso_odd_share``.
    """
    hs = [float(h) for h in (DEFAULT_H_GRID if h_grid is None else h_grid)]
    iso = IsoLaw2D(p, b)
    coarse = np.array([iso.shell_prob(k) for k in range(1, k_max + 1)])
    smax = sigma_components(D, p, b, 0.5)[2]
    gap1, gap2 = gap_report(D, p, b)
    rows = []
    for h in hs:
        law = AnisoLaw2D(p, b, h)
        paired = np.array([law.shell_prob(2 * k - 1) + law.shell_prob(2 * k) for k in range(1, k_max + 1)])
        s1, s2, _ = sigma_components(D, p, b, h)
        q1, q2 = p0_components(p, b, h)
        rows.append({
            "h": h, "sigma1": s1, "sigma2": s2, "sigma_max": smax,
            "sigma1_gap": smax - s1, "sigma2_gap": s2 - smax,
            "P0_1": q1, "P0_2": q2, "P0_max": p0_max(p, b),
            "shell_diff": float(np.max(np.abs(paired - coarse))),
            "odd_share": float(law.shell_prob(1) / paired[0]), "iso_odd_share": 1 / (p + 1),
            "gap1": gap1, "gap2": gap2,
        })
    return rows


def write_gnuplot(report: DiffusionReport, out_dir: str | os.PathLike) -> list[str]:
    """Two-column files h, sigma(h,i) for i = 1, 2."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for i, col in ((1, report.sigma1), (2, report.sigma2)):
        path = os.path.join(out_dir, f"sigma_h{i}.dat")
        with open(path, "w") as fh:
            fh.write(f"# h sigma(h,{i})  p={report.p} b={report.b} D={report.D}\n")
            for h, s in zip(report.h, col):
                fh.write(f"{h!r} {s!r}\n")
        paths.append(path)
    return paths
