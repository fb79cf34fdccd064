"""Monte Carlo simulation of primitive and embedded walks.

Shell statistics only need the shell index of S_n, which is itself a
Markov chain (see ``_mc_py``).  The compiled engine ``_mc_core`` is used
when it was built; otherwise the numpy engine runs the same algorithm with
the same counter-based random numbers.  Component statistics in 2D are
drawn at the recorded times from the uniform law on the current shell.
A slow full-digit walk built from :class:`GroupElem` is kept as a check.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import _mc_py
from .groups import K_MAX_DEFAULT, EmbeddingScheme, GroupElem, ShellOverflowError, quotient_map

try:
    from . import _mc_core
except ImportError:  # pragma: no cover - depends on the build
    _mc_core = None

__all__ = [
    "ENGINE",
    "SimConfig",
    "EmpiricalHistogram",
    "MomentEstimate",
    "SimResult",
    "simulate_primitive",
    "simulate_embedded",
    "simulate_steps",
    "empirical_moment",
    "wilson_interval",
    "simulate_digits",
    "embedded_path",
]

ENGINE = "compiled" if _mc_core is not None else "numpy"
WILSON_Z = 4.0
HEAVY_TAIL_RATIO = 0.5
CHUNK = 1 << 16


def _engine(name: str):
    if name == "auto":
        name = os.environ.get("PADICWALK_ENGINE", ENGINE)
    if name == "compiled":
        if _mc_core is None:
            raise RuntimeError("compiled engine not built")
        return _mc_core
    if name == "numpy":
        return _mc_py
    raise ValueError(f"unknown engine {name!r}")


def wilson_interval(count, total, z: float = WILSON_Z):
    """Wilson score interval for a binomial proportion."""
    count = np.asarray(count, dtype=float)
    n = float(total)
    phat = count / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z / denom * np.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    return centre - half, centre + half


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run parameters.  ``steps`` are the recorded step counts."""

    law: Any
    n_paths: int
    steps: tuple[int, ...] = (1,)
    seed: int = 0
    workers: int = 1
    k_max: int = K_MAX_DEFAULT
    engine: str = "auto"

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.engine not in ("auto", "compiled", "numpy"):
            raise ValueError(f"unknown engine {self.engine!r}")
        steps = tuple(int(n) for n in self.steps)
        if not steps or any(n < 0 for n in steps) or list(steps) != sorted(steps):
            raise ValueError("steps must be a nondecreasing list of counts >= 0")
        object.__setattr__(self, "steps", steps)
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def index_cap(self) -> int:
        """K_max in the law's index units (fine indices count twice)."""
        return 2 * self.k_max if self.law.family == "aniso2d" else self.k_max

    def to_dict(self) -> dict[str, Any]:
        return {"law": self.law.to_dict(), "n_paths": self.n_paths, "steps": list(self.steps),
                "seed": self.seed, "workers": self.workers, "k_max": self.k_max}


@dataclass
class EmpiricalHistogram:
    """Counts of paths per shell index; index 0 is the atom at the origin.

    ``offset`` converts to shells of Q_p^d for embedded walks: the shell of
    Q_p^d is ``index - offset``, and index 0 is the lattice cell at 0.
    """

    kind: str
    counts: np.ndarray
    overflow: int = 0
    label: float = 0
    offset: int = 0

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.overflow

    @property
    def atom(self) -> int:
        return int(self.counts[0]) if len(self.counts) else 0

    def freq(self) -> np.ndarray:
        return self.counts / self.total

    def wilson(self, z: float = WILSON_Z) -> tuple[np.ndarray, np.ndarray]:
        return wilson_interval(self.counts, self.total, z)

    def half_widths(self, z: float = WILSON_Z) -> np.ndarray:
        lo, hi = self.wilson(z)
        return (hi - lo) / 2

    def covers(self, probs: Sequence[float], z: float = WILSON_Z, slack: float = 0.0,
               min_expected: float = 5.0) -> np.ndarray:
        """Whether each expected probability lies in its Wilson interval.

        Cells after the last one with expected count at least
        ``min_expected`` are pooled into one tail cell (last entry), with
        expected mass 1 - sum of the earlier cells and overflow counted in
        the tail.  Rounding-level negatives (above -1e-12) count as zero.
        """
        probs = np.asarray(probs, dtype=float)
        probs = np.where((probs < 0) & (probs > -1e-12), 0.0, probs)
        big = np.nonzero(probs * self.total >= min_expected)[0]
        K = int(big[-1]) + 1 if big.size else 1
        counts = np.zeros(K + 1, dtype=np.int64)
        head = min(K, len(self.counts))
        counts[:head] = self.counts[:head]
        counts[K] = self.counts[K:].sum() + self.overflow
        expected = np.zeros(K + 1)
        expected[: min(K, len(probs))] = probs[:K]
        expected[K] = max(1.0 - expected[:K].sum(), 0.0)
        lo, hi = wilson_interval(counts, self.total, z)
        return (expected >= lo - slack) & (expected <= hi + slack)

    def merge(self, other: "EmpiricalHistogram") -> "EmpiricalHistogram":
        if (self.kind, self.label, self.offset) != (other.kind, other.label, other.offset):
            raise ValueError("histograms describe different quantities")
        n = max(len(self.counts), len(other.counts))
        c = np.zeros(n, dtype=np.int64)
        c[: len(self.counts)] += self.counts
        c[: len(other.counts)] += other.counts
        return EmpiricalHistogram(self.kind, c, self.overflow + other.overflow, self.label, self.offset)

    def rows(self) -> list[dict[str, Any]]:
        lo, hi = self.wilson()
        return [{"kind": self.kind, "label": self.label, "index": i, "shell": i - self.offset,
                 "count": int(c), "overflow": self.overflow, "freq": c / self.total, "wilson_lo": float(l), "wilson_hi": float(h)}
                for i, (c, l, h) in enumerate(zip(self.counts, lo, hi))]


@dataclass(frozen=True)
class MomentEstimate:
    label: float
    mean: float
    stderr: float
    n_used: int
    overflow: int

    @property
    def heavy_tail(self) -> bool:
        return self.mean > 0 and self.stderr / self.mean > HEAVY_TAIL_RATIO


@dataclass
class SimResult:
    config: SimConfig
    labels: tuple
    histograms: list[EmpiricalHistogram]
    components: list[tuple[EmpiricalHistogram, EmpiricalHistogram]] = field(default_factory=list)
    overflow_bound: float = 0.0
    engine: str = ENGINE
    offset: int = 0

    def histogram(self, label) -> EmpiricalHistogram:
        return self.histograms[self.labels.index(label)]

    def rows(self) -> list[dict[str, Any]]:
        out = []
        for h in self.histograms:
            out.extend(h.rows())
        for pair in self.components:
            for h in pair:
                out.extend(h.rows())
        return out

    def to_dict(self) -> dict[str, Any]:
        return {"config": self.config.to_dict(), "engine": self.engine, "offset": self.offset,
                "overflow_bound": self.overflow_bound, "rows": self.rows()}


def _engine_params(law) -> tuple:
    p, b = law.p, law.b
    q = float(p) ** (-b)
    if law.family == "1d":
        return (0, q, float(law.P0), p, 0.0, 0.0, 0.0)
    if law.family == "iso2d":
        return (0, q, 0.0, p * p, 0.0, 0.0, 0.0)
    return (1, q, 0.0, p, law.C, float(p) ** (-law.h * b), q)


def _chunks(n_paths: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + CHUNK, n_paths)) for lo in range(0, n_paths, CHUNK)]


def _run_states(cfg: SimConfig, rec: Sequence[int]) -> np.ndarray:
    eng = _engine(cfg.engine)
    params = _engine_params(cfg.law)
    rec = np.asarray(rec, dtype=np.int64)

    def job(bounds):
        return eng.run_chunk(*params, cfg.seed, bounds[0], bounds[1], rec, cfg.index_cap)

    chunks = _chunks(cfg.n_paths)
    if cfg.workers == 1 or len(chunks) == 1:
        parts = [job(c) for c in chunks]
    else:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(job, chunks))
    return np.concatenate(parts, axis=1)


def _histogram(states: np.ndarray, kind: str, label, offset: int = 0) -> EmpiricalHistogram:
    ok = states >= 0
    counts = np.bincount(states[ok], minlength=1).astype(np.int64)
    return EmpiricalHistogram(kind, counts, int((~ok).sum()), label, offset)


def _components(cfg: SimConfig, states: np.ndarray, r: int, label) -> tuple[EmpiricalHistogram, EmpiricalHistogram]:
    """Coordinate log-norm indices of a uniform point on each path's shell."""
    law = cfg.law
    p = law.p
    keys = _mc_py.path_keys(cfg.seed, np.arange(cfg.n_paths, dtype=np.uint64))
    base = _mc_py.COMPONENT_BASE + 4 * r
    u_sub, u_ball = _mc_py.uniforms(keys, base), _mc_py.uniforms(keys, base + 1)
    i = states.astype(np.int64)
    ok = i >= 0
    if law.family == "iso2d":
        # coarse shell k = fine shells 2k-1 and 2k with weights 1 : p
        fine = np.where(i == 0, 0, np.where(u_sub < 1.0 / (1 + p), 2 * i - 1, 2 * i))
    else:
        fine = i
    k, eps = np.divmod(fine - 1, 2)
    drop = np.floor(-np.log(u_ball) / math.log(p)).astype(np.int64)
    # j = 2k+1: uniform on B(k) x S(k+1);  j = 2k+2: S(k+1) x uniform on B(k+1)
    c1 = np.where(eps == 0, np.maximum(k - drop, 0), k + 1)
    c2 = np.where(eps == 0, k + 1, np.maximum(k + 1 - drop, 0))
    c1 = np.where(fine == 0, 0, c1)
    c2 = np.where(fine == 0, 0, c2)
    c1 = np.where(ok, c1, -1)
    c2 = np.where(ok, c2, -1)
    return (_histogram(c1, "component1", label), _histogram(c2, "component2", label))


def _kind(law) -> str:
    return {"1d": "1d", "iso2d": "coarse", "aniso2d": "fine"}[law.family]


def _overflow_bound(cfg: SimConfig, n: int) -> float:
    return min(1.0, cfg.law.tail(cfg.index_cap + 1) * n)


def simulate_primitive(cfg: SimConfig, components: bool | None = None) -> SimResult:
    """Shell histograms of S_n for each recorded n."""
    states = _run_states(cfg, cfg.steps)
    hists = [_histogram(states[r], _kind(cfg.law), n) for r, n in enumerate(cfg.steps)]
    comps = []
    if components is None:
        components = cfg.law.dim == 2
    if components and cfg.law.dim == 2:
        comps = [_components(cfg, states[r], r, n) for r, n in enumerate(cfg.steps)]
    eng = "numpy" if _engine(cfg.engine) is _mc_py else "compiled"
    return SimResult(cfg, cfg.steps, hists, comps, _overflow_bound(cfg, max(cfg.steps)), eng)


def simulate_embedded(cfg: SimConfig, scheme: EmbeddingScheme, t_grid: Sequence[float]) -> SimResult:
    """Shell histograms of Y_t = Gamma_m(S^(m)_floor(lambda t)) on a time grid."""
    ts = [float(t) for t in t_grid]
    if any(t <= 0 for t in ts) or ts != sorted(ts):
        raise ValueError("t_grid must be positive and increasing")
    if (scheme.p, scheme.b) != (cfg.law.p, cfg.law.b):
        raise ValueError("scheme and law disagree on (p, b)")
    steps = [scheme.steps(t) for t in ts]
    states = _run_states(cfg, steps)
    shift = 2 * scheme.m if cfg.law.family == "aniso2d" else scheme.m
    hists = [_histogram(states[r], _kind(cfg.law), t, shift) for r, t in enumerate(ts)]
    eng = "numpy" if _engine(cfg.engine) is _mc_py else "compiled"
    return SimResult(cfg, tuple(ts), hists, [], _overflow_bound(cfg, max(steps)), eng, shift)


def simulate_steps(cfg: SimConfig, n_steps: int) -> EmpiricalHistogram:
    """Step-by-step simulation (one increment per step) of the index chain."""
    eng = _engine(cfg.engine)
    params = _engine_params(cfg.law)

    def job(bounds):
        return eng.run_steps_chunk(*params, cfg.seed, bounds[0], bounds[1], n_steps, cfg.index_cap)

    chunks = _chunks(cfg.n_paths)
    if cfg.workers == 1 or len(chunks) == 1:
        parts = [job(c) for c in chunks]
    else:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(job, chunks))
    return _histogram(np.concatenate(parts), _kind(cfg.law), n_steps)


def _radii_pow(law, count: int, r: float, offset: int = 0) -> np.ndarray:
    """||x||^r on each index; index 0 is the origin (or the lattice cell at 0)."""
    out = np.zeros(count)
    p = float(law.p)
    scale = offset // 2 if law.family == "aniso2d" else offset
    for i in range(1, count):
        out[i] = p ** (r * (law.radius_log(i) - scale))
    return out


def empirical_moment(cfg_or_result: SimConfig | SimResult, r: float) -> list[MomentEstimate]:
    """Sample mean of ||S_n||^r (or ||Y_t||^r) with its standard error.

    Overflow paths are excluded and counted.
    """
    res = cfg_or_result if isinstance(cfg_or_result, SimResult) else simulate_primitive(cfg_or_result, False)
    law = res.config.law
    if not 0 < r < law.b:
        raise ValueError(f"r={r} must lie in (0, b={law.b})")
    out = []
    for label, h in zip(res.labels, res.histograms):
        n = int(h.counts.sum())
        w = _radii_pow(law, len(h.counts), r, res.offset)
        m1 = float(np.dot(h.counts, w)) / n
        m2 = float(np.dot(h.counts, w * w)) / n
        se = math.sqrt(max(m2 - m1 * m1, 0.0) / max(n - 1, 1))
        out.append(MomentEstimate(label, m1, se, n, h.overflow))
    return out


def simulate_digits(law, n_steps: int, n_paths: int, seed: int = 0,
                    k_max: int | None = K_MAX_DEFAULT) -> EmpiricalHistogram:
    """Full-digit walk with exact group addition; slow, for cross-checks."""
    rng = np.random.default_rng(seed)
    counts: dict[int, int] = {}
    overflow = 0
    kind = _kind(law)
    for _ in range(n_paths):
        s = GroupElem.identity(law.p, 0, law.dim)
        try:
            for _ in range(n_steps):
                s = s + law.sample_step(rng, k_max)
        except ShellOverflowError:
            overflow += 1
            continue
        i = law.point_index(s)
        counts[i] = counts.get(i, 0) + 1
    arr = np.zeros(max(counts, default=0) + 1, dtype=np.int64)
    for i, c in counts.items():
        arr[i] = c
    return EmpiricalHistogram(kind, arr, overflow, n_steps)


def embedded_path(law, scheme: EmbeddingScheme, t_grid: Sequence[float], seed: int = 0,
                  k_max: int | None = K_MAX_DEFAULT) -> list:
    """One embedded path Y_t = Gamma_m(Q_m(S_floor(lambda t))) from full digits."""
    rng = np.random.default_rng(seed)
    steps = [scheme.steps(t) for t in t_grid]
    s = GroupElem.identity(law.p, 0, law.dim)
    done = 0
    out = []
    for n in steps:
        while done < n:
            s = s + law.sample_step(rng, k_max)
            done += 1
        y = quotient_map(s, scheme.m)
        out.append(y.coords[0] if law.dim == 1 else y.coords)
    return out
