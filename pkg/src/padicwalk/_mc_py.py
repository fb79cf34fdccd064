"""Pure numpy engine for the shell-index chain (fallback for ``_mc_core``).

Conditioned on its index history, S_n is uniform on its shell, so the
index alone is a Markov chain.  From index i an increment of index k
moves it to k when k > i, leaves it when k < i, and when k = i the two
leading classes cancel with probability 1/(N-1), after which S_n is
uniform on B(i-1).  Steps with k < max(i, 1) do nothing, so the engine
jumps straight to the next effective step with a geometric wait.

Randomness is counter based: uniform number ``slot`` of event ``e`` on
path ``j`` is a splitmix64 hash of (seed, j, 6 e + slot), so results do
not depend on how paths are split across workers.
"""
from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
SLOTS = 6
COMPONENT_BASE = 1 << 62
_G_CAP = float(1 << 62)


def splitmix(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def path_keys(seed: int, paths: np.ndarray) -> np.ndarray:
    s = splitmix(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
    return splitmix(np.asarray(paths, dtype=np.uint64) ^ s)


def uniforms(keys: np.ndarray, counter) -> np.ndarray:
    """Uniform doubles in (0, 1) for each key at the given counter(s)."""
    with np.errstate(over="ignore"):
        z = splitmix(keys + np.asarray(counter, dtype=np.uint64))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def _threshold(i: np.ndarray, fam: int, q: float, P0: float, C: float) -> np.ndarray:
    """P(increment index >= max(i, 1))."""
    j = np.maximum(i, 1)
    if fam == 0:
        return (1 - P0) * q ** (j - 1)
    k = (j - 1) // 2
    return np.where(j % 2 == 1, q ** k, q ** (k + 1) * (1 + C))


def _sample_ge(j: np.ndarray, u1, u2, u5, fam: int, q: float, C: float, wodd: float, weven: float):
    """Increment index conditioned on being >= j (j >= 1)."""
    lq = np.log(q)
    if fam == 0:
        return j + np.floor(np.log(u1) / lq).astype(np.int64)
    k0 = (j - 1) // 2
    odd_start = j % 2 == 1
    stay = ~odd_start & (u2 < C / (1 + C))
    base = np.where(odd_start, k0, k0 + 1)
    K = base + np.floor(np.log(u1) / lq).astype(np.int64)
    u_par = np.where(odd_start, u2, u5)
    pair = np.where(u_par * (wodd + weven) < wodd, 2 * K + 1, 2 * K + 2)
    return np.where(stay, j, pair)


def run_chunk(fam: int, q: float, P0: float, N: int, C: float, wodd: float, weven: float,
              seed: int, path_lo: int, path_hi: int, rec: np.ndarray, kcap: int) -> np.ndarray:
    """Index of S_n at each recorded n for paths [path_lo, path_hi); -1 marks overflow."""
    rec = np.asarray(rec, dtype=np.int64)
    n_paths = path_hi - path_lo
    out = np.empty((len(rec), n_paths), dtype=np.int32)
    keys = path_keys(seed, np.arange(path_lo, path_hi, dtype=np.uint64))
    idx = np.arange(n_paths)
    i = np.zeros(n_paths, dtype=np.int64)
    c = np.zeros(n_paths, dtype=np.int64)
    last = rec[-1] if len(rec) else -1
    lN = np.log(N)
    e = 0
    while idx.size:
        kk = keys[idx]
        base = e * SLOTS
        T = _threshold(i, fam, q, P0, C)
        u0 = uniforms(kk, base)
        # geometric wait; T = 1 gives log1p(-1) = -inf and a wait of 1
        with np.errstate(divide="ignore"):
            g = 1.0 + np.floor(np.log(u0) / np.log1p(-T))
        g = np.minimum(g, _G_CAP).astype(np.int64)
        nxt = c + np.minimum(g, np.int64(1 << 62) - c)
        for r, n in enumerate(rec):
            sel = (n >= c) & (n < nxt)
            if sel.any():
                out[r, idx[sel]] = i[sel]
        alive = nxt <= last
        u1, u2, u3, u4, u5 = (uniforms(kk, base + s) for s in range(1, 6))
        j = np.maximum(i, 1)
        k = _sample_ge(j, u1, u2, u5, fam, q, C, wodd, weven)
        up = k > i
        cancel = (~up) & (i >= 1) & (u3 < 1.0 / (N - 1))
        drop = np.floor(-np.log(u4) / lN).astype(np.int64)
        i = np.where(up, k, np.where(cancel, np.maximum(i - 1 - drop, 0), i))
        over = alive & (i > kcap)
        if over.any():
            for r, n in enumerate(rec):
                sel = over & (n >= nxt)
                if sel.any():
                    out[r, idx[sel]] = -1
            alive &= ~over
        idx, i, c = idx[alive], i[alive], nxt[alive]
        e += 1
    return out


def run_steps_chunk(fam: int, q: float, P0: float, N: int, C: float, wodd: float, weven: float,
                    seed: int, path_lo: int, path_hi: int, n_steps: int, kcap: int) -> np.ndarray:
    """Step-by-step version: one increment per step, final index per path."""
    n_paths = path_hi - path_lo
    keys = path_keys(seed, np.arange(path_lo, path_hi, dtype=np.uint64))
    i = np.zeros(n_paths, dtype=np.int64)
    over = np.zeros(n_paths, dtype=bool)
    lN = np.log(N)
    T1 = float(_threshold(np.array([1]), fam, q, P0, C)[0])
    for step in range(n_steps):
        base = step * SLOTS
        u0, u1, u2, u3, u4, u5 = (uniforms(keys, base + s) for s in range(6))
        k = np.where(u0 < T1, _sample_ge(np.ones_like(i), u1, u2, u5, fam, q, C, wodd, weven), 0)
        up = k > i
        cancel = (~up) & (k == i) & (i >= 1) & (u3 < 1.0 / (N - 1))
        drop = np.floor(-np.log(u4) / lN).astype(np.int64)
        i = np.where(up, k, np.where(cancel, np.maximum(i - 1 - drop, 0), i))
        over |= i > kcap
    return np.where(over, -1, i).astype(np.int32)
