"""Brute-force reference computations.

None of these use the closed-form multipliers or series of the library;
they start from the one-step shell probabilities and enumerate points.
"""
from __future__ import annotations

import numpy as np


def _log_norm_int(a: np.ndarray, K: int, p: int) -> np.ndarray:
    """log_p |a p^-K| for integer arrays; -1 marks zero (level-0 index 0)."""
    a = np.asarray(a, dtype=np.int64)
    v = np.zeros(a.shape, dtype=np.int64)
    rem = a.copy()
    nz = rem != 0
    while True:
        div = nz & (rem % p == 0)
        if not div.any():
            break
        rem = np.where(div, rem // p, rem)
        v += div
    out = K - v
    return np.where(a == 0, -1, out)


def pmf_1d(law, K: int) -> np.ndarray:
    """One-step pmf on B(K) = {a p^-K}, indexed by a."""
    p = law.p
    a = np.arange(p ** K)
    J = _log_norm_int(a, K, p)
    f = np.empty(a.shape)
    f[J < 0] = law.shell_prob(0)
    for j in range(1, K + 1):
        sel = J == j
        f[sel] = law.shell_prob(j) / (p ** j - p ** (j - 1))
    return f


def _fine_index(l1: np.ndarray, l2: np.ndarray) -> np.ndarray:
    # l = -1 encodes a zero coordinate
    big_neg = -10 ** 6
    a = np.where(l1 < 0, big_neg, 2 * l1)
    c = np.where(l2 < 0, big_neg, 2 * l2 - 1)
    J = np.maximum(a, c)
    return np.where(J < 0, 0, J)


def _coarse_index(l1: np.ndarray, l2: np.ndarray) -> np.ndarray:
    return np.maximum(np.maximum(l1, l2), 0)


def pmf_2d(law, K1: int, K2: int) -> np.ndarray:
    """One-step pmf on p^-K1 Z_p/Z_p x p^-K2 Z_p/Z_p as a (p^K1, p^K2) array."""
    p = law.p
    l1 = _log_norm_int(np.arange(p ** K1), K1, p)[:, None]
    l2 = _log_norm_int(np.arange(p ** K2), K2, p)[None, :]
    if law.family == "iso2d":
        J = _coarse_index(l1, l2)
        vol = lambda j: p ** (2 * j) - p ** (2 * j - 2)
    else:
        J = _fine_index(l1, l2)
        vol = lambda j: p ** j - p ** (j - 1)
    f = np.zeros(J.shape)
    f[J == 0] = law.shell_prob(0)
    for j in range(1, int(J.max()) + 1):
        sel = J == j
        if sel.any():
            f[sel] = law.shell_prob(j) / vol(j)
    return f


def char_sum_1d(law, y: int, K: int) -> float:
    """sum_g rho_X(g) chi(-g y) over g in B(K), y an integer in Z_p."""
    p = law.p
    mod = p ** K
    f = pmf_1d(law, K)
    a = np.arange(mod, dtype=np.int64)
    ph = (a * (y % mod)) % mod
    return float(np.sum(f * np.cos(2 * np.pi * ph / mod)))


def char_sum_2d(law, y: tuple[int, int], K1: int, K2: int, trace: bool) -> float:
    """Brute-force E chi(<X, y>) on the truncated group.

    ``trace`` selects chi(x1 y2 + x2 y1) instead of chi(x1 y1 + x2 y2).
    """
    p = law.p
    f = pmf_2d(law, K1, K2)
    m1, m2 = p ** K1, p ** K2
    a1 = np.arange(m1, dtype=np.int64)[:, None]
    a2 = np.arange(m2, dtype=np.int64)[None, :]
    c1, c2 = (y[1], y[0]) if trace else (y[0], y[1])
    # x1 c1 + x2 c2 = a1 c1 / p^K1 + a2 c2 / p^K2, reduced mod 1
    L = max(K1, K2)
    modL = p ** L
    ph = ((a1 * (c1 % m1)) % m1) * p ** (L - K1) + ((a2 * (c2 % m2)) % m2) * p ** (L - K2)
    return float(np.sum(f * np.cos(2 * np.pi * (ph % modL) / modL)))


def nfold_1d(law, n: int, K: int) -> np.ndarray:
    f = pmf_1d(law, K)
    return np.real(np.fft.ifft(np.fft.fft(f) ** n))


def nfold_2d(law, n: int, K1: int, K2: int) -> np.ndarray:
    f = pmf_2d(law, K1, K2)
    return np.real(np.fft.ifft2(np.fft.fft2(f) ** n))


def component_marginals_bruteforce(law, kmax: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """P(X_1 in S(a)), P(X_2 in S(c)) by summing cells S(a) x S(c).

    Index 0 is the zero coordinate.  Each cell gets the mass of its shell
    times the cell's share of the shell volume.
    """
    p = law.p
    if kmax is None:
        kmax = int(17 / (law.b * np.log10(p))) + 6
    idx = np.arange(kmax + 1)
    vol1 = np.where(idx == 0, 1.0, (float(p) ** idx) * (1 - 1 / p))
    l = np.where(idx == 0, -1, idx)
    l1, l2 = l[:, None], l[None, :]
    if law.family == "iso2d":
        J = _coarse_index(l1, l2)
        shell_vol = lambda j: (float(p) ** (2 * j)) * (1 - 1 / p ** 2)
    else:
        J = _fine_index(l1, l2)
        shell_vol = lambda j: (float(p) ** j) * (1 - 1 / p)
    cell = vol1[:, None] * vol1[None, :]
    mass = np.zeros(J.shape)
    for j in np.unique(J):
        sel = J == j
        if j == 0:
            mass[sel] = law.shell_prob(0)
        else:
            mass[sel] = law.shell_prob(int(j)) * cell[sel] / shell_vol(int(j))
    return mass.sum(axis=1), mass.sum(axis=0)
