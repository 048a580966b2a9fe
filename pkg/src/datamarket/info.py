"""Revealed information in the Gaussian model.

Each platform i reports a noisy signal whose usefulness to the buyer is
summarised by its correlation ``gamma[i]`` and noise level ``sigma[i]``.
The information revealed by a set S of platforms is ``m' M^{-1} m``, with
``m_i = gamma_i``, ``M_ii = 2 + sigma_i**2`` and ``M_ij = gamma_i gamma_j``.
A platform with ``sigma = inf`` contributes nothing and is dropped before
the matrix is assembled.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParams, SubstitutesViolated
from .params import MarketParams, NoiseProfile, as_index_set

SERVICE_INFO = 0.5
_CHUNK = 4096


def platform_service_info() -> float:
    """Information each platform learns from serving the user."""
    return SERVICE_INFO


def info_ratio(gamma: float, sigma: float) -> float:
    """Per-platform ratio gamma**2 / (2 + sigma**2); zero when sigma is infinite."""
    if math.isinf(sigma):
        return 0.0
    return gamma * gamma / (2.0 + sigma * sigma)


def sigma_from_ratio(gamma: float, ratio: float) -> float:
    """Noise level that produces a given ratio; ``inf`` for a zero ratio."""
    if ratio <= 0.0:
        return math.inf
    return math.sqrt(max(gamma * gamma / ratio - 2.0, 0.0))


def _solve_info(gamma: np.ndarray, sigma: np.ndarray, idx: Sequence[int]) -> float:
    keep = [i for i in idx if not math.isinf(sigma[i])]
    if not keep:
        return 0.0
    g = gamma[keep]
    M = np.outer(g, g)
    M[np.diag_indices_from(M)] = 2.0 + sigma[keep] ** 2
    return float(g @ np.linalg.solve(M, g))


def revealed_info(params: MarketParams, noise: NoiseProfile, active: Iterable[int]) -> float:
    """Reduction in posterior variance of the buyer's target from the signals in ``active``."""
    members = as_index_set(active, params.K)
    _check_lengths(params, noise)
    return _solve_info(params.gamma_array, noise.array, members)


def _check_lengths(params, noise):
    if len(noise) != params.K:
        raise InvalidParams(
            f"noise profile has {len(noise)} entries, expected {params.K}", "sigma")


def info_table(gamma: np.ndarray, sigma: np.ndarray, members: Sequence[int]) -> np.ndarray:
    """Revealed information for every subset of ``members``.

    Entry ``mask`` of the result corresponds to the subset whose j-th bit
    selects ``members[j]``. All subsets are solved in one batched call, with
    unselected rows replaced by identity rows.  ``sigma`` may also be a
    2-D array of noise profiles, one per row, giving one table per row.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim == 1:
        return info_table(gamma, sigma[None, :], members)[0]
    members = list(members)
    n = len(members)
    rows = sigma.shape[0]
    out = np.zeros((rows, 1 << n))
    if n == 0:
        return out
    g = np.asarray(gamma, dtype=float)[members]
    s = sigma[:, members]
    finite = np.isfinite(s)
    diag_full = 2.0 + np.where(finite, s, 0.0) ** 2
    outer = np.outer(g, g)
    ar = np.arange(n)
    bits = ((np.arange(1 << n)[:, None] >> ar) & 1) == 1
    flat = out.reshape(-1)
    total = rows << n
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        r, mk = idx >> n, idx & ((1 << n) - 1)
        keep = bits[mk] & finite[r]
        m = np.where(keep, g, 0.0)
        M = np.where(keep[:, :, None] & keep[:, None, :], outer, 0.0)
        M[:, ar, ar] = np.where(keep, diag_full[r], 1.0)
        x = np.linalg.solve(M, m[..., None])[..., 0]
        flat[idx] = np.einsum("ij,ij->i", m, x)
    return out


def revealed_info_pair(g1: float, g2: float, s1: float, s2: float) -> float:
    """Closed form for two platforms."""
    for name, g in (("gamma1", g1), ("gamma2", g2)):
        if not 0.0 <= g <= 1.0:
            raise InvalidParams(f"{name} = {g} is outside [0, 1]", name)
    for name, s in (("sigma1", s1), ("sigma2", s2)):
        if math.isnan(s) or s < 0:
            raise InvalidParams(f"{name} = {s} must be >= 0", name)
    if math.isinf(s1) and math.isinf(s2):
        return 0.0
    if math.isinf(s2):
        return g1 * g1 / (2.0 + s1 * s1)
    if math.isinf(s1):
        return g2 * g2 / (2.0 + s2 * s2)
    a, b = 2.0 + s1 * s1, 2.0 + s2 * s2
    q1, q2 = g1 * g1, g2 * g2
    return (q1 * b + q2 * a - 2.0 * q1 * q2) / (a * b - q1 * q2)


def revealed_info_symmetric(K: int, t: float, t_prime: float | None = None) -> float:
    """Closed form when every platform has ratio ``t``, optionally one with ``t_prime``."""
    if K < 1:
        raise InvalidParams(f"K must be >= 1, got {K}", "K")
    if not 0.0 <= t <= 1.0:
        raise InvalidParams(f"t = {t} is outside [0, 1]", "t")
    if t_prime is None:
        return K * t / (1.0 + (K - 1) * t)
    if not 0.0 <= t_prime <= 1.0:
        raise InvalidParams(f"t_prime = {t_prime} is outside [0, 1]", "t_prime")
    if K == 1:
        return t_prime
    denom = 1.0 - t + (K - 1) * t * (1.0 - t_prime)
    if denom == 0.0:
        return 1.0
    return 1.0 - (1.0 - t) * (1.0 - t_prime) / denom


def info_from_ratios(ratios: Iterable[float]) -> float:
    """Rank-one shortcut: with s = sum r/(1 - r), information is s/(1 + s)."""
    s = 0.0
    for r in ratios:
        if r >= 1.0:
            return 1.0
        s += r / (1.0 - r)
    return s / (1.0 + s)


def marginal_info(params: MarketParams, noise: NoiseProfile, active: Iterable[int], i: int) -> float:
    """I(S + {i}) - I(S)."""
    members = as_index_set(active, params.K)
    if not 0 <= i < params.K:
        raise IndexError(f"platform index {i} out of range for K={params.K}")
    if i in members:
        raise IndexError(f"platform {i} is already in the active set")
    _check_lengths(params, noise)
    g, s = params.gamma_array, noise.array
    return max(_solve_info(g, s, members + (i,)) - _solve_info(g, s, members), 0.0)


def gammas_from_vectors(x: Sequence[Sequence[float]], y: Sequence[float],
                        tol: float = 1e-9) -> np.ndarray:
    """Correlations of platform vectors with the buyer vector.

    Raises SubstitutesViolated when the residuals x_i - gamma_i y are not
    mutually orthogonal, and InvalidParams for vectors that are not unit norm.
    """
    X = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[1] != y.shape[0]:
        raise InvalidParams("platform and buyer vectors differ in dimension", "x")
    gamma = X @ y
    resid = X - np.outer(gamma, y)
    gram = resid @ resid.T
    K = X.shape[0]
    for i in range(K):
        for j in range(i + 1, K):
            if abs(gram[i, j]) > tol:
                raise SubstitutesViolated((i, j), float(gram[i, j]))
    if abs(np.linalg.norm(y) - 1.0) > tol:
        raise InvalidParams("buyer vector is not unit norm", "y")
    for i, row in enumerate(X):
        if abs(np.linalg.norm(row) - 1.0) > tol:
            raise InvalidParams(f"platform vector {i} is not unit norm", "x")
    return gamma
