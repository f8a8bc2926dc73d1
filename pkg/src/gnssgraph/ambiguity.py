"""Integer least-squares ambiguity resolution (LAMBDA method).

Decorrelates the float ambiguity covariance with a unimodular Z-transform
(integer Gauss eliminations plus symmetric permutations), then finds the
best and second-best integer candidates with a depth-first bounded search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefinite


@dataclass
class AmbiguityProblem:
    """Float double-difference ambiguities and their covariance (cycles)."""

    float_values: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        self.float_values = np.asarray(self.float_values, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)
        if self.covariance.shape != (self.float_values.size,) * 2:
            raise ValueError("covariance shape mismatch")


def _ltdl(Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Factor Q = L.T @ diag(d) @ L with L unit lower triangular."""
    n = Q.shape[0]
    A = Q.copy()
    L = np.zeros((n, n))
    d = np.zeros(n)
    for i in range(n - 1, -1, -1):
        d[i] = A[i, i]
        if d[i] <= 0.0:
            raise NotPositiveDefinite("ambiguity covariance not positive definite")
        a = np.sqrt(d[i])
        L[i, : i + 1] = A[i, : i + 1] / a
        for j in range(i):
            A[j, : j + 1] -= L[i, : j + 1] * L[i, j]
        L[i, : i + 1] /= L[i, i]
    return L, d


def _gauss(L: np.ndarray, Z: np.ndarray, i: int, j: int) -> None:
    mu = round(L[i, j])
    if mu != 0:
        L[i:, j] -= mu * L[i:, i]
        Z[:, j] -= mu * Z[:, i]


def _permute(L: np.ndarray, d: np.ndarray, j: int, delta: float,
             Z: np.ndarray) -> None:
    eta = d[j] / delta
    lam = d[j + 1] * L[j + 1, j] / delta
    d[j] = eta * d[j + 1]
    d[j + 1] = delta
    a0 = L[j, :j].copy()
    a1 = L[j + 1, :j].copy()
    L[j, :j] = -L[j + 1, j] * a0 + a1
    L[j + 1, :j] = eta * a0 + lam * a1
    L[j + 1, j] = lam
    L[j + 2:, [j, j + 1]] = L[j + 2:, [j + 1, j]]
    Z[:, [j, j + 1]] = Z[:, [j + 1, j]]


def _reduction(L: np.ndarray, d: np.ndarray) -> np.ndarray:
    n = len(d)
    Z = np.eye(n)
    j = n - 2
    k = n - 2
    while j >= 0:
        if j <= k:
            for i in range(j + 1, n):
                _gauss(L, Z, i, j)
        delta = d[j] + L[j + 1, j] ** 2 * d[j + 1]
        if delta + 1e-6 < d[j + 1]:
            _permute(L, d, j, delta, Z)
            k = j
            j = n - 2
        else:
            j -= 1
    return Z


def _search(L: np.ndarray, d: np.ndarray, zs: np.ndarray,
            m: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Depth-first shrinking-ellipsoid search for the m best candidates."""
    n = len(d)
    S = np.zeros((n, n))
    dist = np.zeros(n)
    zb = np.zeros(n)
    z = np.zeros(n)
    step = np.zeros(n)
    zn = np.zeros((n, m))
    s = np.zeros(m)

    def sgn(x):
        return -1.0 if x <= 0.0 else 1.0

    maxdist = 1e18
    k = n - 1
    zb[k] = zs[k]
    z[k] = round(zb[k])
    y = zb[k] - z[k]
    step[k] = sgn(y)
    nn = 0
    imax = 0
    for _ in range(200000):
        newdist = dist[k] + y * y / d[k]
        if newdist < maxdist:
            if k != 0:
                k -= 1
                dist[k] = newdist
                S[k, : k + 1] = S[k + 1, : k + 1] + (z[k + 1] - zb[k + 1]) * L[k + 1, : k + 1]
                zb[k] = zs[k] + S[k, k]
                z[k] = round(zb[k])
                y = zb[k] - z[k]
                step[k] = sgn(y)
            else:
                if nn < m:
                    if nn == 0 or newdist > s[imax]:
                        imax = nn
                    zn[:, nn] = z
                    s[nn] = newdist
                    nn += 1
                else:
                    if newdist < s[imax]:
                        zn[:, imax] = z
                        s[imax] = newdist
                        imax = int(np.argmax(s))
                    maxdist = s[imax]
                z[0] += step[0]
                y = zb[0] - z[0]
                step[0] = -step[0] - sgn(step[0])
        else:
            if k == n - 1:
                break
            k += 1
            z[k] += step[k]
            y = zb[k] - z[k]
            step[k] = -step[k] - sgn(step[k])
    order = np.argsort(s[:nn])
    return zn[:, order], s[order]


def lambda_resolve(problem: AmbiguityProblem,
                   ratio_threshold: float = 3.0) -> tuple[np.ndarray, float, bool]:
    """Integer minimizer of (a - float)' Q^-1 (a - float) plus ratio test.

    Returns (integers, ratio, accepted) where ratio = q2/q1 of the two best
    candidates and accepted means ratio >= ratio_threshold.
    """
    a = problem.float_values
    n = a.size
    if n < 1:
        raise ValueError("empty ambiguity problem")
    L, d = _ltdl(problem.covariance)
    Z = _reduction(L, d)
    zs = Z.T @ a
    candidates, dists = _search(L, d, zs, m=2)
    best = np.linalg.solve(Z.T, candidates[:, 0])
    best = np.round(best).astype(int)
    if len(dists) < 2:
        ratio = np.inf
    elif dists[0] < 1e-12:
        ratio = np.inf
    else:
        ratio = float(dists[1] / dists[0])
    return best, ratio, ratio >= ratio_threshold
