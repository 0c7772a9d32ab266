"""Full SVD of small dense matrices by one-sided Jacobi rotations.

The rotation loop is compiled with numba; numpy is only the array container.
Intended for matrices up to a few dozen rows and columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import NonFiniteInput

MAX_SWEEPS = 60
# pairwise column orthogonality target, relative to the column norms
ORTH_TOL = 1e-15
# columns whose norm falls below this fraction of the largest are null-space
NULL_TOL = 1e-13


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    sweeps: int = 0

    def reconstruct(self) -> np.ndarray:
        m, n = self.u.shape[0], self.v.shape[0]
        s = np.zeros((m, n))
        k = len(self.sigma)
        s[:k, :k] = np.diag(self.sigma)
        return self.u @ s @ self.v.T


@numba.njit(cache=True)
def _hestenes(w, v, orth_tol, max_sweeps):
    """Orthogonalise the columns of ``w`` in place, accumulating rotations in ``v``."""
    m, n = w.shape
    sweeps = 0
    for sweep in range(max_sweeps):
        sweeps = sweep + 1
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for r in range(m):
                    a = w[r, p]
                    b = w[r, q]
                    alpha += a * a
                    beta += b * b
                    gamma += a * b
                if gamma == 0.0 or abs(gamma) <= orth_tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + np.sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for r in range(m):
                    a = w[r, p]
                    b = w[r, q]
                    w[r, p] = c * a - s * b
                    w[r, q] = s * a + c * b
                for r in range(n):
                    a = v[r, p]
                    b = v[r, q]
                    v[r, p] = c * a - s * b
                    v[r, q] = s * a + c * b
        if not rotated:
            break
    return sweeps


def _complete_basis(q: np.ndarray, k: int) -> np.ndarray:
    """Extend the first ``k`` orthonormal columns of ``q`` to a full orthonormal basis.

    Candidates are the standard basis vectors, taken in order, each made
    orthogonal to the current basis by two passes of Gram-Schmidt.
    """
    m = q.shape[0]
    out = q.copy()
    filled = k
    for e in range(m):
        if filled == m:
            break
        x = np.zeros(m)
        x[e] = 1.0
        for _ in range(2):
            x -= out[:, :filled] @ (out[:, :filled].T @ x)
        norm = np.linalg.norm(x)
        if norm > 1e-8:
            out[:, filled] = x / norm
            filled += 1
    return out


def _svd_tall(a: np.ndarray) -> SvdResult:
    m, n = a.shape
    w = np.array(a, dtype=np.float64, order="C", copy=True)
    v = np.eye(n)
    sweeps = _hestenes(w, v, ORTH_TOL, MAX_SWEEPS)
    norms = np.sqrt(np.einsum("ij,ij->j", w, w))
    order = np.argsort(-norms, kind="stable")
    norms = norms[order]
    w = w[:, order]
    v = v[:, order]

    top = norms[0] if n else 0.0
    rank = int(np.sum(norms > NULL_TOL * top)) if top > 0 else 0
    u = np.zeros((m, m))
    u[:, :rank] = w[:, :rank] / norms[:rank]
    u = _complete_basis(u, rank)

    # sign rule: the largest-magnitude entry of every left singular vector is positive
    for j in range(n):
        col = u[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            u[:, j] = -col
            v[:, j] = -v[:, j]
    for j in range(n, m):
        col = u[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            u[:, j] = -col
    return SvdResult(u, norms, v, sweeps)


def svd(a) -> SvdResult:
    """Full decomposition ``a = u @ diag(sigma) @ v.T`` with ``sigma`` descending."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput("matrix contains NaN or infinite entries")
    # scale by a power of two (exact) so squared column norms neither underflow nor overflow
    peak = float(np.abs(a).max())
    exp = int(np.frexp(peak)[1]) if peak > 0 else 0
    res = _svd_oriented(np.ldexp(a, -exp))
    return SvdResult(res.u, np.ldexp(res.sigma, exp), res.v, res.sweeps)


def _svd_oriented(a: np.ndarray) -> SvdResult:
    m, n = a.shape
    if m >= n:
        return _svd_tall(a)
    t = _svd_tall(a.T)
    # a.T = U' S V'^T  =>  a = V' S U'^T ; re-apply the sign rule on the new U
    u, v = t.v.copy(), t.u.copy()
    for j in range(m):
        col = u[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            u[:, j] = -col
            v[:, j] = -v[:, j]
    return SvdResult(u, t.sigma, v, t.sweeps)


def numerical_rank(s: SvdResult, rel_tol: float = 1e-8) -> int:
    sigma = np.asarray(s.sigma)
    if sigma.size == 0 or sigma[0] == 0:
        return 0
    return int(np.sum(sigma > rel_tol * sigma[0]))
