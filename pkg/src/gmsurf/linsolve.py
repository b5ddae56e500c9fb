"""Dense LU factorisation with partial pivoting.

Systems here are small (2n of a few hundred), so a straightforward
right-looking elimination with numpy rank-1 updates is plenty.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-14


class SingularMatrixError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class LUFactorization:
    lu: np.ndarray        # unit-lower L below the diagonal, U on and above
    perm: np.ndarray      # row i of P A is row perm[i] of A
    norm1: float          # ||A||_1
    growth: float         # max|U| / max|A|

    @property
    def size(self) -> int:
        return self.lu.shape[0]

    @property
    def L(self) -> np.ndarray:
        return np.tril(self.lu, -1) + np.eye(self.size)

    @property
    def U(self) -> np.ndarray:
        return np.triu(self.lu)

    @property
    def P(self) -> np.ndarray:
        return np.eye(self.size)[self.perm]

    def condition_estimate(self) -> float:
        """1-norm condition number via explicit inverse columns (cheap at
        these sizes)."""
        inv = lu_solve(self, np.eye(self.size))
        return float(self.norm1 * np.abs(inv).sum(axis=0).max())


def lu_factor(A) -> LUFactorization:
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError("lu_factor needs a non-empty square matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    m = A.shape[0]
    amax = np.abs(A).max()
    norm1 = float(np.abs(A).sum(axis=0).max())
    tol = PIVOT_TOL * max(norm1, np.finfo(float).tiny)
    lu = A.copy()
    perm = np.arange(m)
    for k in range(m):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) <= tol:
            raise SingularMatrixError(
                f"pivot {abs(lu[p, k]):.3e} at column {k} below {tol:.3e}; matrix is singular "
                "to working precision")
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    growth = float(np.abs(np.triu(lu)).max() / amax) if amax > 0 else 1.0
    return LUFactorization(lu, perm, norm1, growth)


def lu_solve(fact: LUFactorization, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    m = fact.size
    if b.shape[0] != m:
        raise ValueError(f"right-hand side has {b.shape[0]} rows, matrix has {m}")
    lu = fact.lu
    x = b[fact.perm].copy()
    for i in range(1, m):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(m - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x


def relative_residual(A, x, b) -> float:
    A = np.asarray(A, dtype=float)
    r = A @ x - b
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(r) / nb) if nb > 0 else float(np.linalg.norm(r))
