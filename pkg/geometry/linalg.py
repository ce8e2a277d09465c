"""
Gaussian elimination over F_p: rank, reduced row echelon form, kernel basis
"""
from __future__ import annotations

from typing import List, Tuple

import numpy as np


def inv_mod_p(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise ZeroDivisionError("No inverse for 0 mod p")
    return pow(a, p - 2, p)


def rref_mod_p(A: np.ndarray, p: int) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form mod p and the pivot columns"""
    A = np.array(A, dtype=np.int64) % p
    m, n = A.shape
    pivots: List[int] = []
    r = 0
    for c in range(n):
        if r == m:
            break
        nonzero = np.nonzero(A[r:, c])[0]
        if nonzero.size == 0:
            continue
        pivot = r + int(nonzero[0])
        if pivot != r:
            A[[r, pivot], :] = A[[pivot, r], :]
        A[r, :] = A[r, :] * inv_mod_p(int(A[r, c]), p) % p
        for i in range(m):
            if i != r and A[i, c]:
                A[i, :] = (A[i, :] - A[i, c] * A[r, :]) % p
        pivots.append(c)
        r += 1
    return A, pivots


def rank_mod_p(A: np.ndarray, p: int) -> int:
    return len(rref_mod_p(A, p)[1])


def kernel_mod_p(A: np.ndarray, p: int) -> List[np.ndarray]:
    """Basis of {c : A c = 0 mod p}, each vector scaled so its first nonzero entry is 1"""
    R, pivots = rref_mod_p(A, p)
    n = R.shape[1]
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        c = np.zeros(n, dtype=np.int64)
        c[f] = 1
        for row, pc in enumerate(pivots):
            c[pc] = (-R[row, f]) % p
        lead = int(c[np.nonzero(c)[0][0]])
        basis.append(c * inv_mod_p(lead, p) % p)
    return basis
