"""Multi-index bookkeeping and symmetric-tensor storage.

Symmetric tensors of rank ``r`` in ``n`` dimensions are stored once per
sorted multi-index, keyed by the exponent tuple ``alpha`` (``|alpha| = r``).
The stored value for ``alpha`` is the tensor entry ``T[i1, ..., ir]`` for any
index tuple whose counts equal ``alpha``; multinomial weights are applied
only when contracting.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb, factorial, prod

import numpy as np


@lru_cache(maxsize=None)
def multi_indices(n: int, r: int) -> tuple:
    """All exponent tuples of length ``n`` summing to ``r``, in lexicographic
    order (descending in the first component)."""
    if n == 1:
        return ((r,),)
    out = []
    for first in range(r, -1, -1):
        for rest in multi_indices(n - 1, r - first):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def multi_indices_upto(n: int, rmax: int) -> tuple:
    return tuple(a for r in range(rmax + 1) for a in multi_indices(n, r))


def unit(n, j):
    return tuple(1 if i == j else 0 for i in range(n))


def add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def mfactorial(alpha) -> int:
    return prod(factorial(a) for a in alpha)


def mbinom(alpha, beta) -> int:
    return prod(comb(a, b) for a, b in zip(alpha, beta))


def below(alpha):
    """All multi-indices ``beta <= alpha`` componentwise."""
    return list(itertools.product(*[range(a + 1) for a in alpha]))


def counts(index_tuple, n):
    """Exponent tuple of a tensor index tuple, e.g. (0, 1, 1) -> (1, 2)."""
    c = [0] * n
    for i in index_tuple:
        c[i] += 1
    return tuple(c)


def multiplicity(alpha) -> int:
    """Number of index tuples sharing the exponent tuple ``alpha``."""
    return factorial(sum(alpha)) // mfactorial(alpha)


def to_full(sym: dict, n: int, r: int) -> np.ndarray:
    """Expand sorted storage to a dense ``n**r`` tensor (trailing axes)."""
    sample = np.asarray(next(iter(sym.values())))
    full = np.zeros(sample.shape + (n,) * r, dtype=sample.dtype)
    for idx in itertools.product(range(n), repeat=r):
        full[(...,) + idx] = sym[counts(idx, n)]
    return full


def from_full(full: np.ndarray, n: int, r: int) -> dict:
    """Read sorted storage from a dense tensor (assumed symmetric)."""
    out = {}
    for alpha in multi_indices(n, r):
        idx = []
        for i, a in enumerate(alpha):
            idx.extend([i] * a)
        out[alpha] = full[(...,) + tuple(idx)]
    return out


def monomials(z: np.ndarray, rmax: int) -> dict:
    """``z**alpha / alpha!`` for all ``|alpha| <= rmax``.

    ``z`` has the spatial dimension on its last axis.
    """
    n = z.shape[-1]
    # scaled powers z_i**k / k!
    pw = [np.ones(z.shape[:-1] + (n,), dtype=z.dtype)]
    for k in range(1, rmax + 1):
        pw.append(pw[-1] * z / k)
    out = {}
    for alpha in multi_indices_upto(n, rmax):
        term = pw[alpha[0]][..., 0]
        for i in range(1, n):
            if alpha[i]:
                term = term * pw[alpha[i]][..., i]
        out[alpha] = term
    return out


def contract(sym: dict, z: np.ndarray, r: int) -> np.ndarray:
    """``sum_{|alpha|=r} T_alpha z**alpha / alpha!``

    Equal to ``(1/r!) sum_{i1..ir} T[i1..ir] z_i1 ... z_ir`` for the dense
    symmetric tensor ``T``.
    """
    n = z.shape[-1]
    total = 0.0
    for alpha in multi_indices(n, r):
        mono = np.ones(z.shape[:-1], dtype=z.dtype)
        for i, a in enumerate(alpha):
            if a:
                mono = mono * z[..., i] ** a
        total = total + np.asarray(sym[alpha]) * mono / mfactorial(alpha)
    return total
