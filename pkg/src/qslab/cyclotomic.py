"""Exact arithmetic in Z[zeta_L], elements stored as integer coefficient
vectors of length L (exponents of zeta_L = exp(2 pi i / L))."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Coefficients of Phi_n, lowest degree first."""
    num = [-1] + [0] * (n - 1) + [1]  # x^n - 1
    for d in range(1, n):
        if n % d == 0:
            num = _exact_div(num, list(cyclotomic_poly(d)))
    return tuple(num)


def _exact_div(a: list[int], b: list[int]) -> list[int]:
    a = a[:]
    q = [0] * (len(a) - len(b) + 1)
    for i in range(len(q) - 1, -1, -1):
        c = a[i + len(b) - 1] // b[-1]
        q[i] = c
        for j, bj in enumerate(b):
            a[i + j] -= c * bj
    if any(a):
        raise ArithmeticError("inexact polynomial division")
    return q


def reduce_mod_phi(v, L: int) -> list[int]:
    """Remainder of sum v_k x^k modulo Phi_L (canonical form of the element)."""
    phi = cyclotomic_poly(L)
    deg = len(phi) - 1
    a = [int(x) for x in v]
    for i in range(len(a) - 1, deg - 1, -1):
        c = a[i]
        if c:
            for j, pj in enumerate(phi):
                a[i - deg + j] -= c * pj
    return a[:deg]


def is_zero(v, L: int) -> bool:
    return not any(reduce_mod_phi(v, L))


def equal(u, v, L: int) -> bool:
    return is_zero(np.asarray(u, dtype=object) - np.asarray(v, dtype=object), L)


def embed(v, L1: int, L: int) -> np.ndarray:
    """View an element of Z[zeta_L1] inside Z[zeta_L] (L1 | L)."""
    out = np.zeros(L, dtype=np.int64)
    f = L // L1
    np.add.at(out, (np.arange(L1) * f) % L, np.asarray(v, dtype=np.int64))
    return out


def mul(u, v, L: int) -> np.ndarray:
    """Product in Z[x]/(x^L - 1)."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    full = np.convolve(u, v)
    out = full[:L].copy()
    out[: len(full) - L] += full[L:]
    return out


def circulant(v) -> np.ndarray:
    """Matrix C with (x @ C) = x * v in Z[x]/(x^L - 1)."""
    v = np.asarray(v, dtype=np.int64)
    L = len(v)
    idx = (np.arange(L)[None, :] - np.arange(L)[:, None]) % L
    return v[idx]


def conj(v) -> np.ndarray:
    v = np.asarray(v)
    L = len(v)
    return v[(-np.arange(L)) % L]


def to_complex(v, L: int, dtype=np.clongdouble) -> complex:
    return complex(np.sum(np.asarray(v).astype(dtype) * root_table(L, dtype)))


@lru_cache(maxsize=256)
def _roots(L: int, kind: str) -> np.ndarray:
    if kind == "ld":
        pi = np.longdouble("3.14159265358979323846264338327950288")
        ang = 2 * pi * np.arange(L, dtype=np.longdouble) / np.longdouble(L)
        return (np.cos(ang) + 1j * np.sin(ang)).astype(np.clongdouble)
    ang = 2 * np.pi * np.arange(L) / L
    return np.exp(1j * ang)


def root_table(L: int, dtype=np.clongdouble) -> np.ndarray:
    return _roots(L, "ld" if dtype == np.clongdouble else "d")
