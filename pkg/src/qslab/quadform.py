"""Integral quadratic forms: evaluation, matrices, discriminant, dual,
isotropic vectors and primitive projective representatives."""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .arith import factorize
from .errors import DegenerateForm, DimensionMismatch, ResourceLimit, ZeroVector


def _det(mat: list[list[Fraction]]) -> Fraction:
    a = [row[:] for row in mat]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                for k in range(c, n):
                    a[r][k] -= f * a[c][k]
    return det


def _inverse(mat: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(mat)
    a = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            raise DegenerateForm("singular matrix")
        a[c], a[piv] = a[piv], a[c]
        inv = 1 / a[c][c]
        a[c] = [v * inv for v in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [v - f * w for v, w in zip(a[r], a[c])]
    return [row[n:] for row in a]


@dataclass(frozen=True)
class QuadraticForm:
    """F(x) = sum_{i<=j} c_ij x_i x_j in n_vars variables.

    `coeffs` is a sorted tuple of ((i, j), c) with i <= j and c != 0.
    Coefficients are integers except for dual forms, which may be rational.
    """

    n_vars: int
    coeffs: tuple[tuple[tuple[int, int], int | Fraction], ...]

    def __post_init__(self):
        if self.n_vars < 1:
            raise ValueError("n_vars must be positive")
        merged: dict[tuple[int, int], int | Fraction] = {}
        for (i, j), c in self.coeffs:
            i, j = min(i, j), max(i, j)
            if not (0 <= i < self.n_vars and 0 <= j < self.n_vars):
                raise DimensionMismatch(f"variable index out of range in term {(i, j)}")
            merged[(i, j)] = merged.get((i, j), 0) + c
        norm = []
        for k in sorted(merged):
            c = merged[k]
            if isinstance(c, Fraction) and c.denominator == 1:
                c = int(c)
            if c != 0:
                norm.append((k, c))
        object.__setattr__(self, "coeffs", tuple(norm))

    # constructors
    @classmethod
    def from_diagonal(cls, diag: Sequence[int]) -> "QuadraticForm":
        return cls(len(diag), tuple(((i, i), c) for i, c in enumerate(diag)))

    @classmethod
    def from_matrix2(cls, m2) -> "QuadraticForm":
        """Form whose doubled symmetric matrix 2A is m2."""
        n = len(m2)
        terms = []
        for i in range(n):
            terms.append(((i, i), Fraction(m2[i][i]) / 2))
            for j in range(i + 1, n):
                terms.append(((i, j), Fraction(m2[i][j])))
        return cls(n, tuple(terms))

    @classmethod
    def parse(cls, text: str) -> "QuadraticForm":
        """Parse "diag:1,1,1,1,-1" or "[n=5;] c i j; c i j; ..."."""
        text = text.strip()
        if text.startswith("diag:"):
            vals = [int(v) for v in text[5:].split(",") if v.strip()]
            return cls.from_diagonal(vals)
        n = None
        terms = []
        for part in re.split(r"[;\n]", text):
            part = part.strip()
            if not part:
                continue
            if part.startswith("n="):
                n = int(part[2:])
                continue
            bits = part.replace(",", " ").split()
            if len(bits) != 3:
                raise ValueError(f"bad term {part!r}; expected 'c i j'")
            c, i, j = Fraction(bits[0]), int(bits[1]), int(bits[2])
            terms.append(((i, j), c))
        if not terms:
            raise ValueError("empty form")
        if n is None:
            n = 1 + max(max(i, j) for (i, j), _ in terms)
        return cls(n, tuple(terms))

    def to_text(self) -> str:
        if self.is_diagonal and len(self.diagonal()) == self.n_vars:
            return "diag:" + ",".join(str(c) for c in self.diagonal())
        return f"n={self.n_vars}; " + "; ".join(f"{c} {i} {j}" for (i, j), c in self.coeffs)

    # matrices
    @cached_property
    def matrix2(self) -> list[list[int | Fraction]]:
        """2A, integral whenever the coefficients are."""
        n = self.n_vars
        m = [[0] * n for _ in range(n)]
        for (i, j), c in self.coeffs:
            if i == j:
                m[i][i] = 2 * c
            else:
                m[i][j] = c
                m[j][i] = c
        return m

    @cached_property
    def sym_matrix(self) -> list[list[Fraction]]:
        return [[Fraction(v) / 2 for v in row] for row in self.matrix2]

    @property
    def is_integral(self) -> bool:
        return all(isinstance(c, int) for _, c in self.coeffs)

    @cached_property
    def det_A(self) -> Fraction:
        return _det([[Fraction(v) for v in row] for row in self.matrix2]) / 2**self.n_vars

    def discriminant(self) -> Fraction:
        d = self.det_A
        if d == 0:
            raise DegenerateForm("det(A) = 0")
        return d

    @cached_property
    def bad_primes(self) -> frozenset[int]:
        """Primes dividing the numerator of 2*Delta_F."""
        num = abs((2 * self.discriminant()).numerator)
        return frozenset(factorize(num)) if num > 1 else frozenset()

    def is_good_prime(self, p: int) -> bool:
        return p not in self.bad_primes

    @property
    def is_diagonal(self) -> bool:
        return all(i == j for (i, j), _ in self.coeffs)

    def diagonal(self) -> list:
        d = [0] * self.n_vars
        for (i, j), c in self.coeffs:
            if i == j:
                d[i] = c
        return d

    def integer_matrix2(self) -> np.ndarray:
        if not self.is_integral:
            raise ValueError("form has non-integral coefficients")
        return np.array(self.matrix2, dtype=object).astype(np.int64)

    # evaluation
    def evaluate(self, x: Sequence[int]) -> int | Fraction:
        if len(x) != self.n_vars:
            raise DimensionMismatch(f"expected {self.n_vars} coordinates, got {len(x)}")
        x = [int(v) if not isinstance(v, Fraction) else v for v in x]
        return sum(c * x[i] * x[j] for (i, j), c in self.coeffs)

    __call__ = evaluate

    def evaluate_array(self, X: np.ndarray) -> np.ndarray:
        """Row-wise F on an integer array (caller guarantees no overflow)."""
        X = np.asarray(X)
        if X.shape[-1] != self.n_vars:
            raise DimensionMismatch("last axis must have length n_vars")
        out = np.zeros(X.shape[:-1], dtype=X.dtype)
        for (i, j), c in self.coeffs:
            out = out + int(c) * X[..., i] * X[..., j]
        return out

    def gradient(self, x: Sequence[int]) -> list[int]:
        m = self.matrix2
        return [sum(m[i][k] * x[k] for k in range(self.n_vars)) for i in range(self.n_vars)]

    def max_abs_coeff(self) -> int:
        return max((abs(c) for _, c in self.coeffs), default=0)

    def reduce_mod(self, q: int) -> "QuadraticForm":
        return QuadraticForm(self.n_vars, tuple((k, int(c) % q) for k, c in self.coeffs))

    def signature(self) -> tuple[int, int]:
        """(positive, negative) inertia indices, exact."""
        pos = neg = 0
        for d in _ldl_diagonal(self.sym_matrix):
            if d > 0:
                pos += 1
            elif d < 0:
                neg += 1
        return pos, neg


def _ldl_diagonal(A: list[list[Fraction]]) -> list[Fraction]:
    """Diagonal of a congruence diagonalization of a symmetric rational matrix."""
    a = [row[:] for row in A]
    n = len(a)
    out = []
    idx = list(range(n))
    while idx:
        piv = next((i for i in idx if a[i][i] != 0), None)
        if piv is None:
            pair = next(((i, j) for i in idx for j in idx if i < j and a[i][j] != 0), None)
            if pair is None:
                out.extend([Fraction(0)] * len(idx))
                break
            i, j = pair
            # e_i <- e_i + e_j makes a nonzero diagonal entry
            for k in range(n):
                a[i][k] += a[j][k]
            for k in range(n):
                a[k][i] += a[k][j]
            piv = i if a[i][i] != 0 else None
            if piv is None:
                raise AssertionError("diagonalization failed")
        d = a[piv][piv]
        out.append(d)
        rest = [i for i in idx if i != piv]
        for i in rest:
            f = a[i][piv] / d
            if f:
                for k in rest:
                    a[i][k] -= f * a[piv][k]
        for i in rest:
            a[i][piv] = a[piv][i] = Fraction(0)
        idx = rest
    return out


def discriminant(F: QuadraticForm) -> Fraction:
    return F.discriminant()


def evaluate(F: QuadraticForm, x: Sequence[int]) -> int | Fraction:
    return F.evaluate(x)


def dual_form(F: QuadraticForm) -> QuadraticForm:
    """Form with symmetric matrix Delta_F * A^{-1}."""
    delta = F.discriminant()
    inv = _inverse(F.sym_matrix)
    n = F.n_vars
    terms = []
    for i in range(n):
        terms.append(((i, i), delta * inv[i][i]))
        for j in range(i + 1, n):
            terms.append(((i, j), 2 * delta * inv[i][j]))
    return QuadraticForm(n, tuple(terms))


@dataclass(frozen=True, order=True)
class ProjectivePoint:
    coords: tuple[int, ...]

    @property
    def height(self) -> int:
        return max(abs(c) for c in self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)


def primitive_rep(x: Iterable[int]) -> ProjectivePoint:
    x = [int(v) for v in x]
    g = 0
    for v in x:
        g = math.gcd(g, v)
    if g == 0:
        raise ZeroVector("zero vector has no projective class")
    first = next(v for v in x if v != 0)
    if first < 0:
        g = -g
    return ProjectivePoint(tuple(v // g for v in x))


def find_isotropic_vector(F: QuadraticForm, search_bound: int,
                          budget: int = 10**8) -> ProjectivePoint | None:
    """A primitive zero of F of smallest height <= search_bound, or None.

    Among zeros of minimal height the lexicographically largest canonical
    representative is returned, so (1,0,0,0,1) beats (1,0,0,0,-1).
    """
    pos, neg = F.signature()
    if F.n_vars > 1 and (pos == 0 or neg == 0) and pos + neg == F.n_vars:
        return None  # definite
    N = F.n_vars
    last = N - 1
    c_last = dict(F.coeffs).get((last, last), 0)
    work = 0
    for h in range(1, search_bound + 1):
        found = []
        rng = range(-h, h + 1)
        work += (2 * h + 1) ** (N - 1)
        if work > budget:
            raise ResourceLimit("isotropic search exceeded budget")
        for head in itertools.product(rng, repeat=N - 1):
            # F(head, t) = a t^2 + b t + c
            b = sum(c * head[i] for (i, j), c in F.coeffs if j == last and i != last)
            c0 = sum(c * head[i] * head[j] for (i, j), c in F.coeffs if j != last)
            for t in _solve_quadratic(c_last, b, c0, h):
                v = head + (t,)
                if max(abs(u) for u in v) == h and math.gcd(*v) == 1:
                    found.append(primitive_rep(v))
        if found:
            return max(found)
    return None


def _solve_quadratic(a, b, c, bound):
    """Integer roots t with |t| <= bound of a t^2 + b t + c = 0."""
    if a == 0:
        if b == 0:
            return range(-bound, bound + 1) if c == 0 else ()
        if c % b == 0 and abs(c // b) <= bound:
            return (-c // b,)
        return ()
    disc = b * b - 4 * a * c
    if disc < 0:
        return ()
    r = math.isqrt(disc)
    if r * r != disc:
        return ()
    out = set()
    for s in (r, -r):
        num = -b + s
        if num % (2 * a) == 0 and abs(num // (2 * a)) <= bound:
            out.add(num // (2 * a))
    return sorted(out)


def is_nonsingular_mod(F: QuadraticForm, p: int) -> bool:
    """Exhaustively check that F = grad F = 0 mod p forces x = 0 mod p."""
    N = F.n_vars
    m2 = np.array([[int(v) % p for v in row] for row in F.matrix2], dtype=np.int64)
    for x in itertools.product(range(p), repeat=N):
        if not any(x):
            continue
        if F.evaluate(x) % p == 0 and not (m2 @ np.array(x) % p).any():
            return False
    return True


EXAMPLE_FORM = QuadraticForm.from_diagonal([1, 1, 1, 1, -1])
