"""Homogeneous integer polynomials, used for divisor components and
thin-set predicates."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

_TERM = re.compile(r"([+-]?)\s*(\d*)\s*\*?\s*((?:x\d+(?:\^\d+)?\s*\*?\s*)*)")


@dataclass(frozen=True)
class HomogeneousPoly:
    n_vars: int
    terms: tuple[tuple[tuple[int, ...], int], ...]

    def __post_init__(self):
        merged: dict[tuple[int, ...], int] = {}
        for e, c in self.terms:
            if len(e) != self.n_vars:
                raise ValueError("exponent length mismatch")
            merged[tuple(e)] = merged.get(tuple(e), 0) + int(c)
        terms = tuple(sorted((e, c) for e, c in merged.items() if c))
        if len({sum(e) for e, _ in terms}) > 1:
            raise ValueError("polynomial is not homogeneous")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def parse(cls, text: str, n_vars: int) -> "HomogeneousPoly":
        """Parse sums of monomials like "x0*x1 - 3*x2^2"."""
        s = text.replace(" ", "")
        if not s:
            raise ValueError("empty polynomial")
        terms = []
        pos = 0
        while pos < len(s):
            m = _TERM.match(s, pos)
            if not m or m.end() == pos:
                raise ValueError(f"cannot parse polynomial near {s[pos:]!r}")
            sign, num, mono = m.groups()
            if not num and not mono:
                raise ValueError(f"cannot parse polynomial near {s[pos:]!r}")
            c = int(num) if num else 1
            if sign == "-":
                c = -c
            e = [0] * n_vars
            for var, power in re.findall(r"x(\d+)(?:\^(\d+))?", mono):
                idx = int(var)
                if idx >= n_vars:
                    raise ValueError(f"variable x{idx} out of range")
                e[idx] += int(power) if power else 1
            terms.append((tuple(e), c))
            pos = m.end()
        return cls(n_vars, tuple(terms))

    @classmethod
    def linear(cls, coeffs) -> "HomogeneousPoly":
        n = len(coeffs)
        return cls(n, tuple((tuple(int(i == k) for k in range(n)), int(c)) for i, c in enumerate(coeffs) if c))

    @property
    def degree(self) -> int:
        return sum(self.terms[0][0]) if self.terms else 0

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def linear_coeffs(self) -> list[int] | None:
        if self.degree != 1:
            return None
        v = [0] * self.n_vars
        for e, c in self.terms:
            v[e.index(1)] = c
        return v

    def evaluate(self, x) -> int:
        tot = 0
        for e, c in self.terms:
            t = c
            for xi, k in zip(x, e):
                if k:
                    t *= int(xi) ** k
            tot += t
        return tot

    __call__ = evaluate

    def evaluate_array(self, X: np.ndarray, mod: int | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=np.int64)
        out = np.zeros(X.shape[0], dtype=np.int64)
        for e, c in self.terms:
            t = np.full(X.shape[0], c if mod is None else c % mod, dtype=np.int64)
            for i, k in enumerate(e):
                for _ in range(k):
                    t = t * X[:, i]
                    if mod is not None:
                        t %= mod
            out = out + t
            if mod is not None:
                out %= mod
        return out

    def derivative(self, i: int) -> "HomogeneousPoly":
        terms = []
        for e, c in self.terms:
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                terms.append((tuple(e2), c * e[i]))
        return HomogeneousPoly(self.n_vars, tuple(terms))

    def gradient(self, x) -> list[int]:
        return [self.derivative(i).evaluate(x) for i in range(self.n_vars)]

    def __str__(self):
        parts = []
        for e, c in self.terms:
            mono = "*".join(f"x{i}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            parts.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(parts) or "0"
