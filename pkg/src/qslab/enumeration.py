"""Exhaustive enumeration of points of bounded height on a quadric, the
weighted count with the smooth bump weight, and the real density."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import NonConvergence, ResourceLimit
from .localcount import LocalCondition
from .quadform import ProjectivePoint, QuadraticForm, _inverse

DEFAULT_BUDGET = 4 * 10**9

# ---------------------------------------------------------------------------
# non-negative solutions of diagonal forms (meet in the middle)


def _nonneg_diagonal(c: Sequence[int], bounds: Sequence[int], part: tuple[int, int] = (0, 1),
                     budget: int = DEFAULT_BUDGET) -> Iterator[np.ndarray]:
    """Yield chunks of y >= 0 with y_i <= bounds[i] and sum c_i y_i^2 = 0."""
    N = len(c)
    c = [int(v) for v in c]
    if N == 1:
        if part[0] == 0:
            yield np.zeros((1, 1), dtype=np.int64)
        return
    nl = max(1, N // 2)
    L_idx, R_idx = list(range(nl)), list(range(nl, N))
    sizes = [b + 1 for b in bounds]
    work = math.prod(sizes[:nl]) + math.prod(sizes[nl:])
    if work > budget:
        raise ResourceLimit(f"enumeration needs about {work} steps > budget {budget}")
    axes = [np.arange(bounds[i] + 1, dtype=np.int64) for i in L_idx]
    grids = np.meshgrid(*axes, indexing="ij")
    L = sum(c[i] * g.astype(np.int64) ** 2 for i, g in zip(L_idx, grids)).ravel()
    Lcoords = np.stack([g.ravel() for g in grids], axis=1)
    order = np.argsort(L, kind="stable")
    Ls = L[order]
    vec = R_idx[-2:] if len(R_idx) >= 2 else R_idx[-1:]
    loop = R_idx[: len(R_idx) - len(vec)]
    vaxes = [np.arange(bounds[i] + 1, dtype=np.int64) for i in vec]
    vgrids = np.meshgrid(*vaxes, indexing="ij")
    base = sum(c[i] * g ** 2 for i, g in zip(vec, vgrids)).ravel()
    Vcoords = np.stack([g.ravel() for g in vgrids], axis=1)
    loops = itertools.product(*[range(bounds[i] + 1) for i in loop]) if loop else [()]
    for t, head in enumerate(loops):
        if t % part[1] != part[0]:
            continue
        shift = sum(c[i] * h * h for i, h in zip(loop, head))
        v = -(base + shift)
        lo = np.searchsorted(Ls, v, "left")
        hi = np.searchsorted(Ls, v, "right")
        cnt = hi - lo
        m = cnt > 0
        if not m.any():
            continue
        idxR = np.nonzero(m)[0]
        cR = cnt[m]
        rep = np.repeat(idxR, cR)
        offs = np.arange(rep.size) - np.repeat(np.cumsum(cR) - cR, cR)
        li = order[np.repeat(lo[m], cR) + offs]
        Y = np.empty((rep.size, N), dtype=np.int64)
        Y[:, L_idx] = Lcoords[li]
        for k, i in enumerate(loop):
            Y[:, i] = head[k]
        Y[:, vec] = Vcoords[rep]
        yield Y


def _sign_expand(Y: np.ndarray, canonical: bool) -> np.ndarray:
    """All sign variants of non-negative rows (zeros keep sign +); with
    canonical=True only those whose first nonzero entry is positive."""
    N = Y.shape[1]
    nz = Y != 0
    first = np.argmax(nz, axis=1)
    out = []
    for s in range(1 << N):
        neg = np.array([(s >> i) & 1 for i in range(N)], dtype=bool)
        ok = ~(neg[None, :] & ~nz).any(axis=1)
        if canonical:
            ok &= ~neg[first]
        if ok.any():
            out.append(np.where(neg[None, :], -Y[ok], Y[ok]))
    return np.concatenate(out, axis=0) if out else np.zeros((0, N), dtype=np.int64)


def _check_overflow(F: QuadraticForm, bounds: Sequence[int]):
    b = max(bounds) if len(bounds) else 0
    if F.max_abs_coeff() * F.n_vars**2 * (b + 1) ** 2 >= 2**62:
        raise ResourceLimit("height bound too large for 64-bit evaluation")


# ---------------------------------------------------------------------------
# generic path: iterate the first N-1 coordinates, solve the last


def _generic_solutions(F: QuadraticForm, bounds: Sequence[int], budget: int,
                       part: tuple[int, int] = (0, 1)) -> Iterator[np.ndarray]:
    """All integer solutions in the box (both signs), in chunks."""
    N = F.n_vars
    last = N - 1
    work = 1
    for b in bounds[:-1]:
        work *= 2 * b + 1
    if work > budget:
        raise ResourceLimit(f"generic enumeration needs {work} head vectors > budget {budget}")
    coeffs = dict(F.coeffs)
    a = int(coeffs.get((last, last), 0))
    lin = np.zeros(N - 1, dtype=np.int64)
    for (i, j), c in F.coeffs:
        if j == last and i != last:
            lin[i] += int(c)
    head_form = QuadraticForm(N - 1, tuple(((i, j), c) for (i, j), c in F.coeffs if j != last)) if N > 1 else None
    B_last = bounds[-1]
    if N == 1:
        if part[0] == 0:
            yield np.zeros((1, 1), dtype=np.int64)
        return
    head_axes = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds[:-1]]
    # split on the leading coordinate, vectorize the rest
    lead = head_axes[0]
    rest = head_axes[1:]
    if rest:
        rg = np.meshgrid(*rest, indexing="ij")
        R = np.stack([g.ravel() for g in rg], axis=1)
    else:
        R = np.zeros((1, 0), dtype=np.int64)
    for t, x0 in enumerate(lead):
        if t % part[1] != part[0]:
            continue
        H = np.empty((R.shape[0], N - 1), dtype=np.int64)
        H[:, 0] = x0
        H[:, 1:] = R
        bb = H @ lin
        cc = head_form.evaluate_array(H) if head_form.coeffs else np.zeros(len(H), np.int64)
        sols = []
        if a != 0:
            disc = bb * bb - 4 * a * cc
            okd = disc >= 0
            r = np.zeros_like(disc)
            r[okd] = np.floor(np.sqrt(disc[okd].astype(np.float64))).astype(np.int64)
            for _ in range(2):
                r = np.where(r * r > disc, r - 1, r)
                r = np.where((r + 1) * (r + 1) <= disc, r + 1, r)
            sq = okd & (r * r == disc)
            for sgn in (1, -1):
                num = -bb + sgn * r
                good = sq & (num % (2 * a) == 0)
                if sgn == -1:
                    good &= r > 0
                tv = np.where(good, num // (2 * a), 0)
                good &= np.abs(tv) <= B_last
                if good.any():
                    sols.append(np.column_stack([H[good], tv[good]]))
        else:
            nzb = bb != 0
            good = nzb & (cc % np.where(nzb, bb, 1) == 0)
            tv = np.where(good, -cc // np.where(nzb, bb, 1), 0)
            good &= np.abs(tv) <= B_last
            if good.any():
                sols.append(np.column_stack([H[good], tv[good]]))
            zz = (~nzb) & (cc == 0)
            if zz.any():
                Hz = H[zz]
                ts = np.arange(-B_last, B_last + 1, dtype=np.int64)
                sols.append(np.column_stack([np.repeat(Hz, len(ts), axis=0), np.tile(ts, len(Hz))]))
        if sols:
            yield np.concatenate(sols, axis=0)


# ---------------------------------------------------------------------------
# public enumeration API


def _canonical_primitive(X: np.ndarray) -> np.ndarray:
    if len(X) == 0:
        return X
    g = np.gcd.reduce(X, axis=1)
    X = X[g == 1]
    nz = X != 0
    first = X[np.arange(len(X)), np.argmax(nz, axis=1)]
    return X[first > 0]


def iter_point_chunks(F: QuadraticForm, B: int, budget: int = DEFAULT_BUDGET,
                      part: tuple[int, int] = (0, 1)) -> Iterator[np.ndarray]:
    """Canonical primitive zeros of F with height <= B, in unordered chunks.

    `part=(i, k)` restricts to the i-th of k interleaved partitions; the
    union over i is the full set, each point appearing exactly once.
    """
    if B < 1:
        return
    bounds = [B] * F.n_vars
    _check_overflow(F, bounds)
    if F.is_diagonal and F.is_integral:
        for Y in _nonneg_diagonal(F.diagonal(), bounds, part, budget):
            Y = Y[np.gcd.reduce(Y, axis=1) == 1]
            if len(Y):
                yield _sign_expand(Y, canonical=True)
    else:
        for X in _generic_solutions(F, bounds, budget, part):
            X = _canonical_primitive(X)
            if len(X):
                yield X


def iter_all_solutions(F: QuadraticForm, bounds: Sequence[int], budget: int = DEFAULT_BUDGET,
                       part: tuple[int, int] = (0, 1)) -> Iterator[np.ndarray]:
    """Every integer zero (primitive or not, both signs) with |x_i| <= bounds[i]."""
    _check_overflow(F, bounds)
    if F.is_diagonal and F.is_integral:
        for Y in _nonneg_diagonal(F.diagonal(), bounds, part, budget):
            yield _sign_expand(Y, canonical=False)
    else:
        yield from _generic_solutions(F, bounds, budget, part)


def enumerate_points(F: QuadraticForm, B: int, budget: int = DEFAULT_BUDGET,
                     partitions: int = 1, as_objects: bool = False):
    """Lexicographically sorted canonical points of height <= B.

    Returns an (k, N) int64 array, or a list of ProjectivePoint when
    as_objects is set.
    """
    chunks = []
    for i in range(partitions):
        chunks.extend(iter_point_chunks(F, B, budget, part=(i, partitions)))
    X = np.concatenate(chunks, axis=0) if chunks else np.zeros((0, F.n_vars), dtype=np.int64)
    if len(X):
        X = X[np.lexsort(X.T[::-1])]
    if as_objects:
        return [ProjectivePoint(tuple(int(v) for v in row)) for row in X]
    return X


def heights(X: np.ndarray) -> np.ndarray:
    return np.abs(X).max(axis=1) if len(X) else np.zeros(0, dtype=np.int64)


@dataclass
class CountRequest:
    form: QuadraticForm
    bound: int
    conditions: list[LocalCondition] = field(default_factory=list)

    def __post_init__(self):
        ps = [c.p for c in self.conditions]
        if len(set(ps)) != len(ps):
            raise ValueError("condition primes must be distinct")
        for c in self.conditions:
            if c.p in self.form.bad_primes:
                raise ValueError(f"condition prime {c.p} divides 2*Delta_F")
            if c.form != self.form:
                raise ValueError("condition built for a different form")


def condition_mask(X: np.ndarray, conditions: Sequence[LocalCondition]) -> np.ndarray:
    keep = np.ones(len(X), dtype=bool)
    for c in conditions:
        keep &= c.contains(X)
    return keep


def count_points(request: CountRequest, budget: int = DEFAULT_BUDGET) -> int:
    tot = 0
    for X in iter_point_chunks(request.form, request.bound, budget):
        tot += int(np.count_nonzero(condition_mask(X, request.conditions)))
    return tot


def height_profile(F: QuadraticForm, B: int, stats: dict[str, Callable[[np.ndarray], np.ndarray]] | None = None,
                   budget: int = DEFAULT_BUDGET, part: tuple[int, int] = (0, 1)) -> dict[str, np.ndarray]:
    """Histograms by height (index h = 0..B) of all points and of each stat mask.

    Cumulative sums give the counts at every bound <= B from one pass.
    """
    stats = stats or {}
    out = {"total": np.zeros(B + 1, dtype=np.int64)}
    for k in stats:
        out[k] = np.zeros(B + 1, dtype=np.int64)
    for X in iter_point_chunks(F, B, budget, part):
        h = heights(X)
        out["total"] += np.bincount(h, minlength=B + 1)
        for k, fn in stats.items():
            m = np.asarray(fn(X), dtype=bool)
            out[k] += np.bincount(h[m], minlength=B + 1)
    return out


# ---------------------------------------------------------------------------
# weights


def weight_omega0(x):
    """exp(-1/(1-x^2)) on |x| < 1, zero outside; accepts scalars or arrays."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return float(out) if out.ndim == 0 else out


def _a_matrix(F: QuadraticForm) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in F.sym_matrix])


def weight_w(F: QuadraticForm, x) -> float | np.ndarray:
    """w(x) = omega0(5/2 |A x|_sup - 2); x may be one vector or rows."""
    A = _a_matrix(F)
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x @ A.T).max(axis=-1)
    return weight_omega0(2.5 * ax - 2.0)


def support_box(F: QuadraticForm, scale: float = 1.0) -> list[float]:
    """Per-coordinate bound on |x_i| over supp w(x/scale)."""
    inv = _inverse(F.sym_matrix)
    return [1.2 * scale * float(sum(abs(v) for v in row)) for row in inv]


def weighted_count(F: QuadraticForm, B: float, conditions: Sequence[LocalCondition] = (),
                   w: Callable[[np.ndarray], np.ndarray] | None = None,
                   budget: int = DEFAULT_BUDGET, part: tuple[int, int] = (0, 1)) -> float:
    """Sum of w(x/B) over all integer zeros x with [x]_M in Omega_M.

    Omega_M is given as LocalConditions at distinct primes (M is their
    product of prime powers).  The default weight is weight_w(F, .).
    """
    if w is None:
        def w(Z):
            return weight_w(F, Z)
    bounds = [int(math.floor(b + 1e-9)) for b in support_box(F, B)]
    if max(bounds) < 1:
        return 0.0
    total = 0.0
    for X in iter_all_solutions(F, bounds, budget, part):
        if conditions:
            X = X[condition_mask(X, conditions)]
        if len(X):
            total += math.fsum(np.asarray(w(X / float(B)), dtype=np.float64).tolist())
    return total


# ---------------------------------------------------------------------------
# real density


@dataclass
class RealDensity:
    value: float
    error: float
    per_eps: list[tuple[float, float]]
    extrapolated: list[float]
    mc_value: float | None = None
    mc_stderr: float | None = None
    seed: int | None = None


def _gauss_legendre(n: int):
    x, wt = np.polynomial.legendre.leggauss(n)
    return x, wt


def _slab_integral(F: QuadraticForm, w, eps: float, grid: int, nodes: int = 8) -> float:
    """(2 eps)^{-1} * integral over |F| < eps of w, on a midpoint grid in the
    first N-1 coordinates with exact interval solving in the last one."""
    N = F.n_vars
    box = support_box(F)
    last = N - 1
    co = dict(F.coeffs)
    a = float(co.get((last, last), 0))
    lin = np.zeros(N - 1)
    for (i, j), c in F.coeffs:
        if j == last and i != last:
            lin[i] += float(c)
    head_terms = [((i, j), float(c)) for (i, j), c in F.coeffs if j != last]
    axes = [(np.arange(grid) + 0.5) / grid * 2 * box[i] - box[i] for i in range(N - 1)]
    cell = np.prod([2 * box[i] / grid for i in range(N - 1)])
    gx, gw = _gauss_legendre(nodes)
    tmax = box[last]
    lead = axes[0]
    rest = np.meshgrid(*axes[1:], indexing="ij") if N > 2 else []
    R = np.stack([g.ravel() for g in rest], axis=1) if rest else np.zeros((1, 0))
    total = 0.0
    for x0 in lead:
        H = np.column_stack([np.full(len(R), x0), R])
        b = H @ lin
        c = np.zeros(len(H))
        for (i, j), v in head_terms:
            c += v * H[:, i] * H[:, j]
        # |a t^2 + b t + c| < eps  <=>  t in a union of intervals
        ivs = _quadratic_band(a, b, c, eps, tmax)
        for lo, hi in ivs:
            ok = hi > lo
            if not ok.any():
                continue
            lo_, hi_ = lo[ok], hi[ok]
            mid = 0.5 * (lo_ + hi_)
            half = 0.5 * (hi_ - lo_)
            acc = np.zeros(len(mid))
            Hk = H[ok]
            for xn, wn in zip(gx, gw):
                t = mid + half * xn
                acc += wn * w(np.column_stack([Hk, t]))
            total += float(np.sum(acc * half))
    return total * cell / (2 * eps)


def _quadratic_band(a, b, c, eps, tmax):
    """Intervals of t in [-tmax, tmax] with |a t^2 + b t + c| < eps (vectorized)."""
    n = len(b)
    if a == 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-eps - c) / b
            t2 = (eps - c) / b
        lo = np.minimum(t1, t2)
        hi = np.maximum(t1, t2)
        zero = b == 0
        lo = np.where(zero, np.where(np.abs(c) < eps, -tmax, 0), lo)
        hi = np.where(zero, np.where(np.abs(c) < eps, tmax, 0), hi)
        return [(np.clip(lo, -tmax, tmax), np.clip(hi, -tmax, tmax))]
    if a < 0:
        a, b, c = -a, -b, -c
    # a > 0: {f < eps} = (r1(eps), r2(eps)); {f <= -eps} = [r1(-eps), r2(-eps)]
    def roots(level):
        d = b * b - 4 * a * (c - level)
        s = np.sqrt(np.maximum(d, 0))
        return (-b - s) / (2 * a), (-b + s) / (2 * a), d > 0
    o1, o2, ook = roots(eps)
    i1, i2, iok = roots(-eps)
    out = []
    # left piece (o1, i1) or whole (o1, o2) when the inner set is empty
    left_hi = np.where(iok, i1, o2)
    out.append((np.where(ook, o1, 0.0), np.where(ook, left_hi, 0.0)))
    out.append((np.where(ook & iok, i2, 0.0), np.where(ook & iok, o2, 0.0)))
    return [(np.clip(lo, -tmax, tmax), np.clip(hi, -tmax, tmax)) for lo, hi in out]


def _coarea_mc(F: QuadraticForm, w, samples: int, seed: int) -> tuple[float, float]:
    """Monte Carlo of integral_{F=0} w / |dF/dx_last| over the head box."""
    N = F.n_vars
    box = np.array(support_box(F))
    rng = np.random.default_rng(seed)
    last = N - 1
    co = dict(F.coeffs)
    a = float(co.get((last, last), 0))
    lin = np.zeros(N - 1)
    for (i, j), c in F.coeffs:
        if j == last and i != last:
            lin[i] += float(c)
    head_terms = [((i, j), float(c)) for (i, j), c in F.coeffs if j != last]
    vol = float(np.prod(2 * box[:-1]))
    vals = []
    chunk = 1 << 18
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        H = (rng.random((k, N - 1)) * 2 - 1) * box[:-1]
        b = H @ lin
        c = np.zeros(k)
        for (i, j), v in head_terms:
            c += v * H[:, i] * H[:, j]
        acc = np.zeros(k)
        if a != 0:
            d = b * b - 4 * a * c
            ok = d > 0
            s = np.sqrt(np.where(ok, d, 0))
            for sg in (1, -1):
                t = (-b + sg * s) / (2 * a)
                dF = np.abs(2 * a * t + b)
                val = np.where(ok & (dF > 0), w(np.column_stack([H, t])) / np.where(dF > 0, dF, 1), 0.0)
                acc += val
        else:
            ok = b != 0
            t = np.where(ok, -c / np.where(ok, b, 1), 0)
            acc += np.where(ok, w(np.column_stack([H, t])) / np.where(ok, np.abs(b), 1), 0.0)
        vals.append(acc)
        done += k
    v = np.concatenate(vals) * vol
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


DEFAULT_EPS = (0.1, 0.05, 0.025, 0.0125)


def sigma_infinity(F: QuadraticForm, w: Callable[[np.ndarray], np.ndarray] | None = None,
                   epsilon_schedule: Sequence[float] = DEFAULT_EPS, grid: int = 48,
                   mc_samples: int = 0, seed: int = 20240601, rtol: float = 0.02) -> RealDensity:
    """lim_{eps -> 0} (2 eps)^{-1} * integral_{|F| < eps} w.

    Slab integrals at each eps, Richardson-extrapolated in eps^2 (the slab
    average is even in eps); the spread of the extrapolants is the error
    estimate.  mc_samples > 0 adds the co-area Monte Carlo cross-check.
    """
    if w is None:
        def w(Z):
            return weight_w(F, Z)
    per = [(e, _slab_integral(F, w, e, grid)) for e in epsilon_schedule]
    ext = []
    for (e1, v1), (e2, v2) in zip(per, per[1:]):
        r = (e1 / e2) ** 2
        ext.append((r * v2 - v1) / (r - 1))
    if not ext:
        ext = [per[-1][1]]
    value = ext[-1]
    err = float(max(ext) - min(ext)) if len(ext) > 1 else abs(per[-1][1] - value)
    if value != 0 and err > rtol * abs(value):
        raise NonConvergence(f"slab estimates spread {err:.3g} exceeds tolerance")
    res = RealDensity(value, err, per, ext)
    if mc_samples:
        res.mc_value, res.mc_stderr = _coarea_mc(F, w, mc_samples, seed)
        res.seed = seed
    return res
