"""Experiment harness: configs, scenario runners, reports and Hilbert symbols."""
from __future__ import annotations

import csv
import json
import math
import os
import platform
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .arith import fit_slope, legendre, primes_up_to, valuation
from .errors import BadPrime, ConfigError, OracleFailure
from .localcount import (LocalCondition, alternating_condition, count_diagonal_poly_zeros,
                         full_condition, make_condition)
from .poly import HomogeneousPoly
from .quadform import QuadraticForm
from .sieve import (SPLIT_PAIR, SWAP_PAIR, FibreActionData, SievePlan, delta_invariant,
                    theorem17_bound)

SCHEMA_VERSION = 1
SCENARIOS = ("baseline", "thin1", "thin2", "fibration", "friable", "equidist", "circle")
MIN_FIT_POINTS = 4

# ---------------------------------------------------------------------------
# Hilbert symbols


def _split_p(x: Fraction, p: int) -> tuple[int, int]:
    """(v_p(x), Legendre symbol of the unit part)."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("Hilbert symbol needs nonzero arguments")
    v = valuation(x.numerator, p) - valuation(x.denominator, p)
    u = (x.numerator // p ** valuation(x.numerator, p)) * (x.denominator // p ** valuation(x.denominator, p))
    return v, legendre(u % p, p)


def hilbert_symbol(a, b, p: int) -> int:
    """(a, b)_p for nonzero rationals and an odd prime p; p = 0 is the real place."""
    a, b = Fraction(a), Fraction(b)
    if a == 0 or b == 0:
        raise ValueError("Hilbert symbol needs nonzero arguments")
    if p == 0:
        return -1 if a < 0 and b < 0 else 1
    if p == 2:
        raise BadPrime("the Hilbert symbol at 2 is not supported")
    al, ua = _split_p(a, p)
    be, ub = _split_p(b, p)
    s = -1 if (al * be * (p - 1) // 2) % 2 else 1
    return s * ua ** (be % 2) * ub ** (al % 2)


_BRUTE_CACHE: dict[tuple, int] = {}


def _square_class(x: Fraction, p: int) -> tuple[int, int]:
    """Representative integer of x modulo squares of Q_p^x with valuation 0 or 1."""
    x = Fraction(x)
    n = x.numerator * x.denominator  # same square class as x
    v = valuation(n, p)
    return n // p ** (v - v % 2), v % 2


def hilbert_bruteforce(a, b, p: int) -> int:
    """Decide z^2 = a x^2 + b y^2 over Q_p by counting primitive zeros mod p^3.

    After stripping squares both coefficients have valuation <= 1, where a
    primitive zero mod p^3 exists iff a p-adic zero does.
    """
    if p == 2:
        raise BadPrime("the Hilbert symbol at 2 is not supported")
    (ra, va), (rb, vb) = _square_class(a, p), _square_class(b, p)
    key = (p, va, legendre((ra // p**va) % p, p), vb, legendre((rb // p**vb) % p, p))
    if key not in _BRUTE_CACHE:
        q = p**3
        A3 = count_diagonal_poly_zeros([1, -ra, -rb], [0, 0, 0], 0, q)
        A1 = count_diagonal_poly_zeros([1, -ra, -rb], [0, 0, 0], 0, p)
        _BRUTE_CACHE[key] = 1 if A3 - p**3 * A1 > 0 else -1
    return _BRUTE_CACHE[key]


def local_symbol(a: int, t: np.ndarray, p: int) -> np.ndarray:
    """Vectorized (a, t)_p for a fixed nonzero integer a and nonzero integers t."""
    t = np.asarray(t, dtype=np.int64)
    if (t == 0).any():
        raise OracleFailure("Hilbert symbol at t = 0", x=None, p=p)
    al = valuation(a, p)
    ua = legendre((a // p**al) % p, p)
    w = np.abs(t)
    be = np.zeros(len(w), dtype=np.int64)
    div = w % p == 0
    while div.any():
        w = np.where(div, w // p, w)
        be += div
        div = w % p == 0
    leg = np.array([0] + [legendre(k, p) for k in range(1, p)], dtype=np.int64)
    ub = leg[(np.sign(t) * w) % p]
    s = np.where((al * be * ((p - 1) // 2)) % 2 == 1, -1, 1)
    s = s * np.where(be % 2 == 1, ua, 1) * (ub if al % 2 else 1)
    return s


# ---------------------------------------------------------------------------
# conic bundles


@dataclass
class ConicBundle:
    """The fibration u^2 - a v^2 = g(x) w^2 over X, g the product of components."""
    a: int
    components: tuple[HomogeneousPoly, ...]

    @classmethod
    def parse(cls, spec: dict, n_vars: int) -> "ConicBundle":
        try:
            a = int(spec["a"])
            comps = tuple(HomogeneousPoly.parse(t, n_vars) for t in spec["components"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad fibration spec: {e}") from e
        if a == 0 or not comps:
            raise ConfigError("fibration needs a != 0 and at least one component")
        return cls(a, comps)

    def action_data(self) -> list[FibreActionData]:
        """Over each component the fibre is the line pair u = +-sqrt(a) v,
        swapped by Galois unless a is a square."""
        r = math.isqrt(abs(self.a))
        split = self.a > 0 and r * r == self.a
        return [SPLIT_PAIR if split else SWAP_PAIR for _ in self.components]

    def delta(self) -> Fraction:
        return delta_invariant(self.action_data())

    def values(self, X: np.ndarray) -> np.ndarray:
        t = np.ones(len(X), dtype=object if len(self.components) > 2 else np.int64)
        for g in self.components:
            t = t * g.evaluate_array(X)
        return t

    def soluble_mask(self, t: np.ndarray, p_cutoff: int, skip: Sequence[int] = ()) -> np.ndarray:
        """Fibre over a point with value t is soluble at the real place and at
        every odd p <= p_cutoff outside `skip`."""
        t = np.asarray(t)
        uniq, inv = np.unique(t, return_inverse=True)
        ok = np.ones(len(uniq), dtype=bool)
        nz = uniq != 0
        ok[nz & (uniq < 0)] = self.a > 0  # u^2 - a v^2 - t w^2 is definite iff a < 0 and t < 0
        vals = uniq[nz].astype(np.int64)
        sub = ok[nz].copy()
        for p in primes_up_to(p_cutoff):
            if p == 2 or p in skip:
                continue
            sub &= local_symbol(self.a, vals, p) == 1
        ok[nz] = sub
        return ok[inv.ravel()]

    def residue_oracle(self, X: np.ndarray, p: int) -> np.ndarray:
        """Solubility at p decided from x mod p^2; v_p(t) >= 2 counts as soluble."""
        q2 = p * p
        t = np.ones(len(X), dtype=np.int64)
        for g in self.components:
            t = t * (g.evaluate_array(X, q2) % q2) % q2
        out = np.ones(len(X), dtype=bool)
        hit = t % q2 != 0
        out[hit] = local_symbol(self.a, t[hit], p) == 1
        return out


def builtin_conic_bundle(n_vars: int = 5) -> ConicBundle:
    return ConicBundle(-1, (HomogeneousPoly.parse("x0", n_vars), HomogeneousPoly.parse("x1", n_vars)))


# ---------------------------------------------------------------------------
# configs and reports


@dataclass
class ExperimentConfig:
    scenario: str
    B: list[int]
    form: str = "diag:1,1,1,1,-1"
    schema_version: int = SCHEMA_VERSION
    divisor: list[str] = field(default_factory=list)
    predicate: str = "x0x1_square"
    fibration: dict | None = None
    p_cutoff: int = 100
    y: float = 10.0
    conditions: list[dict] = field(default_factory=list)
    xi: float | str = "theta"
    p_max: int = 500
    max_points: int = 4 * 10**9
    seed: int = 20240601
    output: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "scenario" not in d or "B" not in d:
            raise ConfigError("config needs 'scenario' and 'B'")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return cls.from_dict(d)

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version {self.schema_version} unsupported (expected {SCHEMA_VERSION})")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}")
        if not self.B or any(int(b) != b or b < 1 for b in self.B):
            raise ConfigError("B schedule must be a nonempty list of positive integers")
        if any(b2 <= b1 for b1, b2 in zip(self.B, self.B[1:])):
            raise ConfigError("B schedule must be strictly increasing")
        try:
            F = self.quadratic_form()
            F.discriminant()
        except Exception as e:
            raise ConfigError(f"bad form spec: {e}") from e
        if self.scenario in ("thin1", "friable") and not self.divisor:
            raise ConfigError(f"scenario {self.scenario} needs 'divisor'")
        if self.scenario == "thin2" and self.predicate not in THIN2_PREDICATES:
            raise ConfigError(f"thin2 predicate must be one of {sorted(THIN2_PREDICATES)}")
        if self.scenario == "equidist" and not self.conditions:
            raise ConfigError("equidist needs 'conditions'")
        for c in self.conditions:
            if not {"p", "predicate"} <= set(c):
                raise ConfigError("each condition needs 'p' and 'predicate'")
            if int(c["p"]) in F.bad_primes:
                raise ConfigError(f"condition prime {c['p']} divides 2*Delta_F")
        ps = [int(c["p"]) for c in self.conditions]
        if len(set(ps)) != len(ps):
            raise ConfigError("condition primes must be distinct")
        if self.scenario in ("thin1", "friable"):
            for t in self.divisor:
                try:
                    HomogeneousPoly.parse(t, F.n_vars)
                except Exception as e:
                    raise ConfigError(f"bad divisor component {t!r}: {e}") from e
        if self.scenario == "fibration" and self.fibration is not None:
            ConicBundle.parse(self.fibration, F.n_vars)
        if self.scenario == "circle" and F.n_vars < 5:
            raise ConfigError("circle scenario needs N >= 5")
        if self.y <= 0:
            raise ConfigError("y must be positive")

    def quadratic_form(self) -> QuadraticForm:
        return QuadraticForm.parse(self.form)

    def build_conditions(self, F: QuadraticForm) -> list[LocalCondition]:
        out = []
        for c in self.conditions:
            p, m = int(c["p"]), int(c.get("m", 1))
            pred = c["predicate"]
            if pred == "alternate":
                out.append(alternating_condition(F, p, m))
            elif pred == "full":
                out.append(full_condition(F, p, m))
            else:
                out.append(make_condition(F, p, m, pred))
        return out


@dataclass
class ExperimentReport:
    scenario: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)

    def add_row(self, **row):
        if self.rows and row["B"] <= self.rows[-1]["B"]:
            raise ValueError("rows are keyed by increasing B")
        self.rows.append(row)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    @staticmethod
    def _fmt(v) -> str:
        if isinstance(v, Fraction):
            return f"{v.numerator}/{v.denominator}"
        if isinstance(v, (bool, np.bool_)):
            return str(bool(v)).lower()
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return f"{float(v):.12g}"
        return "" if v is None else str(v)

    def to_csv(self, path: str):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([self._fmt(r.get(c)) for c in self.columns])

    def to_dict(self) -> dict:
        def conv(v):
            if isinstance(v, Fraction):
                return f"{v.numerator}/{v.denominator}"
            if isinstance(v, (np.integer,)):
                return int(v)
            if isinstance(v, (np.floating,)):
                return float(v)
            if isinstance(v, (np.bool_,)):
                return bool(v)
            if isinstance(v, dict):
                return {k: conv(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [conv(x) for x in v]
            return v
        return conv({"scenario": self.scenario, "columns": self.columns, "rows": self.rows,
                     "fit": self.fit, "metadata": self.metadata})

    def to_json(self, path: str):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    def write(self, out_dir: str):
        os.makedirs(out_dir, exist_ok=True)
        self.to_csv(os.path.join(out_dir, "report.csv"))
        self.to_json(os.path.join(out_dir, "report.json"))


def environment_fingerprint() -> dict:
    return {"python": sys.version.split()[0], "numpy": np.__version__,
            "platform": platform.platform(), "machine": platform.machine()}


def _fit(xs, ys) -> dict:
    pts = [(x, y) for x, y in zip(xs, ys) if np.isfinite(y)]
    if len(pts) < MIN_FIT_POINTS:
        return {"slope": None, "residual": None, "flag": "insufficient points", "n": len(pts)}
    s, r = fit_slope([p[0] for p in pts], [p[1] for p in pts])
    return {"slope": s, "residual": r, "n": len(pts)}


def _running_fit(xs, ys) -> list:
    return [_fit(xs[:k + 1], ys[:k + 1])["slope"] for k in range(len(xs))]


def _base_report(cfg: ExperimentConfig, F: QuadraticForm, columns: list[str]) -> ExperimentReport:
    return ExperimentReport(cfg.scenario, columns, metadata={
        "form": F.to_text(), "Delta_F": str(F.discriminant()), "scenario": cfg.scenario,
        "config": asdict(cfg), "environment": environment_fingerprint(), "seed": cfg.seed})


def _profile(F, cfg, stats):
    from .enumeration import height_profile
    prof = height_profile(F, cfg.B[-1], stats, budget=cfg.max_points)
    return {k: np.cumsum(v) for k, v in prof.items()}


def _finish(rep: ExperimentReport, t0: float, points: int):
    rep.metadata["wall_time_s"] = time.time() - t0
    rep.metadata["budget_use"] = {"points_enumerated": int(points)}
    return rep


# ---------------------------------------------------------------------------
# scenarios


def run_baseline(cfg: ExperimentConfig) -> ExperimentReport:
    t0 = time.time()
    F = cfg.quadratic_form()
    cum = _profile(F, cfg, {})
    rep = _base_report(cfg, F, ["B", "total", "fitted_exponent"])
    counts = [int(cum["total"][b]) for b in cfg.B]
    xs = [math.log(b) for b in cfg.B]
    ys = [math.log(c) if c > 0 else -math.inf for c in counts]
    run = _running_fit(xs, ys)
    for b, c, e in zip(cfg.B, counts, run):
        rep.add_row(B=b, total=c, fitted_exponent=e)
    rep.fit = _fit(xs, ys)
    rep.fit["prediction"] = F.n_vars - 2
    if all(c == 0 for c in counts):
        rep.fit["flag"] = "no points (anisotropic or empty)"
    return _finish(rep, t0, counts[-1])


def _is_square_int(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.int64)
    out = t == 0
    pos = t > 0
    r = np.floor(np.sqrt(t[pos].astype(np.float64))).astype(np.int64)
    for d in (-1, 0, 1):
        out[np.flatnonzero(pos)[(r + d) ** 2 == t[pos]]] = True
    return out


THIN2_PREDICATES = {
    "x0x1_square": lambda X: _is_square_int(X[:, 0] * X[:, 1]),
    "all": lambda X: np.ones(len(X), dtype=bool),
}


def theta_exponent(n: int) -> float:
    """Level exponent theta_n = (n-3)/(2(n+4)) for a quadric in P^n."""
    return (n - 3) / (2 * (n + 4))


def _xi_for(cfg: ExperimentConfig, F: QuadraticForm, B: int) -> float:
    if cfg.xi == "theta":
        return float(B) ** theta_exponent(F.n_vars - 1)
    return float(cfg.xi)


def run_thin(cfg: ExperimentConfig) -> ExperimentReport:
    """thin1: points on a divisor.  thin2: image of the cover w^2 = x0 x1."""
    t0 = time.time()
    F = cfg.quadratic_form()
    if cfg.scenario == "thin1":
        comps = [HomogeneousPoly.parse(t, F.n_vars) for t in cfg.divisor]

        def target(X):
            m = np.zeros(len(X), dtype=bool)
            for g in comps:
                m |= g.evaluate_array(X) == 0
            return m
        pred_name = None
    else:
        target = THIN2_PREDICATES[cfg.predicate]
        pred_name = cfg.predicate
    cum = _profile(F, cfg, {"target": target})
    rep = _base_report(cfg, F, ["B", "total", "target", "ratio", "xi", "bound_main", "bound_error",
                                "fitted_exponent"])
    ratios = []
    for b in cfg.B:
        tot, tg = int(cum["total"][b]), int(cum["target"][b])
        ratios.append(tg / tot if tot else 0.0)
    xs = [math.log(b) for b in cfg.B]
    ys = [math.log(r) if r > 0 else -math.inf for r in ratios]
    run = _running_fit(xs, ys)
    for b, r, e in zip(cfg.B, ratios, run):
        xi = _xi_for(cfg, F, b)
        conds = {}
        for p in primes_up_to(max(2, int(math.ceil(xi)) - 1)):
            if p == 2 or p in F.bad_primes or p >= xi:
                continue
            if cfg.scenario == "thin2" and pred_name == "x0x1_square":
                conds[p] = make_condition(F, p, 1, "x0x1_square")
            elif cfg.scenario == "thin1":
                conds[p] = _off_divisor_condition(F, p, comps)
        bound = theorem17_bound(SievePlan(F, conds, b, xi))
        rep.add_row(B=b, total=int(cum["total"][b]), target=int(cum["target"][b]), ratio=r, xi=xi,
                    bound_main=bound.main, bound_error=bound.error,
                    fitted_exponent=(-e if e is not None else None))
    rep.fit = _fit(xs, ys)
    if rep.fit.get("slope") is not None:
        rep.fit["saving_exponent"] = -rep.fit["slope"]
    rep.fit["monotone_decreasing"] = all(b < a for a, b in zip(ratios, ratios[1:]))
    rep.metadata["theta_n"] = theta_exponent(F.n_vars - 1)
    return _finish(rep, t0, cum["total"][cfg.B[-1]])


def _off_divisor_condition(F, p, comps) -> LocalCondition:
    def pred(X, p, m):
        keep = np.ones(len(X), dtype=bool)
        for g in comps:
            keep &= g.evaluate_array(X, p) % p != 0
        return keep
    return make_condition(F, p, 1, pred)


def run_fibration(cfg: ExperimentConfig) -> ExperimentReport:
    t0 = time.time()
    F = cfg.quadratic_form()
    bundle = (ConicBundle.parse(cfg.fibration, F.n_vars) if cfg.fibration
              else builtin_conic_bundle(F.n_vars))
    skip = sorted(F.bad_primes)
    if skip:
        warnings.warn(f"primes {skip} divide 2*Delta_F; treated as everywhere soluble")
    cum = _profile(F, cfg, {"soluble": lambda X: bundle.soluble_mask(bundle.values(X), cfg.p_cutoff, skip)})
    Delta = bundle.delta()
    rep = _base_report(cfg, F, ["B", "total", "soluble", "ratio", "prediction", "fitted_exponent"])
    ratios = [int(cum["soluble"][b]) / int(cum["total"][b]) if cum["total"][b] else 0.0 for b in cfg.B]
    xs = [math.log(math.log(b)) for b in cfg.B]
    ys = [math.log(r) if r > 0 else -math.inf for r in ratios]
    run = _running_fit(xs, ys)
    c0 = None
    for b, r, e in zip(cfg.B, ratios, run):
        pred = float(math.log(b) ** (-float(Delta)))
        c0 = r / pred if c0 is None else c0
        rep.add_row(B=b, total=int(cum["total"][b]), soluble=int(cum["soluble"][b]), ratio=r,
                    prediction=c0 * pred, fitted_exponent=e)
    rep.fit = _fit(xs, ys)
    rep.fit["Delta"] = Delta
    rep.fit["expected_slope"] = -float(Delta)
    T = max(abs(int(v)) for v in bundle.values(np.array([[cfg.B[-1]] * F.n_vars]))) or 1
    big = [p for p in primes_up_to(max(T, cfg.p_cutoff)) if p > cfg.p_cutoff]
    rep.metadata["truncation"] = {
        "p_cutoff": cfg.p_cutoff,
        "note": "local solubility tested only at odd good primes <= p_cutoff and the real place",
        "tail_estimate_sum_C_over_p": 10.0 * sum(1.0 / p for p in big),
        "C": 10.0,
    }
    return _finish(rep, t0, cum["total"][cfg.B[-1]])


def _smooth_mask(values: np.ndarray, y: float) -> np.ndarray:
    """|v| is y-smooth (v != 0)."""
    v = np.abs(np.asarray(values, dtype=np.int64))
    uniq, inv = np.unique(v, return_inverse=True)
    w = uniq.copy()
    for p in primes_up_to(int(y)):
        d = (w % p == 0) & (w > 0)
        while d.any():
            w = np.where(d, w // p, w)
            d = (w % p == 0) & (w > 0)
    return (w == 1)[inv.ravel()]


def run_friable(cfg: ExperimentConfig) -> ExperimentReport:
    t0 = time.time()
    F = cfg.quadratic_form()
    comps = [HomogeneousPoly.parse(t, F.n_vars) for t in cfg.divisor]
    r = len(comps)

    def friable(X):
        if math.isinf(cfg.y):
            return np.ones(len(X), dtype=bool)
        keep = np.ones(len(X), dtype=bool)
        for g in comps:
            v = g.evaluate_array(X)
            keep &= (v != 0) & _smooth_mask(v, cfg.y)
        return keep
    cum = _profile(F, cfg, {"friable": friable})
    rep = _base_report(cfg, F, ["B", "total", "friable", "ratio", "fitted_exponent"])
    ratios = [int(cum["friable"][b]) / int(cum["total"][b]) if cum["total"][b] else 0.0 for b in cfg.B]
    xs = [math.log(math.log(b)) for b in cfg.B]
    ys = [math.log(x) if x > 0 else -math.inf for x in ratios]
    run = _running_fit(xs, ys)
    for b, x, e in zip(cfg.B, ratios, run):
        rep.add_row(B=b, total=int(cum["total"][b]), friable=int(cum["friable"][b]), ratio=x, fitted_exponent=e)
    rep.fit = _fit(xs, ys)
    rep.fit["r"] = r
    rep.fit["expected_slope"] = -r
    return _finish(rep, t0, cum["total"][cfg.B[-1]])


def run_equidist(cfg: ExperimentConfig) -> ExperimentReport:
    from .enumeration import condition_mask
    from .localcount import tamagawa_local_mass
    t0 = time.time()
    F = cfg.quadratic_form()
    conds = cfg.build_conditions(F)
    pred = Fraction(1)
    for c in conds:
        pred *= Fraction(c.size, c.total)
    cum = _profile(F, cfg, {"target": lambda X: condition_mask(X, conds)})
    rep = _base_report(cfg, F, ["B", "total", "target", "ratio", "prediction", "deviation"])
    devs = []
    for b in cfg.B:
        tot, tg = int(cum["total"][b]), int(cum["target"][b])
        ratio = tg / tot if tot else 0.0
        dev = abs(ratio - float(pred))
        devs.append(dev)
        rep.add_row(B=b, total=tot, target=tg, ratio=ratio, prediction=pred, deviation=dev)
    rep.metadata["tamagawa_masses"] = {f"{c.p}^{c.m}": tamagawa_local_mass(F, c) for c in conds}
    rep.fit = {"prediction": pred, "max_abs_deviation_at_largest_B": devs[-1],
               "relative_deviation_at_largest_B": devs[-1] / float(pred),
               "trend_violations": sum(1 for a, b in zip(devs, devs[1:]) if b > a)}
    return _finish(rep, t0, cum["total"][cfg.B[-1]])


def run_circle(cfg: ExperimentConfig) -> ExperimentReport:
    from .enumeration import sigma_infinity, support_box, weighted_count
    from .expsum import ResidueSet, singular_series
    t0 = time.time()
    F = cfg.quadratic_form()
    conds = cfg.build_conditions(F)
    omega = ResidueSet.from_conditions(conds) if conds else ResidueSet.trivial(F.n_vars)
    M = omega.modulus
    sinf = ss = None
    rep = _base_report(cfg, F, ["B", "weighted_count", "main_term", "main_ratio", "flag"])
    ratios = []
    for b in cfg.B:
        if max(support_box(F, b)) < 1:
            rep.add_row(B=b, weighted_count=0.0, main_term=None, main_ratio=None, flag="below support threshold")
            continue
        if sinf is None:
            sinf = sigma_infinity(F)
            ss = singular_series(F, M, omega, cfg.p_max)
        wc = weighted_count(F, b, conds, budget=cfg.max_points)
        mt = float(sinf.value) * float(b) ** (F.n_vars - 2) * ss.value
        ratios.append(wc / mt)
        rep.add_row(B=b, weighted_count=wc, main_term=mt, main_ratio=wc / mt, flag="")
    rep.fit = {"M": M, "drift_toward_1": bool(len(ratios) >= 2 and abs(ratios[-1] - 1) <= abs(ratios[0] - 1))}
    if sinf is not None:
        rep.fit.update({"sigma_infinity": float(sinf.value), "sigma_infinity_error": sinf.error,
                        "singular_series": ss.value, "singular_series_bounds": [ss.lower, ss.upper]})
    return _finish(rep, t0, 0)


RUNNERS = {"baseline": run_baseline, "thin1": run_thin, "thin2": run_thin, "fibration": run_fibration,
           "friable": run_friable, "equidist": run_equidist, "circle": run_circle}


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> ExperimentReport:
    cfg.validate()
    rep = RUNNERS[cfg.scenario](cfg)
    out = out_dir or cfg.output
    if out:
        rep.write(out)
    return rep
