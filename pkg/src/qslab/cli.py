"""Command line entry point: qslab {count, local, expsum, sieve, experiment}."""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .errors import QslabError, ResourceLimit
from .quadform import QuadraticForm


def _conditions(F, specs):
    from .localcount import alternating_condition, full_condition, make_condition
    out = []
    for s in specs or []:
        try:
            p, m, pred = s.split(":", 2)
            p, m = int(p), int(m)
        except ValueError:
            raise argparse.ArgumentTypeError(f"condition {s!r} is not p:m:predicate")
        if pred == "alternate":
            out.append(alternating_condition(F, p, m))
        elif pred == "full":
            out.append(full_condition(F, p, m))
        else:
            out.append(make_condition(F, p, m, pred))
    return out


def _emit(obj, as_json):
    if as_json:
        print(json.dumps(obj, default=str, sort_keys=True))
    else:
        for k, v in obj.items():
            print(f"{k}: {v}")


def cmd_count(a):
    from .enumeration import CountRequest, count_points, weighted_count
    F = QuadraticForm.parse(a.form)
    conds = _conditions(F, a.condition)
    if a.weighted:
        val = weighted_count(F, a.B, conds, budget=a.budget)
        _emit({"form": F.to_text(), "B": a.B, "weighted_count": f"{val:.12g}"}, a.json)
    else:
        n = count_points(CountRequest(F, a.B, conds), budget=a.budget)
        _emit({"form": F.to_text(), "B": a.B, "count": n}, a.json)


def cmd_local(a):
    from .localcount import count_projective_points, fp_projective_count, local_density
    F = QuadraticForm.parse(a.form)
    out = {"form": F.to_text(), "p": a.p, "Delta_F": str(F.discriminant())}
    if F.is_good_prime(a.p):
        out["#X(F_p)"] = fp_projective_count(F, a.p)
        out[f"#X(Z/p^{a.m})"] = count_projective_points(F, a.p, a.m)
    d = local_density(F, a.p, allow_bad=True)
    out["sigma_p"] = str(d.sigma)
    _emit(out, a.json)


def cmd_expsum(a):
    from .expsum import singular_series, sum_SqM
    F = QuadraticForm.parse(a.form)
    conds = _conditions(F, a.condition)
    from .expsum import ResidueSet
    omega = ResidueSet.from_conditions(conds) if conds else ResidueSet.trivial(F.n_vars)
    if a.series:
        s = singular_series(F, omega.modulus, omega, a.p_max)
        _emit({"M": omega.modulus, "singular_series": f"{s.value:.12g}",
               "lower": f"{s.lower:.12g}", "upper": f"{s.upper:.12g}", "p_max": s.p_max}, a.json)
        return
    c = [int(v) for v in a.c.split(",")] if a.c else None
    val = sum_SqM(F, a.q, omega.modulus, omega, c, a.mode)
    exact = val.as_integer() if a.mode == "exact" else None
    if exact is not None:
        shown = str(exact)
    else:
        z = complex(val)
        shown = f"{z.real:.12g}{z.imag:+.12g}j"
    _emit({"q": a.q, "M": omega.modulus, "c": c, "value": shown}, a.json)


def cmd_sieve(a):
    from . import sieve
    if a.wirsing:
        r = sieve.wirsing_partial(a.wirsing, a.x)
        _emit({"g": a.wirsing, "x": a.x, "partial_sum": r.partial_sum, "prediction": f"{r.prediction:.12g}",
               "c_g": f"{r.c_g:.12g}", "stabilizing": r.stabilizing}, a.json)
        return
    F = QuadraticForm.parse(a.form)
    conds = {c.p: c for c in _conditions(F, a.condition)}
    plan = sieve.SievePlan(F, conds, a.B, a.xi)
    r = sieve.selberg_sieve_count(plan, budget=a.budget)
    _emit({"B": a.B, "xi": a.xi, "total": r.total, "sieved": r.sieved,
           "majorant": str(r.majorant) if isinstance(r.majorant, Fraction) else f"{r.majorant:.12g}",
           "G": str(r.G), "ratio": f"{r.ratio:.12g}"}, a.json)


def cmd_experiment(a):
    from .lab import ExperimentConfig, run_experiment
    cfg = ExperimentConfig.load(a.config)
    rep = run_experiment(cfg, a.out)
    print(f"scenario {cfg.scenario}: {len(rep.rows)} rows written to {a.out or cfg.output}")
    for k, v in rep.fit.items():
        print(f"  {k}: {v}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qslab", description="Sieve and point-count experiments on quadrics")
    sub = ap.add_subparsers(dest="cmd", required=True)
    form = "diag:1,1,1,1,-1"

    def common(p):
        p.add_argument("--form", default=form, help="'diag:a,b,...' or '[n=N;] c i j; ...'")
        p.add_argument("--json", action="store_true")

    p = sub.add_parser("count", help="count points of bounded height")
    common(p)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--condition", action="append", help="p:m:predicate (repeatable)")
    p.add_argument("--weighted", action="store_true", help="smooth weight w(x/B) over all zeros")
    p.add_argument("--budget", type=int, default=4 * 10**9)
    p.set_defaults(fn=cmd_count)

    p = sub.add_parser("local", help="local counts and densities")
    common(p)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.set_defaults(fn=cmd_local)

    p = sub.add_parser("expsum", help="exponential sums and the singular series")
    common(p)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--c", default=None, help="comma-separated frequency vector")
    p.add_argument("--condition", action="append")
    p.add_argument("--mode", choices=("float", "exact"), default="float")
    p.add_argument("--series", action="store_true")
    p.add_argument("--p-max", type=int, default=500)
    p.set_defaults(fn=cmd_expsum)

    p = sub.add_parser("sieve", help="Selberg sieve runs and multiplicative sums")
    common(p)
    p.add_argument("--B", type=int, default=16)
    p.add_argument("--xi", type=float, default=20.0)
    p.add_argument("--condition", action="append")
    p.add_argument("--wirsing", choices=("mu2", "one", "tau", "half_primes_3mod4"))
    p.add_argument("--x", type=int, default=10**6)
    p.add_argument("--budget", type=int, default=4 * 10**9)
    p.set_defaults(fn=cmd_sieve)

    p = sub.add_parser("experiment", help="run a configured scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_experiment)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        a.fn(a)
    except ResourceLimit as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return 3
    except (QslabError, ValueError, argparse.ArgumentTypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return getattr(e, "exit_code", 2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
