"""Command line: invbl {classify,solve,domain,verify,geometric,cdp} FILE."""
import argparse
import math
import sys

import numpy as np

from . import io
from . import linalg as la
from . import quadrature as qd
from .classify import classify, decompose
from .domain import decide_problem
from .problem import ValidationError, validate
from .solver import cdp_check, cdp_problem, geometric_check, solve_D, stationarity_residual

EXIT_OK, EXIT_INPUT, EXIT_TOLERANCE = 0, 2, 3
DECOMP_TOL = 1e-8


class ToleranceFailure(RuntimeError):
    """A numerical safeguard was breached (module and tolerance in the message)."""


def _load(args):
    with open(args.file) as fh:
        text = fh.read()
    return validate(io.parse_problem(text, args.kernel_convention))


def _classification(p):
    cl = classify(p)
    return {"case": cl.case, "label": cl.label, "facts": cl.facts,
            "consequences": cl.consequences, "statements": cl.statements, "s_plus": cl.s_plus}


def _decomposition(p):
    if classify(p).case != "Case11":
        return None
    d = decompose(p)
    res = d.residual(p.Q)
    limit = DECOMP_TOL * (1 + float(np.abs(p.Q).max(initial=0.0)))
    if res > limit:
        raise ToleranceFailure(f"classifier: decomposition residual {res:.3e} exceeds {limit:.1e}")
    return {"dim_H0": d.B0.shape[0], "dim_Hm1": d.Bm1.shape[0], "residual": res}


def _solve_report(r):
    return {"status": r.status, "D": r.D, "inf_cg": r.inf_cg, "dual_constant": r.dual_constant,
            "residual": r.residual, "iterations": r.iterations, "notes": r.notes,
            "argmax": r.argmax if r.status == "optimal" else None}


def cmd_classify(args):
    p = _load(args)
    return {"command": "classify", "classification": _classification(p), "decomposition": _decomposition(p)}


def cmd_solve(args):
    p = _load(args)
    r = solve_D(p, tol=args.tol, max_iter=args.max_iter, multistart=args.multistart, seed=args.seed)
    return {"command": "solve", "classification": _classification(p), "decomposition": _decomposition(p),
            "solve": _solve_report(r)}


def _cert(c):
    out = {}
    for k, v in c.items():
        if k == "plan":
            v = [{"edge": list(e), "mass": m} for e, m in sorted(v.items())]
        elif k == "graph":
            v = [list(e) for e in v]
        elif k == "witness":
            v = {"V_basis": la.float_array(v["V"].basis).T, "clause": v["clause"], "lhs": v["lhs"], "rhs": v["rhs"]}
        out[k] = v
    return out


def cmd_domain(args):
    p = _load(args)
    v = decide_problem(p, depth=args.depth, random_subspaces=args.random_subspaces, seed=args.seed)
    verdict = ("member" if v.member else "not-member") if v.method != "condition-c" else \
        ("holds-on-candidates" if v.member else "violated")
    return {"command": "domain", "classification": _classification(p),
            "domain": {"method": v.method, "verdict": verdict, "member": v.member,
                       "complete": v.complete, "certificate": _cert(v.certificate), "notes": v.notes}}


def _functions(p, kinds_arg):
    kinds = kinds_arg.split(",") if kinds_arg else []
    if kinds and len(kinds) != p.m:
        raise ValidationError(f"--functions needs {p.m} comma-separated kinds")
    fs = []
    for k in range(p.m):
        nk = p.dims[k]
        kind = kinds[k] if kinds else ("box" if p.c[k] > 0 else "cauchy")
        if kind == "box":
            fs.append(qd.box([-1.0] * nk, [1.0] * nk))
        elif kind == "cauchy":
            fs.append(qd.cauchy(nk))
        elif kind == "gaussian":
            fs.append(qd.gaussian(np.eye(nk)))
        elif kind == "gaussian_floor":
            fs.append(qd.gaussian_floor(np.eye(nk), 0.1))
        else:
            raise ValidationError(f"unknown test function kind {kind!r}")
    return fs


def cmd_verify(args):
    p = _load(args)
    r = solve_D(p, seed=args.seed)
    out = {"command": "verify", "classification": _classification(p), "solve": _solve_report(r)}
    if r.status in ("optimal", "max-iter", "unbounded") and math.isfinite(r.inf_cg):
        pr = qd.random_probe(p, r.inf_cg, args.probes, args.seed)
        out["probe"] = {"samples": pr.samples, "min_value": pr.min_value, "below_inf_cg": pr.below,
                        "suspicious": pr.suspicious}
    if sum(p.dims[k] for k in p.active) <= 6:
        out["grid_search_D"] = qd.grid_search_D(p)
    if p.dim <= 3:
        q = qd.quadrature_J(p, _functions(p, args.functions), N=args.grid, R=args.radius)
        ok = None
        if math.isfinite(r.inf_cg) and math.isfinite(q.value):
            ok = bool(q.value >= r.inf_cg - (q.error_bound + 1e-6))
        out["quadrature"] = {"value": q.value, "error_bound": q.error_bound, "N": q.grid["N"],
                             "reason": q.reason, "lower_bound_holds": ok}
    return out


def cmd_geometric(args):
    p = _load(args)
    g = geometric_check(p)
    out = {"command": "geometric", "geometric": g, "classification": _classification(p)}
    if g:
        ident = [np.eye(nk) for nk in p.dims]
        out["residual_at_identity"] = stationarity_residual(p, ident)
    out["solve"] = _solve_report(solve_D(p))
    return out


def cmd_cdp(args):
    with open(args.file) as fh:
        cf = io.parse_covariance(fh.read())
    try:
        holds = cdp_check(cf.cov, cf.dims, cf.ps)
    except ArithmeticError as e:
        raise ToleranceFailure(f"gaussian-solver: {e}") from None
    p = validate(cdp_problem(cf.cov, cf.dims, cf.ps))
    return {"command": "cdp", "covariance_condition": holds, "classification": _classification(p),
            "geometric": geometric_check(p)}


def build_parser():
    ap = argparse.ArgumentParser(prog="invbl", description="Inverse Brascamp-Lieb data: cases, constants, domains.")
    ap.add_argument("--kernel-convention", choices=["pi", "half"], default="pi",
                    help="kernel given as Q in e^{-pi<x,Qx>} (pi) or M in e^{-<x,Mx>/2} (half)")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, helptext):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("file")
        s.set_defaults(fn=fn)
        return s

    add("classify", cmd_classify, "case analysis and kernel decomposition")
    s = add("solve", cmd_solve, "optimal Gaussian constant D")
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--max-iter", type=int, default=10_000)
    s.add_argument("--multistart", type=int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s = add("domain", cmd_domain, "positivity of the infimum for the given exponents")
    s.add_argument("--depth", type=int, default=2)
    s.add_argument("--random-subspaces", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s = add("verify", cmd_verify, "quadrature, grid search and random probes against the solver")
    s.add_argument("--grid", type=int, default=None, help="points per axis")
    s.add_argument("--radius", type=float, default=None, help="box radius for unbounded axes")
    s.add_argument("--probes", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--functions", default=None, help="per-factor kinds, e.g. box,cauchy")
    add("geometric", cmd_geometric, "check the geometric normalization")
    add("cdp", cmd_cdp, "covariance criterion Sigma >= diag(p_k Sigma_k)")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        report = args.fn(args)
    except (ValueError, OSError) as e:
        sys.stderr.write(f"invbl: input error: {e}\n")
        return EXIT_INPUT
    except ToleranceFailure as e:
        sys.stderr.write(f"invbl: tolerance failure: {e}\n")
        return EXIT_TOLERANCE
    sys.stdout.write(io.dumps_report(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
