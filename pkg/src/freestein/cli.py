"""Command line entry point ``freestein``.

Reports are JSON on stdout (and in ``--report`` when given). Exit codes:
0 when every asserted check passes, 1 on a failed check or a computational
error (an error JSON is printed), 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

from numpy.polynomial import Chebyshev

from . import chebfree, ncfree
from .config import ConfigError, RunConfig, load_config
from .convolution import free_convolve
from .diffusion import (HessianManifold, bakry_emery_probe, dirichlet_residual, eigen_residual,
                        h1_seminorm, langevin_form, stationarity, variance_check)
from .equilibrium import schwinger_dyson_residual, solve_equilibrium
from .errors import FreeSteinError
from .measure import ChebMeasure, semicircle, uniform, w2_distance
from .momentmap import solve_moment_map
from .parsing import format_ncpoly, format_nctensor, parse_ncexpr, parse_potential
from .potential import PolynomialPotential
from .reports import build_report, dumps, error_report
from .stein import (clt_experiment, contraction_check, moment_stein_kernel, stability_probe,
                    stein_discrepancy, stein_residual, transported_moment_kernel)

CHECKS = ("contraction", "caffarelli", "clt", "stability", "dirichlet", "eigen", "poincare",
          "brascamp-lieb", "weighted-poincare", "bakry-emery", "schwinger-dyson", "bochner",
          "bakry-emery-ou")
NC_ACTIONS = ("derive", "cyclic", "jacobian", "moment", "sd-check", "stein-quadratic")
CLT_WINDOW = (-1.3, -0.7)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument resolution


def potential_from_expr(src: str) -> PolynomialPotential:
    return parse_potential(src).to_potential()


def resolve_target(ref: str, cfg: RunConfig) -> ChebMeasure:
    """Builtin name or measure JSON path."""
    name = ref[len("builtin:"):] if ref.startswith("builtin:") else ref
    head, _, rest = name.partition(":")
    try:
        if head == "semicircle" and not rest:
            return semicircle()
        if head == "scaled-semicircle":
            return semicircle(float(rest))
        if head == "uniform":
            a, b = rest.split(":")
            return uniform(float(a), float(b))
    except ValueError as exc:
        raise UsageError(f"bad builtin target {ref!r}: {exc}") from exc
    if head == "gibbs":
        return solve_equilibrium(potential_from_expr(rest), tol=cfg.eq_tol).measure
    if ref.startswith("builtin:"):
        raise UsageError(f"unknown builtin target {ref!r}")
    try:
        with open(ref) as fh:
            return ChebMeasure.from_dict(json.load(fh))
    except OSError as exc:
        raise UsageError(f"target {ref!r} is neither a builtin nor a readable file") from exc


def resolve_manifold(args, cfg: RunConfig) -> HessianManifold:
    """Hessian manifold over a Gibbs target (``--potential`` or ``--target``)."""
    solver = {"damping": cfg.damping, "max_iter": cfg.max_iter}
    if args.potential:
        return HessianManifold.from_gibbs(potential_from_expr(args.potential), **solver)
    ref = (args.target or "semicircle").removeprefix("builtin:")
    head, _, rest = ref.partition(":")
    if head == "semicircle" and not rest:
        return HessianManifold.semicircular()
    if head == "scaled-semicircle":
        var = float(rest)
        return HessianManifold.from_gibbs(PolynomialPotential([0, 0, 0.5 / var]), **solver)
    if head == "gibbs":
        return HessianManifold.from_gibbs(potential_from_expr(rest), **solver)
    raise UsageError(f"diffusion checks need a Gibbs target, got {args.target!r}")


def _need(value, flag):
    if not value:
        raise UsageError(f"{flag} is required")
    return value


def _moments(mu, kmax=8):
    return {str(k): mu.moment(k) for k in range(1, kmax + 1)}


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)


# ---------------------------------------------------------------------------
# commands


def cmd_gibbs(args, cfg):
    src = _need(args.potential or args.expr, "a potential expression")
    u = potential_from_expr(src)
    eq = solve_equilibrium(u, degree=args.degree or cfg.degree, tol=cfg.eq_tol)
    if args.out:
        _write_json(args.out, eq.measure.to_dict())
    if cfg.grid_out:
        eq.measure.write_grid_csv(cfg.grid_out)
    return {"potential": src, "support": [eq.support.a, eq.support.b], "sd_residual": eq.sd_residual,
            "el_residual": eq.el_residual, "moments": _moments(eq.measure),
            "pass": eq.sd_residual <= cfg.sd_tol}


def cmd_moment_map(args, cfg):
    mu = resolve_target(args.target, cfg)
    mm = solve_moment_map(mu, tol=args.tol or cfg.mm_tol, damping=args.damping or cfg.damping,
                          max_iter=args.max_iter or cfg.max_iter, degree=cfg.degree)
    s = mm.source.measure.support
    res = mm.diagnostics["pushforward_residual"]
    if args.out:
        series = Chebyshev.interpolate(mm.du, cfg.degree, domain=[s.a, s.b])
        _write_json(args.out, {"support": [s.a, s.b], "du_coeffs": series.coef.tolist(),
                               "diagnostics": {k: v for k, v in mm.diagnostics.items() if k != "history"}})
    if cfg.grid_out:
        mm.source.measure.write_grid_csv(cfg.grid_out)
    return {"target": args.target, "source_support": [s.a, s.b], "pushforward_residual": res,
            "iterations": int(mm.diagnostics["iterations"]), "pass": res <= 1e-6}


def cmd_stein(args, cfg):
    mu = resolve_target(args.target, cfg)
    n = cfg.tensor_nodes
    if args.wrt:
        V = potential_from_expr(args.wrt)
        A = transported_moment_kernel(mu, V, tol=cfg.mm_tol)
        resid = max(stein_residual(A, mu, V, [0] * k + [1], n) for k in range(5))
        report = {"discrepancy": stein_discrepancy(A, mu, n), "w2": w2_distance(mu, semicircle(), cfg.w2_nodes),
                  "ws_pass": None, "wrt": args.wrt, "stein_residual": resid, "pass": resid <= 1e-5}
    else:
        A = moment_stein_kernel(solve_moment_map(mu, tol=cfg.mm_tol, damping=cfg.damping,
                                                 max_iter=cfg.max_iter, degree=cfg.degree))
        disc = stein_discrepancy(A, mu, n)
        w2 = w2_distance(mu, semicircle(), cfg.w2_nodes)
        ok = w2 * w2 <= disc + cfg.check_tol
        report = {"discrepancy": disc, "w2": w2, "ws_pass": ok, "pass": ok}
    if args.out:
        t, K = A.grid(args.grid or cfg.stein_grid)
        with open(args.out, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "y", "A"])
            for i, xi in enumerate(t):
                for j, yj in enumerate(t):
                    wr.writerow([repr(float(xi)), repr(float(yj)), repr(float(K[i, j]))])
    return {"target": args.target, **report}


def cmd_distance(args, cfg):
    a, b = resolve_target(args.a, cfg), resolve_target(args.b, cfg)
    return {"a": args.a, "b": args.b, "w2": w2_distance(a, b, cfg.w2_nodes), "pass": True}


def cmd_convolve(args, cfg):
    a, b = resolve_target(args.a, cfg), resolve_target(args.b, cfg)
    out = free_convolve(a, b, eps=cfg.conv_eps, grid=cfg.convolve_grid)
    if args.out:
        _write_json(args.out, out.to_dict())
    if cfg.grid_out:
        out.write_grid_csv(cfg.grid_out)
    return {"a": args.a, "b": args.b, "support": [out.support.a, out.support.b], "mean": out.mean,
            "variance": out.variance, "moments": _moments(out, 4), "pass": True}


def _load_covariance(path, arity):
    if not path:
        return ncfree.CovarianceMatrix.identity(arity)
    with open(path) as fh:
        data = json.load(fh)
    rows = data["covariance"] if isinstance(data, dict) else data
    return ncfree.CovarianceMatrix([[Fraction(str(v)) for v in row] for row in rows])


def cmd_nc(args, cfg):
    exprs = args.expr or []
    arity = args.arity
    polys = [parse_ncexpr(e, arity).poly for e in exprs]
    act = args.action
    if act != "stein-quadratic" and not polys:
        raise UsageError("--expr is required")
    ok = True
    if act == "derive":
        idx = [args.index] if args.index else range(1, arity + 1)
        result = {f"d{j}": format_nctensor(ncfree.partial(polys[0], j)) for j in idx}
    elif act == "cyclic":
        idx = [args.index] if args.index else range(1, arity + 1)
        result = {f"D{j}": format_ncpoly(ncfree.cyclic(polys[0], j)) for j in idx}
    elif act == "jacobian":
        J = ncfree.jacobian(polys)
        result = [[format_nctensor(J[i, j]) for j in range(arity)] for i in range(arity)]
    elif act == "moment":
        C = _load_covariance(args.covariance, arity)
        result = {format_ncpoly(p): ncfree.tau(p, C) for p in polys}
    elif act == "sd-check":
        C = _load_covariance(args.covariance, arity)
        r = ncfree.sd_residual_nc(polys, C=C)
        result = {"residual": r}
        ok = r == 0
    else:
        C = _load_covariance(args.covariance, arity)
        result = ncfree.quadratic_stein_check(C, max_degree=args.max_degree or 4)
        ok = result["pass"]
    return {"action": act, "arity": arity, "result": result, "pass": bool(ok)}


def _degree_family(kmax):
    return [[0] * k + [1] for k in range(1, kmax + 1)]


def cmd_check(args, cfg):
    name = args.name
    out = {"check": name}
    if name in ("contraction", "caffarelli", "clt", "stability", "schwinger-dyson", "brascamp-lieb"):
        u = potential_from_expr(_need(args.potential, "--potential"))
    if name in ("contraction", "caffarelli"):
        r = contraction_check(u, "moment_map" if name == "contraction" else "caffarelli", eps=args.eps)
        out.update(r)
        out.pop("mode", None)
    elif name == "clt":
        n_list = tuple(int(v) for v in args.n_list.split(",")) if args.n_list else (2, 4, 8, 16, 32)
        r = clt_experiment(u, n_list, eps=cfg.conv_eps, grid=cfg.convolve_grid)
        # the gate is the slope of log W2; the W2^2 slope is reported alongside
        slope = r["slope_w2"]
        out.update(r)
        out["window"] = list(CLT_WINDOW)
        out["pass"] = slope is not None and bool(CLT_WINDOW[0] <= slope <= CLT_WINDOW[1])
    elif name == "stability":
        r = stability_probe(u, strict=not args.no_strict)
        out.update(r)
        out["pass"] = True
    elif name == "schwinger-dyson":
        eq = solve_equilibrium(u, tol=cfg.eq_tol)
        r = schwinger_dyson_residual(eq.measure, u, args.degree or 8)
        out.update(residual=r, degree=args.degree or 8)
        out["pass"] = r <= cfg.sd_tol
    elif name == "brascamp-lieb":
        nu = solve_equilibrium(u, tol=cfg.eq_tol).measure
        rows = [variance_check("brascamp_lieb", (nu, u), f) for f in _degree_family(args.max_degree or 6)]
        out["results"] = rows
        out["pass"] = all(r["pass"] for r in rows)
    elif name in ("poincare", "weighted-poincare"):
        mu = resolve_target(args.target or "semicircle", cfg)
        if name == "poincare":
            inputs = ("free_poincare", (mu, args.constant))
        else:
            A = moment_stein_kernel(solve_moment_map(mu, tol=cfg.mm_tol))
            inputs = ("weighted_poincare", (mu, A))
        rows = [variance_check(inputs[0], inputs[1], f) for f in _degree_family(args.max_degree or 6)]
        out["results"] = rows
        out["pass"] = all(r["pass"] for r in rows)
    elif name in ("dirichlet", "eigen", "bakry-emery"):
        M = resolve_manifold(args, cfg)
        nodes = cfg.diffusion_nodes
        if name == "eigen":
            r = eigen_residual(M, nodes=nodes)
            out.update(residual=r)
            out["pass"] = r <= 1e-5
        elif name == "dirichlet":
            kmax = args.max_degree or 5
            fam = _degree_family(kmax)
            worst = max(dirichlet_residual(M, f, g, nodes) for f in fam for g in fam)
            stat = max(stationarity(M, f, nodes) for f in fam)
            V = M.u_target
            nu = solve_equilibrium(V, tol=cfg.eq_tol).measure
            lang = max(abs(langevin_form(V, nu, f, nodes) - h1_seminorm(nu, f, nodes)) for f in fam)
            out.update(residual=worst, stationarity=stat, langevin_gap=lang)
            out["pass"] = worst <= 1e-6 and stat <= 1e-7 and lang <= 1e-7
        else:
            r = bakry_emery_probe(M, _degree_family(args.max_degree or 4), grid=args.grid or 32)
            out.update(r)
            out["pass"] = True  # exploratory, never a gate
    elif name == "bochner":
        max_n = args.max_n or 12
        zero = all(chebfree.bochner_residual(chebfree.UPoly.basis(n)).is_zero() for n in range(max_n + 1))
        out.update(max_n=max_n, identically_zero=zero)
        out["pass"] = zero
    elif name == "bakry-emery-ou":
        max_n = args.max_n or 10
        minima = {str(n): chebfree.grid_minimum(chebfree.gamma2_gap(n)) for n in range(1, max_n + 1)}
        e2 = max_n < 2 or chebfree.gamma2_gap(2) == chebfree.UTensor({(0, 0): 4})
        out.update(max_n=max_n, grid_minima=minima, e2_exact=bool(e2))
        out["pass"] = bool(e2) and all(v >= -1e-12 for v in minima.values())
    return out


COMMANDS = {"gibbs": cmd_gibbs, "moment-map": cmd_moment_map, "stein": cmd_stein,
            "distance": cmd_distance, "convolve": cmd_convolve, "nc": cmd_nc, "check": cmd_check}


# ---------------------------------------------------------------------------
# parser


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freestein", description="Free Stein kernels, moment maps and checks.")
    p.add_argument("--config", help="JSON run configuration (default: $FREESTEIN_CONFIG)")
    p.add_argument("--report", help="also write the JSON report to this path")
    p.add_argument("--grid-out", help="write a CSV grid (x, density, cdf) of the resulting measure")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gibbs", help="equilibrium measure of a convex potential")
    g.add_argument("expr", nargs="?", help="potential, e.g. '0.5*x^2'")
    g.add_argument("--potential")
    g.add_argument("--degree", type=_positive_int)
    g.add_argument("--out", help="measure JSON")

    m = sub.add_parser("moment-map", help="free moment map of a centred target")
    m.add_argument("--target", required=True)
    m.add_argument("--tol", type=float)
    m.add_argument("--damping", type=float)
    m.add_argument("--max-iter", type=_positive_int)
    m.add_argument("--out", help="map JSON")

    s = sub.add_parser("stein", help="moment Stein kernel, discrepancy and W2")
    s.add_argument("--target", required=True)
    s.add_argument("--wrt", help="potential V for the transported kernel")
    s.add_argument("--grid", type=_positive_int)
    s.add_argument("--out", help="kernel CSV with columns x, y, A")

    for name, text in (("distance", "W2 distance between two targets"), ("convolve", "free additive convolution")):
        d = sub.add_parser(name, help=text)
        d.add_argument("--a", required=True)
        d.add_argument("--b", required=True)
        if name == "convolve":
            d.add_argument("--out", help="measure JSON")

    n = sub.add_parser("nc", help="non-commutative polynomial calculus")
    n.add_argument("action", choices=NC_ACTIONS)
    n.add_argument("--expr", action="append")
    n.add_argument("--arity", type=_positive_int, default=1)
    n.add_argument("--covariance", help="JSON matrix or {'covariance': matrix}")
    n.add_argument("--index", type=_positive_int)
    n.add_argument("--max-degree", type=_positive_int)

    c = sub.add_parser("check", help="asserted identities and inequalities")
    c.add_argument("name", choices=CHECKS)
    c.add_argument("--potential")
    c.add_argument("--target")
    c.add_argument("--eps", type=float)
    c.add_argument("--n-list")
    c.add_argument("--max-n", type=_positive_int)
    c.add_argument("--max-degree", type=_positive_int)
    c.add_argument("--constant", type=float)
    c.add_argument("--degree", type=_positive_int)
    c.add_argument("--grid", type=_positive_int)
    c.add_argument("--no-strict", action="store_true")
    return p


def run(argv=None, stdout=None):
    """Parse ``argv``, run the command and return ``(exit_code, report)``."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), None
    try:
        cfg = load_config(args.config).replace(grid_out=args.grid_out, out=args.report)
    except ConfigError as exc:
        report = error_report(exc)
        print(dumps(report), file=stdout)
        return 2, report
    try:
        data = COMMANDS[args.command](args, cfg)
        report = build_report(args.command, data)
        code = 0 if report["pass"] else 1
    except UsageError as exc:
        report, code = error_report(exc), 2
    except (FreeSteinError, ArithmeticError, ValueError, OSError, KeyError) as exc:
        report, code = error_report(exc), 1
    text = dumps(report)
    print(text, file=stdout)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text + "\n")
    return code, report


def main(argv=None) -> int:
    return run(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
