"""``dequad`` command line: integrate expressions, evaluate the error bound,
run convergence studies and reproduce the I1 experiment.

Exit codes: 0 success, 2 no convergence (best value still printed),
3 expression parse error, 4 domain or usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import registry
from .bounds import (DomainError, FitFailed, case1_term, case2_term, estimate_c_fit,
                     global_bound, h0_limit, k0_threshold)
from .engine import (Integrand, NoConvergence, NonFiniteIntegrand, TruncationOverrun,
                     integrate, iter_levels)
from .expr import ParseError
from .transform import Interval

EXIT_OK, EXIT_NOCONV, EXIT_PARSE, EXIT_DOMAIN = 0, 2, 3, 4

REFERENCE_H, REFERENCE_C = 1 / 129, 2.0
TABLE1_TOL = 1e-8
# rows outside this error band are dominated by pre-asymptotics or round-off
ORDER_FIT_BAND = (1e-12, 1e-2)
CONVERGE_TRUNC_TOL = 1e-17


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def fmt_num(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, str)):
        return str(v)
    return f"{v:.4e}"


def write_records(records: list[dict], fmt: str, out, title: Optional[str] = None) -> None:
    if fmt == "json":
        out.write(json.dumps(records[0] if len(records) == 1 else records) + "\n")
    elif fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(list(records[0]))
        for rec in records:
            writer.writerow(["" if v is None else v for v in rec.values()])
    else:
        if title:
            out.write(title + "\n")
        for rec in records:
            width = max(len(k) for k in rec)
            for key, value in rec.items():
                out.write(f"{key:<{width}} = {fmt_num(value)}\n")


def write_table(rows: list[dict], out) -> None:
    keys = list(rows[0])
    cells = [[fmt_num(r[k]) for k in keys] for r in rows]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    out.write("  ".join(k.rjust(w) for k, w in zip(keys, widths)) + "\n")
    for c in cells:
        out.write("  ".join(v.rjust(w) for v, w in zip(c, widths)) + "\n")


def fit_order(rows: Sequence[dict], band=ORDER_FIT_BAND) -> Optional[float]:
    """Least-squares slope of log|error| against log h over rows inside ``band``."""
    pts = [(r["h"], r["abs_error"]) for r in rows
           if r.get("abs_error") is not None and band[0] <= r["abs_error"] <= band[1]]
    if len(pts) < 2 or len({h for h, _ in pts}) < 2:
        return None
    h, e = np.log(np.array(pts)).T
    return float(np.polyfit(h, e, 1)[0])


def _resolve(target: str, a: Optional[float], b: Optional[float]):
    """(label, integrand, interval, exact-or-None) for a registry name or expression."""
    if target in registry.REGISTRY:
        ref = registry.REGISTRY[target]
        return ref.name, ref.integrand(), ref.interval, ref.exact_value
    if a is None or b is None:
        raise UsageError(f"{target!r} is not a registry entry; give --a and --b")
    return target, Integrand.from_expr(target), Interval(a, b), None


def cmd_integrate(args, out) -> int:
    f = Integrand.from_expr(args.expr)
    iv = Interval(args.a, args.b)
    c, c_source = args.c, "given"
    if c is None:
        try:
            c, c_source = estimate_c_fit(f, iv).c, "estimated"
        except (FitFailed, NonFiniteIntegrand):
            c_source = None
    status = EXIT_OK
    try:
        res = integrate(f, iv, tol=args.tol, h0=args.h0, max_level=args.max_level, c=c)
    except NoConvergence as exc:
        print(f"warning: {exc}", file=sys.stderr)
        res, status = exc.result, EXIT_NOCONV
    rec = {
        "value": res.value, "evals": res.evals, "est_error": res.est_error,
        "bound": res.bound, "c": c, "c_source": c_source, "h": res.h, "level": res.level,
        "n_minus": res.n_minus, "n_plus": res.n_plus, "calls": res.calls,
        "converged": status == EXIT_OK,
    }
    write_records([rec], args.format, out)
    return status


def bound_report(h: float, c: float, literal: bool = False) -> dict:
    limit = h0_limit(c)
    rec = {
        "global_bound": global_bound(h, c),
        "case1_term": case1_term(h, c) if h <= limit else None,
        "case2_term": case2_term(h, c),
        "k0_threshold": k0_threshold(c, h),
        "h0_limit": limit,
        "h_below_h0": h < limit,
    }
    if literal:
        rec["literal_product_form"] = global_bound(h, c, form="literal")
    return rec


def cmd_bound(args, out) -> int:
    rec = bound_report(args.h, args.c, args.literal)
    if args.format == "text":
        out.write(f"GError = {fmt_num(rec['global_bound'])}\n")
    write_records([rec], args.format, out)
    return EXIT_OK


def converge_rows(f, iv, levels: int, exact: Optional[float], c: Optional[float],
                  h0: float = 1.0) -> list[dict]:
    rows = []
    for state in iter_levels(f, iv, h0, CONVERGE_TRUNC_TOL):
        rows.append({
            "level": state.level,
            "h": state.h,
            "evals": state.evals,
            "value": state.value,
            "abs_error": abs(state.value - exact) if exact is not None else None,
            "bound": global_bound(state.h, c) if c is not None else None,
        })
        if state.level + 1 >= levels:
            break
    return rows


def pooled_rows(f, iv, levels: int, exact: float, h0s=(1.0, 2**-0.25, 2**-0.5, 2**-0.75)):
    """Rows from several interleaved halving ladders, sorted by decreasing h.

    A single ladder of a double-exponential rule usually leaves only one or two
    levels between the pre-asymptotic and round-off regimes; interleaving
    ladders started at quarter-octave offsets gives the order fit more points.
    """
    rows = [r for h0 in h0s for r in converge_rows(f, iv, levels, exact, None, h0)]
    return sorted(rows, key=lambda r: -r["h"])


def cmd_converge(args, out) -> int:
    if not 2 <= args.levels <= 15:
        raise UsageError(f"--levels must lie in [2, 15], got {args.levels}")
    label, f, iv, exact = _resolve(args.target, args.a, args.b)
    rows = converge_rows(f, iv, args.levels, exact, args.c, args.h0)
    order = fit_order(rows)
    if args.format == "json":
        out.write(json.dumps({"integral": label, "rows": rows, "order": order}) + "\n")
    elif args.format == "csv":
        write_records(rows, "csv", out)
    else:
        out.write(f"convergence study: {label} on ({iv.a!r}, {iv.b!r})\n")
        write_table(rows, out)
        if exact is not None:
            note = f"{order:.2f}" if order is not None else "n/a (fewer than 2 rows in band)"
            out.write(f"fitted order p = {note}  (rows with error in "
                      f"[{ORDER_FIT_BAND[0]:g}, {ORDER_FIT_BAND[1]:g}])\n")
    return EXIT_OK


def table1_record(tol: float = TABLE1_TOL) -> tuple[dict, Optional[NoConvergence]]:
    ref = registry.get("I1")
    failure = None
    try:
        res = integrate(Integrand.from_expr(ref.expr), ref.interval, tol=tol)
    except NoConvergence as exc:
        res, failure = exc.result, exc
    rec = {
        "integral": ref.name,
        "n_evals": res.evals,
        "abs_error": abs(res.value - ref.exact_value),
        "ubge": global_bound(REFERENCE_H, REFERENCE_C),
    }
    return {**rec, "_calls": res.calls, "_value": res.value}, failure


def cmd_table1(args, out) -> int:
    rec, failure = table1_record()
    public = {k: v for k, v in rec.items() if not k.startswith("_")}
    if args.format == "json":
        out.write(json.dumps(public) + "\n")
    elif args.format == "csv":
        write_records([public], "csv", out)
    else:
        out.write(f"I1 = int_0^1 exp(20(x-1)) sin(256x) dx, tol {TABLE1_TOL:g}, "
                  f"ubge at h = 1/129, c = 2\n")
        write_table([{"INTEGRAL": public["integral"], "N": public["n_evals"],
                      "abs. error": public["abs_error"], "ubge": public["ubge"]}], out)
        out.write(f"integrand calls over all levels: {rec['_calls']}\n")
    if failure is not None:
        print(f"warning: {failure}", file=sys.stderr)
        return EXIT_NOCONV
    return EXIT_OK


def decay_samples(c: float, t_max: float, n: int = 201) -> list[dict]:
    half = (n - 1) // 2
    rows = []
    for i in range(n):
        t = t_max * (i - half) / half
        rows.append({"t": t, "value": math.exp(-c * math.exp(abs(t)))})
    return rows


def cmd_sample_decay(args, out) -> int:
    if not (args.c > 0 and math.isfinite(args.c)):
        raise DomainError(f"c must be positive, got {args.c}")
    if not (args.t_max > 0 and math.isfinite(args.t_max)):
        raise DomainError(f"t-max must be positive, got {args.t_max}")
    rows = decay_samples(args.c, args.t_max)
    if args.format == "text":
        write_table(rows, out)
    else:
        write_records(rows, args.format, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="dequad",
        description="Tanh-sinh quadrature on finite intervals with an a-priori error bound.",
        epilog="Expressions use x, pi, e, + - * / ^ and sin cos tan exp log sqrt sinh "
               "cosh tanh abs. '^' is right-associative and binds tighter than unary "
               "minus (-x^2 is -(x^2)); log is natural; no implicit multiplication.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--format", choices=("text", "json", "csv"), default="text")

    p = sub.add_parser("integrate", help="integrate an expression over (a, b)")
    p.add_argument("--expr", required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--h0", type=float, default=1.0)
    p.add_argument("--max-level", type=int, default=12)
    p.add_argument("--c", type=float, default=None, help="decay constant for the error bound")
    common(p)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("bound", help="evaluate the a-priori error bound")
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--literal", action="store_true",
                   help="also print the all-product reading of the bound, for comparison")
    common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("converge", help="error and bound per refinement level")
    p.add_argument("target", help="registry name (" + ", ".join(registry.REGISTRY) + ") or expression")
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--h0", type=float, default=1.0)
    p.add_argument("--c", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("table1", help="reproduce the I1 experiment")
    common(p)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("sample-decay", help="sample exp(-c e^|t|) on [-t_max, t_max]")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--t-max", type=float, required=True)
    common(p)
    p.set_defaults(func=cmd_sample_decay)
    return parser


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if os.environ.get("DEQUAD_TEST_MODE"):
            registry.verify_registry()
        return args.func(args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_DOMAIN
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DomainError, ValueError, NonFiniteIntegrand, TruncationOverrun) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def run(argv: Sequence[str]) -> tuple[int, str]:
    """Run the CLI in-process and capture standard output."""
    buf = io.StringIO()
    code = main(argv, buf)
    return code, buf.getvalue()


if __name__ == "__main__":
    sys.exit(main())
