"""Reference integrals with closed-form values, used by the CLI and the test suite."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .engine import Integrand
from .expr import parse
from .transform import Interval


@dataclass(frozen=True)
class ReferenceIntegral:
    name: str
    expr: str
    interval: Interval
    #: decimal string, at least 30 correct digits
    exact: str
    c_nominal: Optional[float] = None
    #: vectorised f(x, dist_a, dist_b) that avoids cancellation at singular endpoints
    stable: Optional[Callable] = None

    @property
    def exact_value(self) -> float:
        return float(self.exact)

    def integrand(self) -> Integrand:
        if self.stable is not None:
            return Integrand(self.stable, vectorized=True)
        return Integrand.from_expr(self.expr)


REGISTRY = {
    ref.name: ref
    for ref in (
        ReferenceIntegral("const2", "1", Interval(-1, 1), "2", c_nominal=math.pi / 2),
        ReferenceIntegral(
            "invsqrt", "1/sqrt(1-x^2)", Interval(-1, 1),
            "3.141592653589793238462643383279502884197",
            c_nominal=math.pi / 4,
            stable=lambda x, da, db: 1 / np.sqrt(da * db),
        ),
        ReferenceIntegral(
            "sqrt_sing", "sqrt(1-x^2)", Interval(-1, 1),
            "1.570796326794896619231321691639751442099",
            c_nominal=3 * math.pi / 4,
            stable=lambda x, da, db: np.sqrt(da * db),
        ),
        ReferenceIntegral(
            "log_sing", "log(1/x)", Interval(0, 1), "1",
            c_nominal=math.pi / 2,
            stable=lambda x, da, db: -np.log(da),
        ),
        ReferenceIntegral(
            "I1", "exp(20*(x-1))*sin(256*x)", Interval(0, 1),
            "-0.0001485944796789243053690507225369582341923",
            c_nominal=math.pi / 2,
        ),
    )
}


def get(name: str) -> ReferenceIntegral:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown reference integral {name!r}; known: {', '.join(REGISTRY)}") from None


def _mp_eval(ast, x, mp):
    from . import expr as E

    if isinstance(ast, E.Number):
        return mp.mpf(ast.value)
    if isinstance(ast, E.Variable):
        return x
    if isinstance(ast, E.Constant):
        return mp.pi if ast.name == "pi" else mp.e
    if isinstance(ast, E.Unary):
        return -_mp_eval(ast.operand, x, mp)
    if isinstance(ast, E.Binary):
        left, right = _mp_eval(ast.left, x, mp), _mp_eval(ast.right, x, mp)
        if ast.op == "+":
            return left + right
        if ast.op == "-":
            return left - right
        if ast.op == "*":
            return left * right
        if ast.op == "/":
            return left / right
        return mp.power(left, right)
    fn = {"log": mp.ln, "abs": mp.fabs}.get(ast.name) or getattr(mp, ast.name)
    return fn(_mp_eval(ast.arg, x, mp))


def mp_function(src: str, mp):
    """Multiprecision callable for expression text (shares only the parser)."""
    ast = parse(src)
    return lambda x: _mp_eval(ast, x, mp)


@functools.lru_cache(maxsize=None)
def verify_registry(rel_tol: float = 1e-25) -> dict[str, float]:
    """Check every stored exact value against multiprecision quadrature.

    Returns the relative discrepancy per entry; raises AssertionError when any
    exceeds ``rel_tol``. Requires mpmath.
    """
    import mpmath

    report = {}
    with mpmath.workdps(60):
        for ref in REGISTRY.values():
            f = mp_function(ref.expr, mpmath)
            a, b = ref.interval.a, ref.interval.b
            # enough panels to resolve any oscillation in the registry
            pts = mpmath.linspace(a, b, 65)
            value = mpmath.quad(f, pts)
            exact = mpmath.mpf(ref.exact)
            rel = abs(value - exact) / abs(exact)
            report[ref.name] = float(rel)
            if rel > rel_tol:
                raise AssertionError(
                    f"registry entry {ref.name}: exact {ref.exact} disagrees with "
                    f"quadrature {mpmath.nstr(value, 35)} (relative {float(rel):.2e})"
                )
    return report
