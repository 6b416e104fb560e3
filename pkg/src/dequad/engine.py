"""Truncated trapezoidal sums in the transformed variable, with level halving.

A level-``l`` sum uses step ``h0 / 2**l``. Moving to the next level only
evaluates the new (odd-index) nodes; the compensated accumulator of the
previous level is carried over, so ``I_l = I_{l-1}/2 + h_l * sum(new terms)``
holds to rounding. Terms are always accumulated in ascending ``|k|`` order,
negative index first at ties, which makes every result reproducible bit for bit.
"""
from __future__ import annotations

import math

from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from ._backend import kernels
from .transform import Interval, node_block

#: consecutive negligible terms required before a side of the sum is closed
CONFIRM = 3
MAX_INDEX = 10**6


class NonFiniteIntegrand(ArithmeticError):
    def __init__(self, k: int, abscissa: float, value: float):
        self.k = k
        self.abscissa = abscissa
        self.value = value
        super().__init__(
            f"integrand returned {value} at node k={k} (x={abscissa!r}); "
            "it is singular somewhere the transform does not neutralise"
        )


class TruncationOverrun(RuntimeError):
    pass


class NoConvergence(RuntimeError):
    """Refinement stopped at ``max_level``; ``result`` holds the last estimate."""

    def __init__(self, result: "QuadratureResult", tol: float):
        self.result = result
        super().__init__(
            f"no convergence to tol={tol:g} after {result.level} levels "
            f"(value={result.value!r}, est_error={result.est_error:.3e})"
        )


class Integrand:
    """An integrand ``f(x, dist_a, dist_b)``.

    ``dist_a`` and ``dist_b`` are ``x - a`` and ``b - x`` computed without
    cancellation, for integrands singular at an endpoint. With
    ``vectorized=True`` the function receives whole numpy arrays.
    """

    def __init__(self, func: Callable, *, vectorized: bool = False):
        self.func = func
        self.vectorized = vectorized

    def __call__(self, x, dist_a, dist_b) -> np.ndarray:
        if self.vectorized:
            with np.errstate(all="ignore"):
                out = self.func(x, dist_a, dist_b)
            return np.broadcast_to(np.asarray(out, dtype=np.float64), np.shape(x))
        return np.array([self._point(*args) for args in zip(x.tolist(), dist_a.tolist(),
                                                             dist_b.tolist())], dtype=np.float64)

    def _point(self, x, da, db) -> float:
        # Python's math raises where IEEE arithmetic would give inf or nan
        try:
            return self.func(x, da, db)
        except ZeroDivisionError:
            return math.inf
        except (OverflowError, ValueError):
            return math.nan

    @classmethod
    def from_expr(cls, src) -> "Integrand":
        """Integrand from expression text or an AST, run by the compiled evaluator."""
        from .expr import compile_program, parse

        ast = parse(src) if isinstance(src, (str, bytes)) else src
        program = compile_program(ast)
        return cls(lambda x, da, db: program(x), vectorized=True)


def as_integrand(f) -> Integrand:
    return f if isinstance(f, Integrand) else Integrand(f)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    h: float
    level: int
    n_minus: int
    n_plus: int
    evals: int
    est_error: float
    bound: Optional[float] = None
    #: integrand evaluations over all levels (evals counts only the final window)
    calls: int = 0


def ordered_indices(n_minus: int, n_plus: int) -> np.ndarray:
    """Indices ``-n_minus..n_plus`` in summation order: 0, -1, 1, -2, 2, ..."""
    ks = np.arange(-n_minus, n_plus + 1, dtype=np.int64)
    return ks[np.lexsort((ks > 0, np.abs(ks)))]


def terms(f: Integrand, iv: Interval, h: float, ks) -> np.ndarray:
    """Transformed integrand values f(x_k) * weight_k (no step factor).

    Nodes whose weight has underflowed to zero contribute exactly zero and the
    integrand is not called there.
    """
    ks = np.asarray(ks, dtype=np.int64)
    x, w, da, db = node_block(ks, h, iv)
    out = np.zeros(len(ks))
    live = w > 0
    if live.any():
        fx = f(x[live], da[live], db[live])
        bad = ~np.isfinite(fx)
        if bad.any():
            j = int(np.flatnonzero(bad)[0])
            raise NonFiniteIntegrand(int(ks[live][j]), float(x[live][j]), float(fx[j]))
        out[live] = fx * w[live]
    return out


def _sum(values, s=0.0, c=0.0) -> tuple[float, float]:
    return kernels.neumaier_sum(np.ascontiguousarray(values, dtype=np.float64), s, c)


def trapezoid_sum(f, iv, h: float, n_minus: int, n_plus: int) -> float:
    """``h * sum_{k=-n_minus}^{n_plus} f(x_k) w_k``, compensated, in fixed order."""
    if not h > 0:
        raise ValueError(f"step h must be positive, got {h}")
    if n_minus < 0 or n_plus < 0:
        raise ValueError("truncation indices must be non-negative")
    f, iv = as_integrand(f), Interval.coerce(iv)
    ks = ordered_indices(n_minus, n_plus)
    s, c = _sum(terms(f, iv, h, ks))
    return h * (s + c)


def _walk_side(f, iv, h, tol, sign, known, partial):
    """Walk one side outward from k = 1 until CONFIRM negligible terms in a row.

    ``known`` holds term values for k = 1..len(known) (already evaluated);
    anything beyond is evaluated one node at a time. A node whose weight has
    underflowed closes the side without being included. Returns
    ``(last included k, values for k = 1..last, partial, new calls)``.
    """
    vals = list(known)
    calls = 0
    quiet = 0
    k = 0
    while quiet < CONFIRM:
        k += 1
        if k > MAX_INDEX:
            raise TruncationOverrun(
                f"no truncation point within |k| <= {MAX_INDEX} at h={h:g}, tol={tol:g}"
            )
        if k > len(vals):
            idx = sign * k
            if node_block(np.array([idx]), h, iv)[1][0] == 0.0:
                k -= 1
                break
            vals.append(float(terms(f, iv, h, [idx])[0]))
            calls += 1
        term = vals[k - 1]
        partial += h * term
        quiet = quiet + 1 if abs(h * term) < tol * (1.0 + abs(partial)) else 0
    return k, vals[:k], partial, calls


def _scan(f, iv, h, tol):
    if not h > 0:
        raise ValueError(f"step h must be positive, got {h}")
    if not 0 < tol < 1:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    centre = float(terms(f, iv, h, [0])[0])
    n_minus, lower, partial, c1 = _walk_side(f, iv, h, tol, -1, [], h * centre)
    n_plus, upper, _, c2 = _walk_side(f, iv, h, tol, 1, [], partial)
    window = np.array(lower[::-1] + [centre] + upper)
    return n_minus, n_plus, window, 1 + c1 + c2


def choose_truncation(f, iv, h: float, tol: float) -> tuple[int, int]:
    """Per-side truncation indices (N-, N+) for step ``h``.

    Each side is scanned outward from k = 0 and closed once ``CONFIRM``
    consecutive terms satisfy ``|h term_k| < tol (1 + |partial sum|)``, or the
    weight underflows. The returned indices are the last ones included.
    """
    n_minus, n_plus, _, _ = _scan(as_integrand(f), Interval.coerce(iv), h, tol)
    return n_minus, n_plus


@dataclass(frozen=True)
class LevelState:
    level: int
    h: float
    value: float
    n_minus: int
    n_plus: int
    # compensated running sum of the window's terms, without the step factor
    acc: tuple[float, float]
    # term values over the window, index k at position k + n_minus
    window: np.ndarray
    # integrand evaluations so far, all levels included
    calls: int

    @property
    def evals(self) -> int:
        return self.n_minus + self.n_plus + 1


def _ordered(ks, vals):
    ks = np.asarray(ks, dtype=np.int64)
    order = np.lexsort((ks > 0, np.abs(ks)))
    return np.asarray(vals, dtype=np.float64)[order]


def iter_levels(f, iv, h0: float = 1.0, trunc_tol: float = 1e-15) -> Iterator[LevelState]:
    """Yield successive refinement levels indefinitely; the caller decides when to stop.

    Every level picks its own truncation with the :func:`choose_truncation`
    rule at its own step, reusing all terms already computed. Terms of the
    previous level that fall outside the new window are subtracted from the
    carried accumulator, so the running sum always equals the window sum.
    """
    f, iv = as_integrand(f), Interval.coerce(iv)
    n_minus, n_plus, window, calls = _scan(f, iv, h0, trunc_tol)
    ks = np.arange(-n_minus, n_plus + 1)
    acc = _sum(_ordered(ks, window))
    state = LevelState(0, h0, h0 * (acc[0] + acc[1]), n_minus, n_plus, acc, window, calls)
    yield state
    level = 0
    while True:
        level += 1
        h = h0 / 2**level
        old = state
        centre = float(old.window[old.n_minus])
        partial = h * centre
        sides = {}
        added_k, added_v, dropped_k, dropped_v = [], [], [], []
        for sign, n_old in ((-1, old.n_minus), (1, old.n_plus)):
            edge = 2 * n_old
            known = np.empty(edge)
            # even k = 2j come from the previous level
            js = np.arange(1, n_old + 1)
            known[1::2] = old.window[old.n_minus + sign * js]
            odd = np.arange(1, edge, 2, dtype=np.int64)
            known[0::2] = terms(f, iv, h, sign * odd)
            calls += len(odd)
            last, vals, partial, extra = _walk_side(f, iv, h, trunc_tol, sign, known, partial)
            calls += extra
            sides[sign] = (last, vals)
            # odd nodes inside the new window, plus anything past the old edge
            for k in range(1, last + 1):
                if k % 2 or k > edge:
                    added_k.append(sign * k)
                    added_v.append(vals[k - 1])
            for k in range(last + 1, edge + 1):
                if k % 2 == 0:
                    dropped_k.append(sign * k)
                    dropped_v.append(-known[k - 1])
        n_minus, lower = sides[-1]
        n_plus, upper = sides[1]
        window = np.array(lower[::-1] + [centre] + upper)
        delta = np.concatenate([_ordered(added_k, added_v), _ordered(dropped_k, dropped_v)])
        acc = _sum(delta, *old.acc)
        state = LevelState(level, h, h * (acc[0] + acc[1]), n_minus, n_plus, acc, window, calls)
        yield state


def truncation_tol(tol: float) -> float:
    """Per-term truncation threshold used by :func:`integrate` for a target ``tol``.

    At fine steps the tail past the truncation point holds many sub-threshold
    terms, and the threshold is measured against ``1 + |partial|``; the factor
    keeps the dropped tail below ``tol |I|`` even for integrals of size ~1e-4.
    """
    return min(tol, 1e-3) * 1e-5


def integrate(f, iv, tol: float = 1e-10, h0: float = 1.0, max_level: int = 12,
              c: Optional[float] = None) -> QuadratureResult:
    """Integrate ``f`` over ``iv`` by halving h until successive levels agree.

    Stops once ``|I_l - I_{l-1}| <= tol (1 + |I_l|)``; raises
    :class:`NoConvergence` (carrying the last result) if ``max_level`` is hit
    first. With ``c`` given, the result carries the a-priori bound at the final h.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not h0 > 0:
        raise ValueError(f"h0 must be positive, got {h0}")
    if max_level < 1:
        raise ValueError(f"max_level must be >= 1, got {max_level}")
    bound = None
    if c is not None:
        from .bounds import global_bound

        bound = lambda h: global_bound(h, c)  # noqa: E731
    levels = iter_levels(f, iv, h0, truncation_tol(tol))
    prev = next(levels)
    for state in levels:
        diff = abs(state.value - prev.value)
        result = QuadratureResult(
            value=state.value, h=state.h, level=state.level, n_minus=state.n_minus,
            n_plus=state.n_plus, evals=state.evals, est_error=diff, calls=state.calls,
            bound=bound(state.h) if bound else None,
        )
        if diff <= tol * (1.0 + abs(state.value)):
            return result
        if state.level >= max_level:
            raise NoConvergence(result, tol)
        prev = state
    raise AssertionError("unreachable")


def refine_reuse_check(f, iv, h0: float = 1.0, level: int = 1,
                       trunc_tol: float = 1e-15) -> tuple[float, float]:
    """Level-``level`` sum computed (direct) from scratch and (reused) by the recurrence."""
    f, iv = as_integrand(f), Interval.coerce(iv)
    for state in iter_levels(f, iv, h0, trunc_tol):
        if state.level == level:
            break
    direct = trapezoid_sum(f, iv, state.h, state.n_minus, state.n_plus)
    return direct, state.value
