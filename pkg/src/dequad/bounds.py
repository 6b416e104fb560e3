"""A-priori global error bound for the tanh-sinh trapezoidal sum.

For a transformed integrand decaying like ``exp(-c e^{|t|})`` the error of the
truncated sum with step h is bounded by::

    (h^2 / 3) (1 + c) (exp(-4 - c/2) + c/4)

which is the sum of a tail term ``e^-4 (1+c)/3 e^{-c/2} h^2`` (indices with
k h > 8/c) and a core term ``(c + c^2)/12 h^2`` (the remaining indices). The
bound does not depend on the truncation indices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import bisect

from .transform import Interval, map_block


class DomainError(ValueError):
    pass


class FitFailed(RuntimeError):
    pass


def _check(h: float, c: float) -> None:
    if not (h > 0 and math.isfinite(h)):
        raise DomainError(f"step h must be positive and finite, got {h}")
    if not (c > 0 and math.isfinite(c)):
        raise DomainError(f"decay constant c must be positive and finite, got {c}")


def global_bound(h: float, c: float, form: str = "gerror") -> float:
    """Upper bound on |I - I_h^(N)|.

    ``form="literal"`` instead multiplies the tail and core factors together,
    ``h^2 e^-4 (1+c)/3 e^{-c/2} (c+c^2)/12``; it is only there for comparison.
    """
    _check(h, c)
    if form == "gerror":
        return h**2 / 3 * (1 + c) * (math.exp(-4 - c / 2) + c / 4)
    if form == "literal":
        return h**2 * (math.exp(-4) * (1 + c) / 3 * math.exp(-c / 2) * (c + c * c) / 12)
    raise ValueError(f"unknown bound form {form!r}")


def case1_term(h: float, c: float) -> float:
    """Contribution of the indices with k h > 8/c; valid for h <= h0_limit(c)."""
    _check(h, c)
    if h > h0_limit(c):
        raise DomainError(f"h={h} exceeds h0_limit({c})={h0_limit(c)}")
    return math.exp(-4) * (1 + c) / 3 * math.exp(-c / 2) * h**2


def case2_term(h: float, c: float) -> float:
    _check(h, c)
    return h**2 * (c + c * c) / 12


def f_second_derivative_envelope(t: float, c: float) -> float:
    """(c + c^2) e^{2|t| - c e^{|t|}}, the bound on |F''(t)| for F ~ exp(-c e^{|t|})."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    at = abs(t)
    return (c + c * c) * math.exp(2 * at - c * math.exp(at))


def k0_threshold(c: float, h: float) -> int:
    """Smallest k with k h > 8/c."""
    _check(h, c)
    limit = 8 / c
    k = math.floor(limit / h) + 1
    while k * h <= limit:
        k += 1
    while k > 1 and (k - 1) * h > limit:
        k -= 1
    return k


def _step_gap(u: float) -> float:
    # e^{-u/2} - (1 - u/4) with u = c h; negative on (0, u*), positive beyond
    return math.exp(-u / 2) - (1 - u / 4)


def h0_limit(c: float) -> float:
    """Largest step for which exp(-c h/2) <= 1 - c h/4 holds on all of (0, h)."""
    if not (c > 0 and math.isfinite(c)):
        raise DomainError(f"c must be positive, got {c}")
    return bisect(lambda h: _step_gap(c * h), 1e-12 / c, 8 / c, xtol=1e-300, rtol=1e-13,
                  maxiter=200)


@dataclass(frozen=True)
class BoundParams:
    h: float
    c: float
    k0: int
    h0_limit: float

    @classmethod
    def from_hc(cls, h: float, c: float) -> "BoundParams":
        return cls(h, c, k0_threshold(c, h), h0_limit(c))

    @property
    def below_h0(self) -> bool:
        return self.h < self.h0_limit

    def bound(self) -> float:
        return global_bound(self.h, self.c)


class DecayFit(NamedTuple):
    c: float
    residual: float
    slope: float
    n_samples: int


_TAIL = np.arange(3.0, 6.5001, 0.125)
# far tails only: closer in, the polynomial prefactor of phi' biases the fit
DEFAULT_T_SAMPLES = tuple(np.concatenate([-_TAIL[::-1], _TAIL]).tolist())


def fit_decay(F, t_samples: Sequence[float], min_samples: int = 4,
              max_residual: float = 0.5) -> DecayFit:
    """Fit ``ln(-ln|F(t)|) = ln c + |t|`` over samples in the decay regime.

    ``F`` maps an array of t to transformed integrand values. Only samples
    with 1e-300 < |F| < 1e-2 are used. The slope is held at 1; ``slope``
    reports the free least-squares slope for diagnostics and ``residual`` the
    RMS deviation from the constrained fit.
    """
    t = np.asarray(t_samples, dtype=np.float64)
    with np.errstate(all="ignore"):
        mag = np.abs(np.asarray(F(t), dtype=np.float64))
    ok = np.isfinite(mag) & (mag > 1e-300) & (mag < 1e-2)
    if ok.sum() < min_samples:
        raise FitFailed(f"only {int(ok.sum())} samples in the decay regime, need {min_samples}")
    at = np.abs(t[ok])
    y = np.log(-np.log(mag[ok]))
    log_c = float(np.mean(y - at))
    residual = float(np.sqrt(np.mean((y - at - log_c) ** 2)))
    slope = float(np.polyfit(at, y, 1)[0]) if np.ptp(at) > 0 else float("nan")
    if residual > max_residual:
        raise FitFailed(
            f"decay is not double exponential: residual {residual:.3f} > {max_residual}"
        )
    return DecayFit(math.exp(log_c), residual, slope, int(ok.sum()))


def transformed(f, iv):
    """t -> f(phi(t)) phi'(t) on ``iv`` (including the (b-a)/2 Jacobian)."""
    from .engine import as_integrand

    f, iv = as_integrand(f), Interval.coerce(iv)

    def F(t):
        x, w, da, db = map_block(np.atleast_1d(t), iv)
        out = np.zeros(len(x))
        live = w > 0
        out[live] = f(x[live], da[live], db[live]) * w[live]
        return out

    return F


def estimate_c_fit(f, iv, t_samples: Sequence[float] = DEFAULT_T_SAMPLES) -> DecayFit:
    return fit_decay(transformed(f, iv), t_samples)


def estimate_c(f, iv, t_samples: Sequence[float] = DEFAULT_T_SAMPLES) -> float:
    """Decay constant c of the transformed integrand, from a log-log fit of its tails."""
    return estimate_c_fit(f, iv, t_samples).c
