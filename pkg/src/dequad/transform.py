"""The tanh-sinh change of variables x = tanh((pi/2) sinh t) on (-1, 1).

All quantities near the endpoints are computed from e^{-2|u|}, u = (pi/2) sinh t,
so that 1 - x, 1 + x and the weight keep full relative precision long after x
itself has rounded to the nearest double below 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._backend import kernels

HALF_PI = math.pi / 2
#: largest double strictly below 1; phi saturates here instead of at 1.0
X_MAX = math.nextafter(1.0, 0.0)
#: beyond this |t| every node weight is exactly zero in binary64
T_SATURATE = 20.0


@dataclass(frozen=True)
class Interval:
    """Finite integration interval ``(a, b)`` with ``a < b``."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError(f"interval endpoints must be finite, got ({a}, {b})")
        if not a < b:
            raise ValueError(f"interval requires a < b, got ({a}, {b})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def half_width(self) -> float:
        return (self.b - self.a) / 2

    @classmethod
    def coerce(cls, iv) -> "Interval":
        if isinstance(iv, Interval):
            return iv
        a, b = iv
        return cls(a, b)


@dataclass(frozen=True)
class TransformNode:
    """One node of the rule on (-1, 1).

    ``w`` is phi'(t) without the step factor h. ``one_minus_x`` and
    ``one_plus_x`` are the stable endpoint distances; their product is
    ``one_minus_x2``.
    """

    k: int
    t: float
    x: float
    w: float
    one_minus_x2: float
    one_minus_x: float
    one_plus_x: float


class MappedNode(NamedTuple):
    abscissa: float
    weight: float
    dist_a: float
    dist_b: float


def _parts(at: float) -> tuple[float, float, float, float]:
    # (tanh u, phi'(|t|), 2e/(1+e), 2/(1+e)) with e = exp(-2u), u = (pi/2) sinh|t|
    if at > T_SATURATE:
        return X_MAX, 0.0, 0.0, 2.0
    u = HALF_PI * math.sinh(at)
    e = math.exp(-2.0 * u)
    d = 1.0 + e
    x = min(math.tanh(u), X_MAX)
    w = HALF_PI * math.cosh(at) * (4.0 * e / (d * d))
    return x, w, 2.0 * e / d, 2.0 / d


def phi(t: float) -> float:
    """tanh((pi/2) sinh t), odd in t and confined to the open interval (-1, 1)."""
    x = _parts(abs(t))[0]
    return -x if t < 0 else x


def phi_prime(t: float) -> float:
    """(pi/2) cosh t / cosh^2((pi/2) sinh t), via sech^2 so it underflows instead of overflowing."""
    return _parts(abs(t))[1]


def node(k: int, h: float) -> TransformNode:
    if not h > 0:
        raise ValueError(f"step h must be positive, got {h}")
    t = k * h
    x, w, near, far = _parts(abs(t))
    if t < 0:
        x, omx, opx = -x, far, near
    else:
        omx, opx = near, far
    return TransformNode(k=k, t=t, x=x, w=w, one_minus_x2=near * far,
                         one_minus_x=omx, one_plus_x=opx)


def map_affine(nd: TransformNode, iv: Interval) -> MappedNode:
    """Carry a node from (-1, 1) onto ``iv``.

    The abscissa is anchored at the nearer endpoint (``a + dist_a`` or
    ``b - dist_b``), which equals the midpoint form mathematically but keeps
    abscissae distinct from the endpoints where the midpoint form rounds onto them.
    """
    iv = Interval.coerce(iv)
    half = iv.half_width
    dist_a = half * nd.one_plus_x
    dist_b = half * nd.one_minus_x
    abscissa = iv.a + dist_a if nd.x <= 0 else iv.b - dist_b
    return MappedNode(abscissa, half * nd.w, dist_a, dist_b)


def node_block(ks, h: float, iv: Interval):
    """Vectorised :func:`node` + :func:`map_affine` for an index array.

    Returns ``(abscissa, weight, dist_a, dist_b)`` arrays, weights including
    the (b - a)/2 Jacobian but not the step h.
    """
    return map_block(np.asarray(ks, dtype=np.int64) * float(h), iv)


def map_block(ts, iv: Interval):
    """:func:`node_block` at arbitrary transform-plane points ``ts``."""
    ts = np.ascontiguousarray(ts, dtype=np.float64)
    xs, ws, omx, opx = kernels.tanh_sinh_nodes(ts)
    half = iv.half_width
    dist_a = half * np.asarray(opx)
    dist_b = half * np.asarray(omx)
    xs = np.asarray(xs)
    abscissa = np.where(xs <= 0, iv.a + dist_a, iv.b - dist_b)
    return abscissa, half * np.asarray(ws), dist_a, dist_b
