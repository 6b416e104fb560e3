# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: tanh-sinh node blocks, ordered compensated summation,
and a stack machine for compiled integrand expressions.

Every function here has a twin in ``_pykernels`` with the same signature and
semantics; ``dequad._backend`` picks one at import time.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport (sinh, cosh, tanh, exp, log, sqrt, sin, cos, tan,
                        fabs, pow, NAN)

cnp.import_array()

cdef double HALF_PI = 1.5707963267948966
cdef double X_MAX = 0.99999999999999989  # largest double below 1
cdef double T_SATURATE = 20.0

# opcodes; keep in sync with _pykernels.OPCODES
cdef enum:
    OP_X = 0
    OP_CONST = 1
    OP_NEG = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_MUL = 5
    OP_DIV = 6
    OP_POW = 7
    OP_SIN = 10
    OP_COS = 11
    OP_TAN = 12
    OP_EXP = 13
    OP_LOG = 14
    OP_SQRT = 15
    OP_SINH = 16
    OP_COSH = 17
    OP_TANH = 18
    OP_ABS = 19

OPCODES = {
    "x": OP_X, "const": OP_CONST, "neg": OP_NEG,
    "+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW,
    "sin": OP_SIN, "cos": OP_COS, "tan": OP_TAN, "exp": OP_EXP,
    "log": OP_LOG, "sqrt": OP_SQRT, "sinh": OP_SINH, "cosh": OP_COSH,
    "tanh": OP_TANH, "abs": OP_ABS,
}


def tanh_sinh_nodes(const double[::1] ts):
    """Abscissae, weights phi'(t), and stable 1 - x, 1 + x at each t."""
    cdef Py_ssize_t n = ts.shape[0], i
    cdef cnp.ndarray[double, ndim=1] xs = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] ws = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] omx = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] opx = np.empty(n)
    cdef double t, at, u, e, d, x, w, near, far
    for i in range(n):
        t = ts[i]
        at = fabs(t)
        if at > T_SATURATE:
            x = X_MAX
            w = 0.0
            near = 0.0
            far = 2.0
        else:
            u = HALF_PI * sinh(at)
            e = exp(-2.0 * u)
            d = 1.0 + e
            x = tanh(u)
            if x > X_MAX:
                x = X_MAX
            w = HALF_PI * cosh(at) * (4.0 * e / (d * d))
            near = 2.0 * e / d
            far = 2.0 / d
        ws[i] = w
        if t < 0:
            xs[i] = -x
            omx[i] = far
            opx[i] = near
        else:
            xs[i] = x
            omx[i] = near
            opx[i] = far
    return xs, ws, omx, opx


def neumaier_sum(const double[::1] values, double s=0.0, double c=0.0):
    """Compensated running sum in the given order; returns the (sum, carry) pair."""
    cdef Py_ssize_t i, n = values.shape[0]
    cdef double v, tot
    for i in range(n):
        v = values[i]
        tot = s + v
        if fabs(s) >= fabs(v):
            c += (s - tot) + v
        else:
            c += (v - tot) + s
        s = tot
    return s, c


def run_program(const int[::1] code, const double[::1] consts, const double[::1] xs):
    """Evaluate a postfix program at every entry of ``xs``."""
    cdef Py_ssize_t n = xs.shape[0], m = code.shape[0], i, pc, sp
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef double[::1] stack = np.empty(m + 1)
    cdef double x, r
    cdef int op
    for i in range(n):
        x = xs[i]
        sp = 0
        pc = 0
        while pc < m:
            op = code[pc]
            if op == OP_X:
                stack[sp] = x
                sp += 1
            elif op == OP_CONST:
                pc += 1
                stack[sp] = consts[code[pc]]
                sp += 1
            elif op == OP_NEG:
                stack[sp - 1] = -stack[sp - 1]
            elif op <= OP_POW:
                sp -= 1
                r = stack[sp]
                if op == OP_ADD:
                    stack[sp - 1] = stack[sp - 1] + r
                elif op == OP_SUB:
                    stack[sp - 1] = stack[sp - 1] - r
                elif op == OP_MUL:
                    stack[sp - 1] = stack[sp - 1] * r
                elif op == OP_DIV:
                    stack[sp - 1] = stack[sp - 1] / r
                else:
                    stack[sp - 1] = pow(stack[sp - 1], r)
            else:
                r = stack[sp - 1]
                if op == OP_SIN:
                    r = sin(r)
                elif op == OP_COS:
                    r = cos(r)
                elif op == OP_TAN:
                    r = tan(r)
                elif op == OP_EXP:
                    r = exp(r)
                elif op == OP_LOG:
                    r = log(r) if r >= 0.0 else NAN
                elif op == OP_SQRT:
                    r = sqrt(r) if r >= 0.0 else NAN
                elif op == OP_SINH:
                    r = sinh(r)
                elif op == OP_COSH:
                    r = cosh(r)
                elif op == OP_TANH:
                    r = tanh(r)
                else:
                    r = fabs(r)
                stack[sp - 1] = r
            pc += 1
        out[i] = stack[0]
    return out
