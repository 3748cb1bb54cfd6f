"""Exponential integral for the small-cell ergodic rate.

E1(x) = -Ei(-x) for x > 0 is computed by its power series for x <= 1 and by
a modified-Lentz continued fraction for x > 1.  The continued fraction
yields e^x E1(x) directly, which keeps e^(1/w) Ei(-1/w) finite for tiny w.
"""

from __future__ import annotations

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061
_EPS = 1e-16
_MAX_TERMS = 500
_TINY = 1e-300


def _e1_series(x):
    total = 0.0
    term = 1.0
    for n in range(1, _MAX_TERMS):
        term *= -x / n
        delta = -term / n
        total += delta
        if abs(delta) < _EPS * abs(total):
            break
    return -EULER_GAMMA - math.log(x) + total


def _scaled_e1_cf(x):
    # e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
    b = x + 1.0
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"continued fraction for E1({x}) did not converge")


def _scaled_e1_scalar(x):
    if x <= 0:
        raise ValueError("E1 is defined here for positive arguments only")
    if x <= 1.0:
        return math.exp(x) * _e1_series(x)
    return _scaled_e1_cf(x)


def _e1_scalar(x):
    if x <= 0:
        raise ValueError("E1 is defined here for positive arguments only")
    if x <= 1.0:
        return _e1_series(x)
    return math.exp(-x) * _scaled_e1_cf(x)


def exp1(x):
    """E1(x) for x > 0."""
    return _apply(_e1_scalar, x)


def scaled_exp1(x):
    """e^x E1(x) for x > 0, without overflow."""
    return _apply(_scaled_e1_scalar, x)


def ei(x):
    """Ei(x) for negative real x, i.e. -E1(-x)."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr >= 0):
        raise ValueError("ei is implemented for negative arguments only")
    return -exp1(-arr)


def rayleigh_rate(snr):
    """E[log2(1 + snr X)] for X ~ Exp(1), i.e. -log2(e) e^(1/snr) Ei(-1/snr).

    ``snr = 0`` gives 0.
    """
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0) or not np.all(np.isfinite(snr)):
        raise ValueError("effective SNR must be finite and nonnegative")
    out = np.zeros_like(snr)
    pos = snr > 0
    if np.any(pos):
        out[pos] = math.log2(math.e) * scaled_exp1(1.0 / snr[pos])
    return out if out.ndim else float(out)


def _apply(fn, x):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return fn(float(arr))
    return np.array([fn(float(v)) for v in arr.ravel()]).reshape(arr.shape)
