"""Exponential integral and Laguerre functions of non-integer order.

Both are power series with all-positive (or eventually same-sign) terms in the
ranges used here, summed with ``math.fsum``.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError, RangeError

EULER_GAMMA = 0.57721566490153286060651209008240243

# Ei: power series below, asymptotic series above.  At y = 40 the smallest
# asymptotic term is ~40!/40^40 ~ 7e-17, so both branches reach double precision.
EI_SWITCH = 40.0
EI_MAX = 709.0
LAGUERRE_YMAX = 400.0
LAGUERRE_NUMAX = 50.0
_MAX_TERMS = 5000


def _ei_series(y: float) -> float:
    term = 1.0
    running = 0.0
    terms = []
    for k in range(1, _MAX_TERMS):
        term *= y / k
        terms.append(term / k)
        running += terms[-1]
        if k > y and terms[-1] < 1e-18 * running:
            break
    return math.fsum(terms) + EULER_GAMMA + math.log(y)


def _ei_asymptotic(y: float) -> float:
    term = 1.0
    terms = [1.0]
    for k in range(1, _MAX_TERMS):
        nxt = term * k / y
        if nxt > term or nxt < 1e-18:
            break
        term = nxt
        terms.append(term)
    return math.exp(y) / y * math.fsum(terms)


def expint_ei(y: float) -> float:
    """Exponential integral ``Ei(y) = PV int_{-inf}^{y} e^u/u du`` for ``y > 0``.

    Relative accuracy ~1e-15 on ``[1e-6, 700]``.
    """
    y = float(y)
    if not y > 0.0:
        raise ParameterError(f"Ei is implemented for y > 0, got {y!r}")
    if y > EI_MAX:
        raise RangeError(f"Ei({y}) overflows double precision")
    if y <= EI_SWITCH:
        return _ei_series(y)
    return _ei_asymptotic(y)


def ei_minus_log(y: float) -> float:
    """``Ei(y) - ln(y) - gamma_E``, summed directly as ``sum_k y^k/(k k!)`` below the switch."""
    y = float(y)
    if not y > 0.0:
        raise ParameterError(f"y must be > 0, got {y!r}")
    if y <= EI_SWITCH:
        term = 1.0
        running = 0.0
        terms = []
        for k in range(1, _MAX_TERMS):
            term *= y / k
            terms.append(term / k)
            running += terms[-1]
            if k > y and terms[-1] < 1e-18 * running:
                break
        return math.fsum(terms)
    return expint_ei(y) - math.log(y) - EULER_GAMMA


def laguerre_eval(nu: float, y: float) -> float:
    """Laguerre function ``L_nu(y) = 1F1(-nu; 1; y)``.

    Sums ``sum_k (-nu)_k y^k / (k!)^2``; the series terminates for integer ``nu``.
    """
    nu = float(nu)
    y = float(y)
    if y < 0.0:
        raise ParameterError(f"y must be >= 0, got {y!r}")
    if not 0.0 <= nu <= LAGUERRE_NUMAX:
        raise ParameterError(f"nu must lie in [0, {LAGUERRE_NUMAX}], got {nu!r}")
    if y > LAGUERRE_YMAX:
        raise RangeError(f"Laguerre series not evaluated for y > {LAGUERRE_YMAX}")
    term = 1.0
    terms = [1.0]
    scale = 1.0
    for k in range(1, _MAX_TERMS):
        term *= (k - 1 - nu) * y / (k * k)
        if term == 0.0:
            break
        terms.append(term)
        scale = max(scale, abs(term))
        if k > y and k > nu and abs(term) < 1e-18 * scale:
            break
    else:
        raise RangeError(f"Laguerre series did not converge at nu={nu}, y={y}")
    return math.fsum(terms)


def laguerre_eval_array(nu: float, y) -> np.ndarray:
    """Vectorised :func:`laguerre_eval` over ``y``."""
    y = np.asarray(y, dtype=float)
    return np.array([laguerre_eval(nu, v) for v in y.ravel()]).reshape(y.shape)


def expint_ei_array(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.array([expint_ei(v) for v in y.ravel()]).reshape(y.shape)
