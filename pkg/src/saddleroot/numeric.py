"""Small numerical toolkit: finite differences and scalar maximization."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Callable

from .errors import BracketFailure, EvaluationFailure, NonConvergence

_EPS = sys.float_info.epsilon
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class NumericKitConfig:
    """Tuning knobs for :func:`fd_derivative` and :func:`maximize_scalar`.

    ``opt_bracket`` is a pair of multipliers applied to a reference point
    (the MLE of the interest parameter) when a bracket is not given
    explicitly.
    """

    fd_step_scale: float = _EPS ** (1.0 / 3.0)
    fd_step2_scale: float = _EPS ** (1.0 / 4.0)
    # extrapolation removes the h**2 term, which moves the optimal step up
    fd_rich_scale: float = _EPS ** (1.0 / 5.0)
    fd_rich2_scale: float = _EPS ** (1.0 / 6.0)
    opt_tol: float = 1e-10
    opt_bracket: tuple[float, float] = (1.0 / 50.0, 50.0)
    max_iter: int = 200
    max_expand: int = 4

    def __post_init__(self):
        lo, hi = self.opt_bracket
        steps = (self.fd_step_scale, self.fd_step2_scale, self.fd_rich_scale, self.fd_rich2_scale)
        if min(*steps, self.opt_tol, lo, hi) <= 0:
            raise ValueError("numeric kit parameters must be positive")
        if not lo < hi:
            raise ValueError("opt_bracket must satisfy low < high")
        if self.max_iter < 1 or self.max_expand < 0:
            raise ValueError("iteration budgets must be positive")


DEFAULT_KIT = NumericKitConfig()


def _call(f: Callable[[float], float], x: float) -> float:
    try:
        v = float(f(x))
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationFailure(f"function evaluation failed at x={x!r}: {exc}") from exc
    if not math.isfinite(v):
        raise EvaluationFailure(f"non-finite function value at x={x!r}")
    return v


def _central(f, x, h, order, fx=None):
    if order == 1:
        return (_call(f, x + h) - _call(f, x - h)) / (2.0 * h)
    if fx is None:
        fx = _call(f, x)
    return (_call(f, x + h) - 2.0 * fx + _call(f, x - h)) / (h * h)


def fd_derivative(
    f: Callable[[float], float],
    x: float,
    order: int = 1,
    kit: NumericKitConfig = DEFAULT_KIT,
    *,
    richardson: bool = False,
) -> float:
    """Central-difference derivative of order 1 or 2.

    The step is ``scale * max(1, |x|)`` with the scale taken from ``kit``
    per order; with ``richardson=True`` the estimates at ``h`` and ``h/2``
    are combined to cancel the ``h**2`` term.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if richardson:
        scale = kit.fd_rich_scale if order == 1 else kit.fd_rich2_scale
    else:
        scale = kit.fd_step_scale if order == 1 else kit.fd_step2_scale
    h = scale * max(1.0, abs(x))
    fx = _call(f, x) if order == 2 else None
    d = _central(f, x, h, order, fx)
    if not richardson:
        return d
    d_half = _central(f, x, h / 2.0, order, fx)
    return (4.0 * d_half - d) / 3.0


def _golden(g, a, b, tol, max_iter):
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - _INVPHI * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _INVPHI * (b - a)
            gd = g(d)
    else:
        raise NonConvergence("golden-section search exhausted its iteration budget")
    return (c, gc) if gc >= gd else (d, gd)


def maximize_scalar(
    f: Callable[[float], float],
    bracket: tuple[float, float],
    kit: NumericKitConfig = DEFAULT_KIT,
) -> tuple[float, float]:
    """Maximize a unimodal ``f`` over a positive bracket.

    Golden-section search runs on the log scale; if the maximizer lands on
    a bracket edge the bracket is widened geometrically, at most
    ``kit.max_expand`` times.  The result is then polished with Newton steps
    on Richardson-extrapolated central differences (a local quadratic
    model) until the step falls below ``kit.opt_tol``.
    """
    lo, hi = bracket
    if not 0 < lo < hi:
        raise ValueError(f"bracket must satisfy 0 < low < high, got {bracket!r}")

    def g(u):
        return _call(f, math.exp(u))

    a, b = math.log(lo), math.log(hi)
    coarse = 1e-5
    for _ in range(kit.max_expand + 1):
        u, _gu = _golden(g, a, b, coarse, kit.max_iter)
        edge = 4.0 * coarse
        at_lo, at_hi = u - a <= edge, b - u <= edge
        if not (at_lo or at_hi):
            break
        span = b - a
        if at_lo:
            a -= span
        if at_hi:
            b += span
    else:
        raise BracketFailure(
            f"no interior maximum within [{math.exp(a):.6g}, {math.exp(b):.6g}]"
            f" after {kit.max_expand} expansions"
        )

    x = math.exp(u)
    fx = _call(f, x)
    for _ in range(50):
        h = 1e-3 * max(1.0, abs(x))
        d1 = (4.0 * _central(f, x, h / 2.0, 1) - _central(f, x, h, 1)) / 3.0
        d2 = _central(f, x, h, 2, fx)
        if not d2 < 0:
            break
        step = -d1 / d2
        step = max(-0.5 * x, min(0.5 * x, step))
        x_new = x + step
        f_new = _call(f, x_new)
        if f_new < fx - 1e3 * _EPS * max(1.0, abs(fx)):
            break
        x, fx = x_new, f_new
        if abs(step) <= kit.opt_tol * max(1.0, abs(x)):
            break
    return x, fx
