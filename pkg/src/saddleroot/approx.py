"""Barndorff-Nielsen and Lugannani-Rice tail approximations.

Both formats take a signed root ``r`` and a correction statistic ``u`` and
return an approximation to ``P[R <= r]``.  :func:`guarded_pvalue` is the
total entry point used by the higher layers: it never raises and routes
every failure to a flagged fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .errors import NearZeroRoot, NonPositiveRatio, TailFormatError, ZeroCorrection

Format = Literal["BN", "LR"]
FORMATS: tuple[Format, ...] = ("BN", "LR")

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

DEFAULT_R_THRESHOLD = 1e-4


@dataclass(frozen=True)
class TailInput:
    r: float
    u: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and math.isfinite(self.u)):
            raise ValueError(f"r and u must be finite, got r={self.r!r}, u={self.u!r}")


@dataclass(frozen=True)
class PValuePair:
    """Approximate CDF with its one- and two-sided p-values.

    For ordinary evaluations ``one_sided + cdf == 1`` and
    ``two_sided == 2 * min(cdf, 1 - cdf)``.  When the near-zero policy fires
    (``reason == "near_zero"``) both p-values are set to the policy constant
    and ``cdf`` holds the continuous limit ``Phi(r)``.
    """

    cdf: float
    one_sided: float
    two_sided: float
    format: Format
    fallback_used: bool = False
    reason: str | None = None


@dataclass(frozen=True)
class SingularityPolicy:
    r_threshold: float = DEFAULT_R_THRESHOLD
    near_zero_pvalue: float = 1.0

    def __post_init__(self):
        if not self.r_threshold > 0:
            raise ValueError("r_threshold must be positive")
        if not 0.0 <= self.near_zero_pvalue <= 1.0:
            raise ValueError("near_zero_pvalue must lie in [0, 1]")


def std_normal_cdf(x: float) -> float:
    # erfc keeps full relative accuracy in the lower tail
    return 0.5 * math.erfc(-x / _SQRT2)


def std_normal_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def _check_root(r: float, threshold: float) -> None:
    if abs(r) <= threshold:
        raise NearZeroRoot(f"|r| = {abs(r):.3g} is within the singular band {threshold:g}")


def bn_format(tail: TailInput, threshold: float = DEFAULT_R_THRESHOLD) -> float:
    """``Phi(r + log(u/r)/r)``."""
    r, u = tail.r, tail.u
    _check_root(r, threshold)
    ratio = u / r
    if not ratio > 0:
        raise NonPositiveRatio(f"u/r = {ratio:.6g} is not positive")
    return std_normal_cdf(r + math.log(ratio) / r)


def _lr_raw(r: float, u: float) -> float:
    return std_normal_cdf(r) + std_normal_pdf(r) * (1.0 / r - 1.0 / u)


def lr_format(tail: TailInput, threshold: float = DEFAULT_R_THRESHOLD) -> float:
    """``Phi(r) + phi(r) (1/r - 1/u)``, clamped to the unit interval."""
    r, u = tail.r, tail.u
    _check_root(r, threshold)
    if u == 0.0:
        raise ZeroCorrection("u = 0")
    return min(1.0, max(0.0, _lr_raw(r, u)))


def assemble_pvalues(
    cdf: float, format: Format, fallback_used: bool = False, reason: str | None = None
) -> PValuePair:
    if not 0.0 <= cdf <= 1.0:
        raise ValueError(f"cdf must lie in [0, 1], got {cdf!r}")
    upper = 1.0 - cdf
    return PValuePair(
        cdf=cdf,
        one_sided=upper,
        two_sided=min(1.0, 2.0 * min(cdf, upper)),
        format=format,
        fallback_used=fallback_used,
        reason=reason,
    )


def near_zero_pair(r: float, format: Format, policy: SingularityPolicy) -> PValuePair:
    p = policy.near_zero_pvalue
    return PValuePair(
        cdf=std_normal_cdf(r),
        one_sided=p,
        two_sided=p,
        format=format,
        fallback_used=True,
        reason="near_zero",
    )


def plain_pvalues(r: float, format: Format, policy: SingularityPolicy) -> PValuePair:
    """``Phi(r)`` p-values, used for the uncorrected rows."""
    if abs(r) <= policy.r_threshold:
        return near_zero_pair(r, format, policy)
    return assemble_pvalues(std_normal_cdf(r), format)


def guarded_pvalue(
    tail: TailInput, format: Format, policy: SingularityPolicy = SingularityPolicy()
) -> PValuePair:
    """Evaluate ``format`` at ``tail``; never raises for finite input."""
    r, u = tail.r, tail.u
    if abs(r) <= policy.r_threshold:
        return near_zero_pair(r, format, policy)
    fallback = assemble_pvalues(std_normal_cdf(r), format, True, "sign_mismatch")
    if not u / r > 0:
        return fallback
    try:
        if format == "BN":
            return assemble_pvalues(bn_format(tail, policy.r_threshold), format)
        raw = _lr_raw(r, u)
        if 0.0 <= raw <= 1.0:
            return assemble_pvalues(raw, format)
        return assemble_pvalues(min(1.0, max(0.0, raw)), format, True, "lr_clamped")
    except (TailFormatError, ArithmeticError, ValueError):
        return PValuePair(
            fallback.cdf, fallback.one_sided, fallback.two_sided, format, True, "format_error"
        )
