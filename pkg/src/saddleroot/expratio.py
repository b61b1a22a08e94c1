"""Ratio of means of two independent exponential samples.

``X`` and ``Y`` have means ``lam / sqrt(psi)`` and ``lam * sqrt(psi)``, so
``psi = E[Y] / E[X]`` is the interest parameter and ``lam`` an orthogonal
nuisance parameter.  Everything needed by :mod:`saddleroot.inference` is
available in closed form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DefinitionMismatch, DegenerateData
from .inference import Model, ParamPoint, PriorKind


@dataclass(frozen=True, eq=False)
class PairedSample:
    """Positive ``(x, y)`` pairs.  Arrays are copied and made read-only."""

    x: np.ndarray
    y: np.ndarray
    xbar: float = field(init=False)
    ybar: float = field(init=False)

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        y = np.array(self.y, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise DegenerateData("x and y must have the same length")
        if x.size < 1:
            raise DegenerateData("a sample needs at least one pair")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DegenerateData("observations must be finite")
        if np.any(x <= 0) or np.any(y <= 0):
            raise DegenerateData("observations must be strictly positive")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "xbar", float(x.mean()))
        object.__setattr__(self, "ybar", float(y.mean()))

    @classmethod
    def from_pairs(cls, pairs) -> "PairedSample":
        arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    def scaled(self, c: float) -> "PairedSample":
        return PairedSample(self.x * c, self.y * c)


class ExpRatioParams(NamedTuple):
    psi: float
    lam: float

    def to_point(self) -> ParamPoint:
        return ParamPoint(self.psi, (self.lam,))

    @classmethod
    def from_point(cls, theta: ParamPoint) -> "ExpRatioParams":
        return cls(theta.psi, theta.chi[0])


def _unpack(params) -> tuple[float, float]:
    if isinstance(params, ParamPoint):
        return params.psi, params.chi[0]
    return float(params[0]), float(params[1])


def loglik(params, sample: PairedSample) -> float:
    psi, lam = _unpack(params)
    sp = math.sqrt(psi)
    return -sample.n * ((psi * sample.xbar + sample.ybar) / (lam * sp) + 2.0 * math.log(lam))


def per_obs_loglik(params, sample: PairedSample) -> np.ndarray:
    psi, lam = _unpack(params)
    return -((psi * sample.x + sample.y) / (lam * math.sqrt(psi)) + 2.0 * math.log(lam))


def per_obs_score(params, sample: PairedSample) -> np.ndarray:
    """Per-observation gradient in ``(psi, lam)``, shape ``(n, 2)``."""
    psi, lam = _unpack(params)
    sp = math.sqrt(psi)
    d_psi = -(sample.x / (2.0 * lam * sp) - sample.y / (2.0 * lam * psi * sp))
    d_lam = (psi * sample.x + sample.y) / (lam * lam * sp) - 2.0 / lam
    return np.column_stack([d_psi, d_lam])


def score(params, sample: PairedSample) -> np.ndarray:
    psi, lam = _unpack(params)
    n, xb, yb = sample.n, sample.xbar, sample.ybar
    sp = math.sqrt(psi)
    return np.array(
        [
            -n * (xb / (2.0 * lam * sp) - yb / (2.0 * lam * psi * sp)),
            n * ((psi * xb + yb) / (lam * lam * sp) - 2.0 / lam),
        ]
    )


def observed_info(params, sample: PairedSample) -> np.ndarray:
    """Negative Hessian of :func:`loglik` in ``(psi, lam)``."""
    psi, lam = _unpack(params)
    n, xb, yb = sample.n, sample.xbar, sample.ybar
    sp = math.sqrt(psi)
    j_pp = n * (-xb / (4.0 * lam * psi * sp) + 3.0 * yb / (4.0 * lam * psi * psi * sp))
    j_pl = n * (-xb / (2.0 * lam * lam * sp) + yb / (2.0 * lam * lam * psi * sp))
    j_ll = n * (2.0 * (psi * xb + yb) / (lam**3 * sp) - 2.0 / (lam * lam))
    return np.array([[j_pp, j_pl], [j_pl, j_ll]])


def expected_info(params, n: int) -> np.ndarray:
    psi, lam = _unpack(params)
    return n * np.array([[1.0 / (2.0 * psi * psi), 0.0], [0.0, 2.0 / (lam * lam)]])


def mle(sample: PairedSample) -> ExpRatioParams:
    return ExpRatioParams(sample.ybar / sample.xbar, math.sqrt(sample.xbar * sample.ybar))


def constrained_mle(sample: PairedSample, psi0: float) -> ExpRatioParams:
    if not psi0 > 0:
        raise ValueError(f"psi0 must be positive, got {psi0!r}")
    return ExpRatioParams(psi0, (psi0 * sample.xbar + sample.ybar) / (2.0 * math.sqrt(psi0)))


def profile_loglik(sample: PairedSample, psi: float) -> float:
    return -2.0 * sample.n * (1.0 + math.log((psi * sample.xbar + sample.ybar) / (2.0 * math.sqrt(psi))))


def prior(params, kind: PriorKind = "matching") -> float:
    """Matching prior ``1/psi`` (constant factor dropped) or flat prior."""
    psi, _ = _unpack(params)
    if kind == "matching":
        return 1.0 / psi
    if kind == "uniform":
        return 1.0
    raise ValueError(f"unknown prior kind {kind!r}")


def signed_root_closed_form(sample: PairedSample, psi0: float) -> float:
    """``R`` from the profile likelihood in closed form."""
    psi_hat = sample.ybar / sample.xbar
    ratio = (psi0 * sample.xbar + sample.ybar) / (2.0 * math.sqrt(psi0 * sample.xbar * sample.ybar))
    r = math.sqrt(max(0.0, 4.0 * sample.n * math.log(ratio)))
    return math.copysign(r, psi_hat - psi0) if psi_hat != psi0 else 0.0


# --- ancillary-based correction ------------------------------------------


@dataclass(frozen=True)
class AncillaryContext:
    a: float
    psi_hat: float
    n: int
    reference_lambda: float

    def __post_init__(self):
        if not self.a + math.sqrt(2.0 * self.n) > 0:
            raise ValueError("ancillary must satisfy a + sqrt(2n) > 0")

    @property
    def c(self) -> float:
        """``|a + sqrt(2n)| / sqrt(2n)``, the ancillary's scale factor."""
        return abs(self.a + math.sqrt(2.0 * self.n)) / math.sqrt(2.0 * self.n)


def ancillary_a(sample: PairedSample, reference_lambda: float | None = None) -> AncillaryContext:
    lam_hat = math.sqrt(sample.xbar * sample.ybar)
    lam = lam_hat if reference_lambda is None else reference_lambda
    if not lam > 0:
        raise ValueError("reference_lambda must be positive")
    if reference_lambda is None:
        a = 0.0
    else:
        a = math.sqrt(2.0 * sample.n) * (lam_hat / lam - 1.0)
    return AncillaryContext(a, sample.ybar / sample.xbar, sample.n, lam)


def reduced_loglik(ctx: AncillaryContext, psi: float, psi_hat: float | None = None) -> float:
    """Per-observation log-likelihood in ``psi`` given ``(psi_hat, a)``, ``lam`` fixed."""
    ph = ctx.psi_hat if psi_hat is None else psi_hat
    return -ctx.c * (psi + ph) / math.sqrt(psi * ph) - 2.0 * math.log(ctx.reference_lambda)


class BNQuantities(NamedTuple):
    omega_hat: float
    z_tilde: float
    j_psi: float
    printed: dict
    mismatches: tuple[str, ...]


def printed_forms(ctx: AncillaryContext, psi: float) -> dict:
    """Alternative closed forms for ``omega_hat``, ``j(psi)`` and ``z_tilde``.

    Kept only as a cross-check against :func:`bn_quantities`.
    """
    n, ph, a = ctx.n, ctx.psi_hat, ctx.a
    k = abs(a + math.sqrt(2.0 * n))
    sgn = math.copysign(1.0, ph - psi) if ph != psi else 0.0
    omega = sgn * psi**0.25 * abs(k * (math.sqrt(psi) - math.sqrt(ph))) / (ph**0.25 * math.sqrt(n))
    j_psi = k * (3.0 * psi - ph) / (4.0 * math.sqrt(2.0 * n * psi * ph**5))
    z = -math.sqrt(k) * (psi - ph) / (2.0 * math.sqrt(2.0 * n * psi * ph))
    return {"omega_hat": omega, "j_psi": j_psi, "z_tilde": z}


def bn_quantities(ctx: AncillaryContext, psi: float, *, warn: bool = True) -> BNQuantities:
    """Signed root, sample-space score difference and information at ``psi``.

    All three come from the reduced log-likelihood :func:`reduced_loglik`:
    the signed root of ``l(psi_hat) - l(psi)``, the derivative of ``l`` with
    respect to ``psi_hat`` (zero at ``psi = psi_hat``), and the observed
    information ``j(psi_hat) = c / (2 psi_hat^2)``.
    """
    if not psi > 0:
        raise ValueError("psi must be positive")
    c, ph = ctx.c, ctx.psi_hat
    drop = c * ((psi + ph) / math.sqrt(psi * ph) - 2.0)
    omega = math.sqrt(max(0.0, 2.0 * drop))
    if ph < psi:
        omega = -omega
    elif ph == psi:
        omega = 0.0
    # d/d psi_hat of reduced_loglik at (psi, psi_hat)
    dl_dhat = c * (psi - ph) / (2.0 * math.sqrt(psi) * ph**1.5)
    j_hat = c / (2.0 * ph * ph)
    z = -dl_dhat / math.sqrt(j_hat)
    j_at_psi = c * (3.0 * ph - psi) / (4.0 * psi**2.5 * math.sqrt(ph))

    printed = printed_forms(ctx, psi)
    ours = {"omega_hat": omega, "j_psi": j_at_psi, "z_tilde": z}
    mismatches = tuple(
        k for k, v in ours.items() if not math.isclose(v, printed[k], rel_tol=1e-6, abs_tol=1e-12)
    )
    if mismatches and warn:
        detail = ", ".join(f"{k}: {ours[k]:.10g} vs {printed[k]:.10g}" for k in mismatches)
        warnings.warn(f"closed forms disagree at psi={psi:.6g}: {detail}", DefinitionMismatch, stacklevel=2)
    return BNQuantities(omega, z, j_hat, printed, mismatches)


def bn_U(sample: PairedSample, psi0: float, *, warn: bool = False) -> float:
    """``sqrt(n) * z_tilde`` at ``psi0`` with the ancillary evaluated at the MLE."""
    q = bn_quantities(ancillary_a(sample), psi0, warn=warn)
    return math.sqrt(sample.n) * q.z_tilde


class ExpRatioModel(Model):
    """:class:`~saddleroot.inference.Model` adapter for the exponential ratio."""

    dim = 2

    def n_obs(self, data: PairedSample) -> int:
        return data.n

    def loglik(self, theta, data):
        return loglik(theta, data)

    def per_obs_loglik(self, theta, data):
        return per_obs_loglik(theta, data)

    def per_obs_score(self, theta, data):
        return per_obs_score(theta, data)

    def score(self, theta, data):
        return score(theta, data)

    def expected_info(self, theta, data):
        return expected_info(theta, data.n)

    def observed_info(self, theta, data):
        return observed_info(theta, data)

    def prior(self, theta, kind="matching"):
        return prior(theta, kind)

    def start(self, data):
        return ParamPoint(1.0, (float(np.concatenate([data.x, data.y]).mean()),))

    def in_domain(self, theta):
        return theta.psi > 0 and theta.chi[0] > 0 and math.isfinite(theta.psi) and math.isfinite(theta.chi[0])

    def mle(self, data):
        return mle(data).to_point()

    def constrained_mle(self, data, psi):
        return constrained_mle(data, psi).to_point()

    def bn_U(self, data, psi0):
        return bn_U(data, psi0)


EXP_RATIO = ExpRatioModel()
