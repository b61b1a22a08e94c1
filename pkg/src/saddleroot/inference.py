"""Signed likelihood roots and their higher-order corrections.

A model is anything implementing :class:`Model`.  Given a fitted model the
functions here build the plain signed root ``R``, Severini's empirical
correction, the DiCiccio-Martin prior-based correction ``T``, the Cox-Reid
adjusted root ``Rbar`` with its correction ``Tbar``, and the full grid of
p-values over all (row, format) combinations.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Iterable, Literal

import numpy as np

from .approx import (
    FORMATS,
    Format,
    PValuePair,
    SingularityPolicy,
    TailInput,
    guarded_pvalue,
    plain_pvalues,
    std_normal_cdf,
)
from .errors import (
    BracketFailure,
    DegenerateData,
    InconsistentFit,
    InferenceError,
    NonConcaveAtMax,
    NonConvergence,
    NonMonotone,
    NonPositivePrior,
    SingularInformation,
)
from .numeric import DEFAULT_KIT, NumericKitConfig, fd_derivative, maximize_scalar

PriorKind = Literal["matching", "uniform"]

ROWS: tuple[str, ...] = (
    "R",
    "Rbar",
    "U_bn",
    "U_sev",
    "T_match",
    "T_unif",
    "Tbar_match",
    "Tbar_unif",
)
PLAIN_ROWS = ("R", "Rbar")
ROOT_OF_ROW = {
    "R": "R",
    "Rbar": "Rbar",
    "U_bn": "R",
    "U_sev": "R",
    "T_match": "R",
    "T_unif": "R",
    "Tbar_match": "Rbar",
    "Tbar_unif": "Rbar",
}

RADICAND_TOL = 1e-8


@dataclass(frozen=True)
class ParamPoint:
    psi: float
    chi: tuple[float, ...] = ()

    def as_array(self) -> np.ndarray:
        return np.array((self.psi, *self.chi), dtype=float)

    @classmethod
    def from_array(cls, v) -> "ParamPoint":
        return cls(float(v[0]), tuple(float(c) for c in v[1:]))


class Model(ABC):
    """Capabilities a parametric model must provide.

    Parameters are ``ParamPoint(psi, chi)`` with scalar interest ``psi``.
    ``per_obs_loglik`` and ``per_obs_score`` return one entry (row) per
    observation.  ``mle`` and ``constrained_mle`` default to Newton
    iterations; models with closed forms override them.
    """

    dim: int = 2

    @abstractmethod
    def n_obs(self, data) -> int: ...

    @abstractmethod
    def loglik(self, theta: ParamPoint, data) -> float: ...

    @abstractmethod
    def per_obs_loglik(self, theta: ParamPoint, data) -> np.ndarray: ...

    @abstractmethod
    def per_obs_score(self, theta: ParamPoint, data) -> np.ndarray: ...

    @abstractmethod
    def expected_info(self, theta: ParamPoint, data) -> np.ndarray: ...

    @abstractmethod
    def observed_info(self, theta: ParamPoint, data) -> np.ndarray: ...

    @abstractmethod
    def prior(self, theta: ParamPoint, kind: PriorKind = "matching") -> float: ...

    @abstractmethod
    def start(self, data) -> ParamPoint:
        """Starting point for the numeric optimizers."""

    def in_domain(self, theta: ParamPoint) -> bool:
        return theta.psi > 0 and all(math.isfinite(c) for c in theta.chi)

    def score(self, theta: ParamPoint, data) -> np.ndarray:
        return self.per_obs_score(theta, data).sum(axis=0)

    def mle(self, data) -> ParamPoint:
        return numeric_mle(self, data)

    def constrained_mle(self, data, psi: float) -> ParamPoint:
        return numeric_constrained_mle(self, data, psi)

    def bn_U(self, data, psi0: float) -> float:
        """Ancillary-based correction; only worked examples provide one."""
        raise NotImplementedError(f"{type(self).__name__} has no ancillary-based U")


def _newton(objective, grad, hess_neg, x0, in_domain, max_iter=100, tol=1e-13):
    x = np.asarray(x0, dtype=float)
    fx = objective(x)
    for _ in range(max_iter):
        g = grad(x)
        h = np.atleast_2d(hess_neg(x))
        # Marquardt shift (per-coordinate scale) until the information is positive definite
        mu = 0.0
        d = np.abs(np.diag(h))
        d = np.diag(np.where(d > 0, d, 1.0))
        for _ in range(60):
            try:
                chol = np.linalg.cholesky(h + mu * d)
                break
            except np.linalg.LinAlgError:
                mu = 1e-3 if mu == 0.0 else 4.0 * mu
        else:
            raise NonConvergence("could not regularize the information matrix")
        step = np.linalg.solve(chol.T, np.linalg.solve(chol, g))
        if not np.all(np.isfinite(step)):
            raise NonConvergence("Newton step is not finite")
        t = 1.0
        for _ in range(60):
            cand = x + t * step
            if in_domain(cand):
                fc = objective(cand)
                if math.isfinite(fc) and fc >= fx - 1e-12 * abs(fx):
                    break
            t *= 0.5
        else:
            raise NonConvergence("line search failed to improve the log-likelihood")
        x, fx = cand, fc
        if np.max(np.abs(t * step) / (1.0 + np.abs(x))) <= tol:
            return x
    raise NonConvergence(f"Newton iteration did not converge in {max_iter} steps")


def numeric_mle(model: Model, data, start: ParamPoint | None = None) -> ParamPoint:
    """Unconstrained MLE by damped Newton-Raphson on the model's score."""
    x0 = (start or model.start(data)).as_array()
    pt = ParamPoint.from_array
    x = _newton(
        lambda v: model.loglik(pt(v), data),
        lambda v: model.score(pt(v), data),
        lambda v: model.observed_info(pt(v), data),
        x0,
        lambda v: model.in_domain(pt(v)),
    )
    return pt(x)


def numeric_constrained_mle(model: Model, data, psi: float, start: ParamPoint | None = None) -> ParamPoint:
    """Nuisance MLE with the interest parameter held at ``psi``."""
    chi0 = np.array((start or model.start(data)).chi, dtype=float)

    def pt(c):
        return ParamPoint(psi, tuple(float(v) for v in c))

    c = _newton(
        lambda c: model.loglik(pt(c), data),
        lambda c: model.score(pt(c), data)[1:],
        lambda c: model.observed_info(pt(c), data)[1:, 1:],
        chi0,
        lambda c: model.in_domain(pt(c)),
    )
    return pt(c)


@dataclass(frozen=True)
class ModelFit:
    psi0: float
    mle: ParamPoint
    constrained: ParamPoint
    loglik_hat: float
    loglik_constrained: float
    j_full: np.ndarray
    j_chichi_constrained: np.ndarray


@dataclass(frozen=True)
class StatisticBundle:
    r: float
    u: float
    variant: str
    root_kind: Literal["R", "Rbar"]

    def __post_init__(self):
        if ROOT_OF_ROW.get(self.variant) != self.root_kind or self.variant in PLAIN_ROWS:
            raise ValueError(f"variant {self.variant!r} cannot pair with root {self.root_kind!r}")


def _posdef(m: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


def fit_model(model: Model, data, psi0: float) -> ModelFit:
    """Global and constrained fits at ``psi0`` with their information blocks."""
    if not psi0 > 0:
        raise ValueError(f"psi0 must be positive, got {psi0!r}")
    if model.n_obs(data) < 2:
        raise DegenerateData("at least two observations are required")
    hat = model.mle(data)
    con = model.constrained_mle(data, psi0)
    j_full = np.asarray(model.observed_info(hat, data), dtype=float)
    j_cc = np.asarray(model.observed_info(con, data), dtype=float)[1:, 1:]
    if not (np.all(np.isfinite(j_full)) and _posdef(j_full)):
        raise DegenerateData("observed information at the MLE is not positive definite")
    return ModelFit(
        psi0=psi0,
        mle=hat,
        constrained=con,
        loglik_hat=model.loglik(hat, data),
        loglik_constrained=model.loglik(con, data),
        j_full=j_full,
        j_chichi_constrained=j_cc,
    )


def _signed_sqrt(sign_of: float, radicand: float) -> float:
    if radicand < -RADICAND_TOL:
        raise InconsistentFit(f"negative likelihood-ratio radicand {radicand:.3g}")
    root = math.sqrt(max(radicand, 0.0))
    if sign_of > 0:
        return root
    if sign_of < 0:
        return -root
    return 0.0


def signed_root_R(fit: ModelFit, psi0: float | None = None) -> float:
    psi0 = fit.psi0 if psi0 is None else psi0
    return _signed_sqrt(fit.mle.psi - psi0, 2.0 * (fit.loglik_hat - fit.loglik_constrained))


def empirical_Q(model: Model, data, omega: ParamPoint, omega0: ParamPoint) -> np.ndarray:
    """Sum over observations of ``l_j(omega) * score_j(omega0)``."""
    return model.per_obs_loglik(omega, data) @ model.per_obs_score(omega0, data)


def empirical_I(model: Model, data, omega: ParamPoint, omega0: ParamPoint) -> np.ndarray:
    """Sum over observations of ``score_j(omega) score_j(omega0)^T``."""
    return model.per_obs_score(omega, data).T @ model.per_obs_score(omega0, data)


def _det(m: np.ndarray) -> float:
    if m.shape == (1, 1):
        return float(m[0, 0])
    if m.shape == (2, 2):
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    return float(np.linalg.det(m))


def _sign_or_one(x: float) -> float:
    return -1.0 if x < 0 else 1.0


def severini_U(model: Model, data, fit: ModelFit) -> float:
    """Empirical-covariance approximation to the ancillary-based ``U``.

    Sample-space derivatives are replaced by ``Q`` and ``I`` sums mapped
    through ``i_hat^{-1} j_hat``.  The determinant is taken with the nuisance
    rows first and the difference row last; the result is signed like ``R``.
    """
    hat, con = fit.mle, fit.constrained
    s_hat = model.per_obs_score(hat, data)
    i_hat = s_hat.T @ s_hat
    scale = float(np.trace(i_hat))
    if not scale > 0 or np.min(np.linalg.eigvalsh(i_hat)) <= 1e-12 * scale:
        raise SingularInformation("empirical information at the MLE is singular")
    to_sample_space = np.linalg.solve(i_hat, fit.j_full)
    chi_rows = (model.per_obs_score(con, data).T @ s_hat)[1:, :] @ to_sample_space
    dl = model.per_obs_loglik(hat, data) - model.per_obs_loglik(con, data)
    diff_row = (dl @ s_hat) @ to_sample_space
    num = abs(_det(np.vstack([chi_rows, diff_row])))
    d_cc, d_full = _det(fit.j_chichi_constrained), _det(fit.j_full)
    if not (d_cc > 0 and d_full > 0):
        raise SingularInformation("observed information determinant is not positive")
    return _sign_or_one(hat.psi - fit.psi0) * num / math.sqrt(d_cc * d_full)


def _prior_ratio(model: Model, top: ParamPoint, bottom: ParamPoint, kind: PriorKind) -> float:
    p_top, p_bottom = model.prior(top, kind), model.prior(bottom, kind)
    if not (p_top > 0 and p_bottom > 0):
        raise NonPositivePrior(f"prior must be positive, got {p_top!r} and {p_bottom!r}")
    return p_top / p_bottom


def diciccio_T(model: Model, data, fit: ModelFit, prior_kind: PriorKind = "matching") -> float:
    l_psi = float(model.score(fit.constrained, data)[0])
    d_cc, d_full = _det(fit.j_chichi_constrained), _det(fit.j_full)
    if not (d_cc > 0 and d_full > 0):
        raise SingularInformation("observed information determinant is not positive")
    ratio = _prior_ratio(model, fit.mle, fit.constrained, prior_kind)
    return l_psi * math.sqrt(d_cc) * ratio / math.sqrt(d_full)


def adjusted_profile_loglik(model: Model, data, psi: float) -> float:
    """Cox-Reid adjusted profile log-likelihood at ``psi``."""
    theta = model.constrained_mle(data, psi)
    j_cc = np.asarray(model.observed_info(theta, data), dtype=float)[1:, 1:]
    d = _det(j_cc)
    if not d > 0:
        raise SingularInformation(f"nuisance information is not positive definite at psi={psi!r}")
    return model.loglik(theta, data) - 0.5 * math.log(d)


def coxreid_Rbar(
    model: Model,
    data,
    psi0: float,
    kit: NumericKitConfig = DEFAULT_KIT,
    psi_hat: float | None = None,
) -> tuple[float, float]:
    """Signed root of the adjusted likelihood ratio; returns ``(rbar, psibar)``."""
    if psi_hat is None:
        psi_hat = model.mle(data).psi
    lo, hi = kit.opt_bracket
    f = lambda p: adjusted_profile_loglik(model, data, p)  # noqa: E731
    psibar, lbar_max = maximize_scalar(f, (psi_hat * lo, psi_hat * hi), kit)
    rbar = _signed_sqrt(psibar - psi0, 2.0 * (lbar_max - f(psi0)))
    return rbar, psibar


def coxreid_Tbar(
    model: Model,
    data,
    psi0: float,
    psibar: float,
    prior_kind: PriorKind = "matching",
    kit: NumericKitConfig = DEFAULT_KIT,
) -> float:
    f = lambda p: adjusted_profile_loglik(model, data, p)  # noqa: E731
    d1 = fd_derivative(f, psi0, 1, kit, richardson=True)
    d2 = fd_derivative(f, psibar, 2, kit, richardson=True)
    if not d2 < 0:
        raise NonConcaveAtMax(f"adjusted profile curvature {d2:.3g} at psibar is not negative")
    ratio = _prior_ratio(
        model,
        model.constrained_mle(data, psibar),
        model.constrained_mle(data, psi0),
        prior_kind,
    )
    return d1 / math.sqrt(-d2) * ratio


@dataclass
class PValueGrid:
    """P-values for every requested (row, format) cell."""

    psi0: float
    cells: dict[tuple[str, str], PValuePair]
    stats: dict[str, float] = field(default_factory=dict)
    bundles: list[StatisticBundle] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)

    def __getitem__(self, key: tuple[str, str]) -> PValuePair:
        return self.cells[key]

    def __iter__(self):
        return iter(self.cells.items())


def _failed_cell(fmt: Format, policy: SingularityPolicy, reason: str) -> PValuePair:
    p = policy.near_zero_pvalue
    return PValuePair(0.5, p, p, fmt, True, reason)


def _reason(exc: BaseException) -> str:
    if isinstance(exc, NotImplementedError):
        return "unavailable"
    return f"model_error:{type(exc).__name__}"


def pvalue_suite(
    model: Model,
    data,
    psi0: float,
    policy: SingularityPolicy = SingularityPolicy(),
    kit: NumericKitConfig = DEFAULT_KIT,
    rows: Iterable[str] = ROWS,
    formats: Iterable[Format] = FORMATS,
) -> PValueGrid:
    """Compute every (row, format) p-value cell for one data set.

    Failures never propagate: a cell whose statistic cannot be computed
    falls back to its plain root (or to non-rejection when even the root is
    unavailable) and records the reason.
    """
    rows, formats = tuple(rows), tuple(formats)
    unknown = set(rows) - set(ROWS)
    if unknown:
        raise ValueError(f"unknown rows: {sorted(unknown)}")
    grid = PValueGrid(psi0, {})

    roots: dict[str, float] = {}
    fit = None
    try:
        fit = fit_model(model, data, psi0)
        roots["R"] = signed_root_R(fit, psi0)
    except (InferenceError, ArithmeticError) as exc:
        grid.errors["R"] = _reason(exc)
    psibar = None
    if fit is not None and any(ROOT_OF_ROW[r] == "Rbar" for r in rows):
        try:
            roots["Rbar"], psibar = coxreid_Rbar(model, data, psi0, kit, fit.mle.psi)
            grid.stats["psibar"] = psibar
        except (InferenceError, ArithmeticError) as exc:
            grid.errors["Rbar"] = _reason(exc)
    grid.stats.update(roots)

    def correction(row: str) -> float:
        if row == "U_bn":
            return model.bn_U(data, psi0)
        if row == "U_sev":
            return severini_U(model, data, fit)
        if row in ("T_match", "T_unif"):
            return diciccio_T(model, data, fit, "matching" if row == "T_match" else "uniform")
        kind = "matching" if row == "Tbar_match" else "uniform"
        return coxreid_Tbar(model, data, psi0, psibar, kind, kit)

    for row in rows:
        root_kind = ROOT_OF_ROW[row]
        if root_kind not in roots:
            reason = grid.errors[root_kind]
            for fmt in formats:
                grid.cells[row, fmt] = _failed_cell(fmt, policy, reason)
            continue
        r = roots[root_kind]
        if row in PLAIN_ROWS:
            for fmt in formats:
                grid.cells[row, fmt] = plain_pvalues(r, fmt, policy)
            continue
        try:
            u = float(correction(row))
            if not math.isfinite(u):
                raise SingularInformation(f"non-finite correction for {row}")
        except (InferenceError, ArithmeticError, NotImplementedError) as exc:
            grid.errors[row] = _reason(exc)
            for fmt in formats:
                cell = plain_pvalues(r, fmt, policy)
                if not cell.fallback_used:
                    cell = PValuePair(cell.cdf, cell.one_sided, cell.two_sided, fmt, True, _reason(exc))
                grid.cells[row, fmt] = cell
            continue
        grid.stats[row] = u
        grid.bundles.append(StatisticBundle(r, u, row, root_kind))
        tail = TailInput(r, u)
        for fmt in formats:
            grid.cells[row, fmt] = guarded_pvalue(tail, fmt, policy)
    return grid


def cell_cdf(
    model: Model,
    data,
    psi0: float,
    row: str,
    format: Format,
    policy: SingularityPolicy = SingularityPolicy(),
    kit: NumericKitConfig = DEFAULT_KIT,
) -> float:
    return pvalue_suite(model, data, psi0, policy, kit, rows=(row,), formats=(format,))[row, format].cdf


def upper_confidence_limit(
    model: Model,
    data,
    alpha: float,
    row: str = "R",
    format: Format = "BN",
    kit: NumericKitConfig = DEFAULT_KIT,
    policy: SingularityPolicy = SingularityPolicy(),
    tol: float = 1e-8,
) -> float:
    """The ``psi0`` at which the cell's approximate CDF equals ``alpha``.

    The CDF decreases in ``psi0``; bisection runs on ``log psi0`` inside a
    bracket around the MLE that is widened geometrically as needed.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    psi_hat = model.mle(data).psi

    def g(log_psi: float) -> float:
        return cell_cdf(model, data, math.exp(log_psi), row, format, policy, kit) - alpha

    centre = math.log(psi_hat)
    half = 1.0
    for _ in range(kit.max_expand + 4):
        a, b = centre - half, centre + half
        ga, gb = g(a), g(b)
        if ga >= 0 >= gb:
            break
        half *= 2.0
    else:
        raise BracketFailure(f"could not bracket the {alpha} limit around psi_hat={psi_hat:.6g}")

    probe = np.linspace(a, b, 33)
    vals = np.array([g(p) for p in probe])
    if np.any(np.diff(vals) > 1e-12):
        raise NonMonotone(f"CDF of cell ({row}, {format}) is not monotone in psi0 on the bracket")

    # shrink to the grid interval containing the crossing
    k = int(np.nonzero(vals <= 0)[0][0])
    if vals[k] == 0:
        return math.exp(probe[k])
    a, b = probe[k - 1], probe[k]
    for _ in range(kit.max_iter):
        m = 0.5 * (a + b)
        gm = g(m)
        if abs(gm) <= tol or b - a <= 1e-15:
            return math.exp(m)
        if gm > 0:
            a = m
        else:
            b = m
    raise NonConvergence("bisection did not reach the requested tolerance")
