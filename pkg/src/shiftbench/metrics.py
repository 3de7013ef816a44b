"""Robustness metrics built on a logit-space baseline curve.

Paired (in-domain, out-of-distribution) accuracies of a pool of baseline
models trace an approximately straight line once both axes are
logit-transformed.  This module fits that line with ordinary least squares
and scores interventions against it:

* effective robustness: OOD accuracy above the fitted curve at the model's
  ID accuracy, in percentage points,
* relative robustness: OOD accuracy gained over a reference model without
  the intervention, in percentage points,
* significance: the OOD accuracy must clear the curve shifted upward by
  ``lam`` residual deviations in logit space AND beat the reference model's
  OOD accuracy by more than ``gamma`` percentage points.

Accuracies are fractions in the open interval (0, 1) everywhere in this
module; metric outputs are percentage points.  All functions are pure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "LOG_ODDS",
    "LOG_COMPLEMENT",
    "AccuracyPoint",
    "LogitLinearFit",
    "ResidualStats",
    "SignificanceConfig",
    "RobustnessAssessment",
    "clamp_fraction",
    "logit",
    "inv_logit",
    "fit_beta",
    "predict_beta",
    "effective_robustness",
    "relative_robustness",
    "beta_lambda",
    "assess_significance",
    "assess_across_regimes",
]

#: Standard log-odds transform, ln(x / (1 - x)).  Default everywhere.
LOG_ODDS = "log-odds"

#: Audit-only variant, ln(1 / (1 - x)).  Kept selectable so results computed
#: with that transform can be reproduced and compared; it does not reproduce
#: the published-scale robustness numbers, log-odds does.
LOG_COMPLEMENT = "log-complement"

_TRANSFORMS = (LOG_ODDS, LOG_COMPLEMENT)

#: Fractions at exactly 0 or 1 are pulled inside (0, 1) by this margin
#: before any logit transform, since the transform is singular there.
CLAMP_EPS = 1e-6


def clamp_fraction(x: float) -> float:
    """Clamp a fraction in [0, 1] into [CLAMP_EPS, 1 - CLAMP_EPS].

    Values already strictly inside the clamped interval pass through
    unchanged.  Values at or near the endpoints (where the logit transform
    diverges) are clamped with a warning.  Values outside [0, 1] raise.
    """
    if not math.isfinite(x) or x < 0.0 or x > 1.0:
        raise ValueError(f"accuracy fraction must lie in [0, 1], got {x!r}")
    if x < CLAMP_EPS:
        warnings.warn(
            f"accuracy fraction {x!r} clamped to {CLAMP_EPS} (logit is "
            "singular at 0)",
            stacklevel=2,
        )
        return CLAMP_EPS
    if x > 1.0 - CLAMP_EPS:
        warnings.warn(
            f"accuracy fraction {x!r} clamped to {1.0 - CLAMP_EPS} (logit is "
            "singular at 1)",
            stacklevel=2,
        )
        return 1.0 - CLAMP_EPS
    return x


@dataclass(frozen=True)
class AccuracyPoint:
    """One model's paired (in-domain, out-of-distribution) accuracy.

    Both fields are fractions; endpoint values in [0, 1] are clamped into
    the open interval on construction (see :func:`clamp_fraction`).
    """

    acc_id: float
    acc_ood: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "acc_id", clamp_fraction(float(self.acc_id)))
        object.__setattr__(self, "acc_ood", clamp_fraction(float(self.acc_ood)))


@dataclass(frozen=True)
class LogitLinearFit:
    """Slope and intercept of the baseline curve in logit space.

    The curve predicts OOD accuracy as ``inverse(w * transform(acc_id) + b)``
    where ``transform`` is the logit variant the fit was computed with.
    """

    w: float
    b: float
    n: int
    transform: str = LOG_ODDS

    def __post_init__(self) -> None:
        if not (math.isfinite(self.w) and math.isfinite(self.b)):
            raise ValueError("fit parameters must be finite")
        if self.n < 3:
            raise ValueError(f"fit requires n >= 3 points, got n={self.n}")
        if self.transform not in _TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}")


@dataclass(frozen=True)
class ResidualStats:
    """Fit residuals (logit space) and derived quality measures.

    ``d`` is the residual deviation sqrt(sum(r_k^2) / (n - 2)), used to
    shift the baseline curve for significance testing.  ``mae_pp`` is the
    mean absolute error in accuracy space, in percentage points.  ``r2`` is
    the coefficient of determination in logit space, where the regression
    lives.
    """

    residuals: tuple[float, ...]
    d: float
    mae_pp: float
    r2: float


@dataclass(frozen=True)
class SignificanceConfig:
    """Knobs of the significance test.

    ``lam`` scales the upward shift of the baseline curve in units of the
    residual deviation ``d``; ``gamma`` is the margin, in percentage points,
    by which the reference model's OOD accuracy must be beaten.
    """

    lam: float = 1.0
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.lam) or self.lam < 0.0:
            raise ValueError(f"lam must be finite and >= 0, got {self.lam!r}")
        if not math.isfinite(self.gamma):
            raise ValueError(f"gamma must be finite, got {self.gamma!r}")


@dataclass(frozen=True)
class RobustnessAssessment:
    """Verdict for one intervention against the baseline curve and reference.

    ``improves`` means both effective and relative robustness are positive;
    ``significant`` additionally requires clearing the shifted curve and
    the configured margin over the reference.
    """

    rho_pp: float
    tau_pp: float
    improves: bool
    significant: bool


def logit(x: float, transform: str = LOG_ODDS) -> float:
    """Map a fraction in (0, 1) to the real line.

    The default is the log-odds ln(x / (1 - x)), which is strictly
    increasing and antisymmetric about 0.5.  Raises for x outside (0, 1);
    callers holding endpoint values must clamp first.
    """
    if transform not in _TRANSFORMS:
        raise ValueError(f"unknown transform {transform!r}")
    if not (0.0 < x < 1.0):
        raise ValueError(f"logit requires 0 < x < 1, got {x!r}")
    if transform == LOG_ODDS:
        return math.log(x / (1.0 - x))
    return -math.log1p(-x)  # ln(1 / (1 - x))


def inv_logit(y: float, transform: str = LOG_ODDS) -> float:
    """Inverse of :func:`logit`: the sigmoid 1 / (1 + e^-y) by default.

    Saturates smoothly toward 0 and 1 for large |y|; never raises for
    finite input.
    """
    if transform not in _TRANSFORMS:
        raise ValueError(f"unknown transform {transform!r}")
    if not math.isfinite(y):
        raise ValueError(f"inv_logit requires finite input, got {y!r}")
    if transform == LOG_ODDS:
        if y >= 0.0:
            return 1.0 / (1.0 + math.exp(-y))
        e = math.exp(y)
        return e / (1.0 + e)
    # inverse of -ln(1 - x); only meaningful for y >= 0
    return -math.expm1(-y)


def inv_logit_array(y: np.ndarray, transform: str = LOG_ODDS) -> np.ndarray:
    """Vectorized :func:`inv_logit` over a float array."""
    arr = np.asarray(y, dtype=np.float64)
    if transform == LOG_ODDS:
        out = np.empty_like(arr)
        pos = arr >= 0.0
        out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
        e = np.exp(arr[~pos])
        out[~pos] = e / (1.0 + e)
        return out
    return -np.expm1(-arr)


def fit_beta(
    points: Sequence[AccuracyPoint], transform: str = LOG_ODDS
) -> tuple[LogitLinearFit, ResidualStats]:
    """Fit the baseline curve by OLS on logit-transformed accuracy pairs.

    Minimizes squared residuals of transform(acc_ood) against
    ``w * transform(acc_id) + b``.  Requires at least three points (the
    residual deviation uses an n - 2 denominator) with non-identical ID
    accuracies.

    Returns the fitted line plus residual statistics: the logit-space
    residuals (in input-point order), their deviation ``d``, the
    accuracy-space MAE in percentage points, and the logit-space R^2.
    Points are canonically ordered internally, so the fit and the aggregate
    statistics are exactly invariant under reordering of the inputs.
    """
    n = len(points)
    if n < 3:
        raise ValueError(f"fit_beta requires at least 3 points, got {n}")
    xs = np.array([logit(p.acc_id, transform) for p in points])
    ys = np.array([logit(p.acc_ood, transform) for p in points])
    oods = np.array([p.acc_ood for p in points])
    if np.ptp(xs) == 0.0:
        raise ValueError("degenerate regression: all acc_id values identical")

    order = np.lexsort((ys, xs))
    xs_c, ys_c, oods_c = xs[order], ys[order], oods[order]
    design = np.column_stack([xs_c, np.ones(n)])
    (w, b), *_ = np.linalg.lstsq(design, ys_c, rcond=None)
    fit = LogitLinearFit(w=float(w), b=float(b), n=n, transform=transform)

    res_c = ys_c - (fit.w * xs_c + fit.b)
    d = float(math.sqrt(float(res_c @ res_c) / (n - 2)))
    mae_pp = 100.0 * float(
        np.mean(np.abs(oods_c - inv_logit_array(fit.w * xs_c + fit.b, transform)))
    )
    ss_res = float(res_c @ res_c)
    ss_tot = float(np.sum((ys_c - ys_c.mean()) ** 2))
    # With an intercept, OLS never leaves ss_res > ss_tot; ss_tot == 0
    # implies a perfect horizontal fit.
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    residuals = ys - (fit.w * xs + fit.b)
    stats = ResidualStats(
        residuals=tuple(float(r) for r in residuals), d=d, mae_pp=mae_pp, r2=r2
    )
    return fit, stats


def predict_beta(fit: LogitLinearFit, acc_id: float) -> float:
    """Expected OOD accuracy at ``acc_id`` under the fitted baseline curve."""
    return inv_logit(
        fit.w * logit(acc_id, fit.transform) + fit.b, fit.transform
    )


def effective_robustness(fit: LogitLinearFit, point: AccuracyPoint) -> float:
    """OOD accuracy above the baseline curve, in percentage points."""
    return 100.0 * (point.acc_ood - predict_beta(fit, point.acc_id))


def relative_robustness(acc_r_ood: float, acc_s_ood: float) -> float:
    """OOD accuracy gained over the reference model, in percentage points."""
    for v in (acc_r_ood, acc_s_ood):
        if not math.isfinite(v) or not (0.0 <= v <= 1.0):
            raise ValueError(f"OOD accuracy must lie in [0, 1], got {v!r}")
    return 100.0 * (acc_r_ood - acc_s_ood)


def beta_lambda(
    fit: LogitLinearFit, d: float, lam: float, acc_id: float
) -> float:
    """Baseline curve shifted upward by ``lam * d`` in logit space.

    Coincides with :func:`predict_beta` when ``lam * d`` is zero and
    dominates it pointwise when ``lam * d`` is positive.
    """
    if d < 0.0:
        raise ValueError(f"residual deviation d must be >= 0, got {d!r}")
    return inv_logit(
        fit.w * logit(acc_id, fit.transform) + fit.b + lam * d, fit.transform
    )


def assess_significance(
    fit: LogitLinearFit,
    d: float,
    point: AccuracyPoint,
    baseline_ood: float,
    cfg: SignificanceConfig | None = None,
) -> RobustnessAssessment:
    """Score one intervention against the curve and a reference OOD accuracy.

    The intervention is *significant* iff its OOD accuracy exceeds the
    shifted curve at its ID accuracy and exceeds ``baseline_ood`` by more
    than ``cfg.gamma`` percentage points.  ``improves`` only asks for
    positive effective and relative robustness.
    """
    cfg = cfg or SignificanceConfig()
    rho = effective_robustness(fit, point)
    tau = relative_robustness(point.acc_ood, baseline_ood)
    shifted = beta_lambda(fit, d, cfg.lam, point.acc_id)
    significant = (point.acc_ood > shifted) and (
        point.acc_ood > baseline_ood + cfg.gamma / 100.0
    )
    return RobustnessAssessment(
        rho_pp=rho,
        tau_pp=tau,
        improves=(rho > 0.0 and tau > 0.0),
        significant=significant,
    )


def assess_across_regimes(verdicts: Iterable[tuple[str, bool]]) -> bool:
    """Combine per-regime significance verdicts into one highlight flag.

    ``verdicts`` pairs a regime tag with that regime's verdict; the tag
    ``"full"`` marks the full-shot regime and every other tag counts as a
    low-shot regime.  The combined flag is true iff the full-shot verdict
    is true and strictly more than half of the low-shot verdicts are true.

    Raises if there is no full-shot entry, more than one, or no low-shot
    entries at all.
    """
    full: bool | None = None
    low: list[bool] = []
    for tag, ok in verdicts:
        if tag == "full":
            if full is not None:
                raise ValueError("duplicate full-shot verdict")
            full = bool(ok)
        else:
            low.append(bool(ok))
    if full is None:
        raise ValueError("missing full-shot verdict")
    if not low:
        raise ValueError("no low-shot verdicts")
    return full and sum(low) * 2 > len(low)
