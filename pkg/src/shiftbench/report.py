"""Robustness reports: per-intervention, per-regime verdict tables.

For every intervention model and every regime it was measured in, the
report carries effective and relative robustness (2-decimal percentage
points at the emission boundary), the improves flag, the per-regime
significance verdict, and a cross-regime highlight flag that requires
significance in the full-shot regime plus a strict majority of low-shot
regimes.  Reports serialize to a versioned JSON document and an aligned
plain-text table.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .metrics import (
    LogitLinearFit,
    SignificanceConfig,
    assess_across_regimes,
    assess_significance,
)
from .records import (
    REGIMES,
    AccuracyRecord,
    DatasetProfile,
    average_ood,
    model_point,
    select,
)

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "RegimeAssessment",
    "InterventionReport",
    "RobustnessReport",
    "build_report",
    "report_to_json",
    "format_report_table",
    "fit_to_json",
    "load_fit_json",
]

REPORT_SCHEMA_VERSION = 1

# full-shot first, then low-shot tiers smallest to largest
_REPORT_REGIME_ORDER = ("full", "extreme", "low", "moderate", "high")

_REGIME_TITLES = {
    "full": "Full-Shot Regime",
    "extreme": "Extreme Low-Shot",
    "low": "Low Low-Shot",
    "moderate": "Moderate Low-Shot",
    "high": "High Low-Shot",
}


@dataclass(frozen=True)
class RegimeAssessment:
    regime: str
    acc_id_pct: float
    acc_ood_pct: float
    rho_pp: float
    tau_pp: float
    improves: bool
    significant: bool


@dataclass(frozen=True)
class InterventionReport:
    model: str
    regimes: tuple[RegimeAssessment, ...]
    highlight: bool


@dataclass(frozen=True)
class RobustnessReport:
    dataset: str
    w: float
    b: float
    d: float
    n: int
    lam: float
    gamma: float
    reference_model: str
    interventions: tuple[InterventionReport, ...]


def _reference_model_name(
    records: Sequence[AccuracyRecord], explicit: str | None
) -> str:
    if explicit is not None:
        return explicit
    names = sorted({rec.model for rec in select(records, role="reference")})
    if not names:
        raise ValueError("no reference-role records and no reference model given")
    if len(names) > 1:
        raise ValueError(
            f"multiple reference models {names}; pass one explicitly"
        )
    return names[0]


def build_report(
    fit: LogitLinearFit,
    d: float,
    records: Sequence[AccuracyRecord],
    profile: DatasetProfile,
    cfg: SignificanceConfig | None = None,
    reference_model: str | None = None,
) -> RobustnessReport:
    """Assess every intervention model in ``records`` against the fit.

    The reference model's OOD accuracy (per regime) anchors relative
    robustness; a regime in which an intervention was measured but the
    reference was not is an error.  The highlight flag is computed only
    when the intervention has a full-shot verdict and at least one
    low-shot verdict; otherwise it is false.
    """
    cfg = cfg or SignificanceConfig()
    records = list(records)
    ref_name = _reference_model_name(records, reference_model)

    ref_ood: dict[str, float] = {}
    for regime in REGIMES:
        rows = select(records, model=ref_name, regime=regime)
        if rows:
            ref_ood[regime] = average_ood(rows, profile)

    intervention_names: list[str] = []
    for rec in select(records, role="intervention"):
        if rec.model not in intervention_names:
            intervention_names.append(rec.model)

    reports: list[InterventionReport] = []
    for name in intervention_names:
        assessments: list[RegimeAssessment] = []
        for regime in _REPORT_REGIME_ORDER:
            if not select(records, model=name, regime=regime):
                continue
            if regime not in ref_ood:
                raise ValueError(
                    f"reference model {ref_name!r} has no records in regime "
                    f"{regime!r} needed by intervention {name!r}"
                )
            point = model_point(records, name, regime, profile)
            verdict = assess_significance(fit, d, point, ref_ood[regime], cfg)
            assessments.append(
                RegimeAssessment(
                    regime=regime,
                    acc_id_pct=100.0 * point.acc_id,
                    acc_ood_pct=100.0 * point.acc_ood,
                    rho_pp=verdict.rho_pp,
                    tau_pp=verdict.tau_pp,
                    improves=verdict.improves,
                    significant=verdict.significant,
                )
            )
        verdicts = [(a.regime, a.significant) for a in assessments]
        has_full = any(tag == "full" for tag, _ in verdicts)
        has_low = any(tag != "full" for tag, _ in verdicts)
        highlight = (
            assess_across_regimes(verdicts) if has_full and has_low else False
        )
        reports.append(
            InterventionReport(
                model=name, regimes=tuple(assessments), highlight=highlight
            )
        )

    return RobustnessReport(
        dataset=profile.name,
        w=fit.w,
        b=fit.b,
        d=d,
        n=fit.n,
        lam=cfg.lam,
        gamma=cfg.gamma,
        reference_model=ref_name,
        interventions=tuple(reports),
    )


def report_to_json(report: RobustnessReport) -> str:
    """Serialize with 2-decimal rho/tau, stable key order, trailing newline."""
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "dataset": report.dataset,
        "fit": {
            "w": report.w,
            "b": report.b,
            "d": report.d,
            "n": report.n,
        },
        "significance": {"lambda": report.lam, "gamma": report.gamma},
        "reference_model": report.reference_model,
        "interventions": [
            {
                "model": ir.model,
                "highlight": ir.highlight,
                "regimes": [
                    {
                        "regime": a.regime,
                        "acc_id_pct": round(a.acc_id_pct, 4),
                        "acc_ood_pct": round(a.acc_ood_pct, 4),
                        "rho_pp": round(a.rho_pp, 2),
                        "tau_pp": round(a.tau_pp, 2),
                        "improves": a.improves,
                        "significant": a.significant,
                    }
                    for a in ir.regimes
                ],
            }
            for ir in report.interventions
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def format_report_table(
    report: RobustnessReport, include_significance: bool = True
) -> str:
    """Aligned plain-text table, one section per regime, rho then tau."""
    lines: list[str] = []
    lines.append(
        f"dataset: {report.dataset}    reference: {report.reference_model}    "
        f"lambda={report.lam:g} gamma={report.gamma:g}"
    )
    lines.append(
        f"fit: w={report.w:.3f} b={report.b:.3f} d={report.d:.3f} (n={report.n})"
    )
    name_width = max(
        [len("intervention")] + [len(ir.model) for ir in report.interventions]
    )
    header = f"{'intervention':<{name_width}}  {'rho':>8}  {'tau':>8}  {'improves':>8}"
    if include_significance:
        header += f"  {'significant':>11}"
    for regime in _REPORT_REGIME_ORDER:
        rows = []
        for ir in report.interventions:
            for a in ir.regimes:
                if a.regime == regime:
                    rows.append((ir.model, a))
        if not rows:
            continue
        lines.append("")
        lines.append(_REGIME_TITLES[regime])
        lines.append(header)
        for model, a in rows:
            line = (
                f"{model:<{name_width}}  {a.rho_pp:>8.2f}  {a.tau_pp:>8.2f}  "
                f"{'yes' if a.improves else 'no':>8}"
            )
            if include_significance:
                line += f"  {'yes' if a.significant else 'no':>11}"
            lines.append(line)
    if include_significance:
        highlighted = [ir.model for ir in report.interventions if ir.highlight]
        lines.append("")
        lines.append(
            "highlighted (significant in full-shot and majority of low-shot "
            "regimes): " + (", ".join(highlighted) if highlighted else "none")
        )
    return "\n".join(lines) + "\n"


def fit_to_json(
    dataset: str,
    fit: LogitLinearFit,
    d: float,
    mae_pp: float,
    r2: float,
) -> str:
    """The fit-parameters JSON document: {dataset, w, b, d, n, mae_pp, r2}."""
    doc = {
        "dataset": dataset,
        "w": fit.w,
        "b": fit.b,
        "d": d,
        "n": fit.n,
        "mae_pp": mae_pp,
        "r2": r2,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_fit_json(path: str | Path) -> tuple[LogitLinearFit, float]:
    """Load fit parameters from JSON; returns (fit, d).

    Hand-written parameter files need only ``w`` and ``b``; ``d`` defaults
    to 0 and ``n`` (unknown for externally supplied parameters) to the
    minimum fittable count.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    missing = [k for k in ("w", "b") if k not in data]
    if missing:
        raise ValueError(f"{path}: fit JSON missing keys {missing}")
    fit = LogitLinearFit(
        w=float(data["w"]),
        b=float(data["b"]),
        n=int(data.get("n", 3)),
        transform=data.get("transform", "log-odds"),
    )
    d = float(data.get("d", 0.0))
    if not math.isfinite(d) or d < 0.0:
        raise ValueError(f"{path}: d must be finite and >= 0, got {d!r}")
    return fit, d
