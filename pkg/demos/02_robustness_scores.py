"""Scoring interventions: effective robustness, relative robustness, significance.

Given a fitted baseline curve, an intervention is scored two ways:

* effective robustness (rho): OOD accuracy above what the curve predicts
  for the intervention's ID accuracy -- "is it above the trend line?"
* relative robustness (tau): OOD accuracy gained over a reference model
  without the intervention -- "did OOD accuracy actually go up?"

An intervention can be above the trend line while losing absolute OOD
accuracy (high rho, negative tau), which is why both are needed.  The
significance test additionally demands the OOD accuracy clear the curve
shifted up by one residual deviation.
"""

from shiftbench import (
    AccuracyPoint,
    LogitLinearFit,
    SignificanceConfig,
    assess_across_regimes,
    assess_significance,
    beta_lambda,
    predict_beta,
)

fit = LogitLinearFit(w=0.85, b=-0.60, n=24)
d = 0.12            # residual deviation of the fit
reference_ood = 0.50  # the reference model's OOD accuracy (full-shot)

interventions = {
    "strong_gain":   AccuracyPoint(0.66, 0.62),  # above curve, beats reference
    "trend_rider":   AccuracyPoint(0.80, 0.63),  # on-trend: big tau, no rho
    "id_sacrifice":  AccuracyPoint(0.40, 0.48),  # above curve, loses OOD ground
    "marginal":      AccuracyPoint(0.66, 0.51),  # improves, misses the bar
}

print(f"baseline curve: w={fit.w} b={fit.b} d={d}; reference OOD "
      f"{100 * reference_ood:.1f}%\n")
header = f"{'intervention':<14} {'rho (pp)':>9} {'tau (pp)':>9} {'improves':>9} {'significant':>12}"
print(header)
print("-" * len(header))
for name, point in interventions.items():
    verdict = assess_significance(fit, d, point, reference_ood)
    print(
        f"{name:<14} {verdict.rho_pp:>9.2f} {verdict.tau_pp:>9.2f} "
        f"{'yes' if verdict.improves else 'no':>9} "
        f"{'yes' if verdict.significant else 'no':>12}"
    )

# why "marginal" fails: the shifted curve sets the significance bar
point = interventions["marginal"]
bar = beta_lambda(fit, d, 1.0, point.acc_id)
print(f"\nthe significance bar at ID {100 * point.acc_id:.0f}% is "
      f"{100 * bar:.2f}% OOD (curve {100 * predict_beta(fit, point.acc_id):.2f}% "
      f"shifted by 1 residual deviation);")
print(f"'marginal' reaches only {100 * point.acc_ood:.2f}%.")

# stricter configurations raise the bar further
strict = SignificanceConfig(lam=2.0, gamma=1.0)
verdict = assess_significance(fit, d, interventions["strong_gain"], reference_ood, strict)
print(f"\nwith lam=2, gamma=1pp, 'strong_gain' significant: {verdict.significant}")

# across data regimes: full-shot must pass, plus a strict majority of low-shot
verdicts = [("full", True), ("extreme", True), ("moderate", False), ("high", True)]
print(f"\ncross-regime verdicts {verdicts}")
print(f"highlighted overall: {assess_across_regimes(verdicts)}")
