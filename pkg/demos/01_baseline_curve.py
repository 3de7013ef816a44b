"""Fitting a baseline accuracy curve in logit space.

A pool of baseline models, each measured on an in-domain (ID) validation
split and an out-of-distribution (OOD) test split, traces a near-linear
trend once both accuracy axes are logit-transformed.  This script
synthesizes such a pool, fits the curve with ordinary least squares, and
inspects the fit quality statistics.
"""

import numpy as np

from shiftbench import AccuracyPoint, fit_beta, inv_logit, logit, predict_beta

rng = np.random.default_rng(0)

# --- synthesize a standard-model cloud around a known curve --------------
true_w, true_b = 0.85, -0.60
acc_ids = rng.uniform(0.25, 0.85, size=24)
points = [
    AccuracyPoint(x, inv_logit(true_w * logit(x) + true_b + rng.normal(0, 0.12)))
    for x in acc_ids
]
print(f"standard-model cloud: {len(points)} (ID, OOD) accuracy pairs")
print(f"generating curve:     w={true_w}, b={true_b}, logit-space noise 0.12\n")

# --- fit ------------------------------------------------------------------
fit, stats = fit_beta(points)
print("fitted curve (logit space):")
print(f"  slope w        = {fit.w:.4f}")
print(f"  intercept b    = {fit.b:.4f}")
print(f"  residual dev d = {stats.d:.4f}   (n-2 denominator)")
print(f"  MAE            = {stats.mae_pp:.2f} percentage points (accuracy space)")
print(f"  R^2            = {stats.r2:.3f}  (logit space)\n")

# --- predict the expected OOD accuracy at a few ID accuracies -------------
print("expected OOD accuracy along the curve:")
for acc_id in (0.30, 0.50, 0.70, 0.90):
    print(f"  ID {100 * acc_id:5.1f}%  ->  OOD {100 * predict_beta(fit, acc_id):5.1f}%")

# A noiseless cloud is recovered exactly: refit the curve's own predictions.
clean = [AccuracyPoint(x, predict_beta(fit, x)) for x in np.linspace(0.3, 0.8, 10)]
refit, refit_stats = fit_beta(clean)
print("\nrefitting the fitted curve's own predictions (noiseless):")
print(f"  w recovered to {abs(refit.w - fit.w):.2e}, d = {refit_stats.d:.2e}")
