"""Walk through the analytic pipeline on the bundled re-entrant line.

A job flows 1 -> 2 -> 3 -> 4 -> 5 across two stations (1, 2, 1, 2, 1); the
first station serves newest-step-first ({5,3,1}), the second oldest-first
({2,4}).  We validate the config, look at the exact first-order quantities,
then print the heavy-traffic mean-queue approximations for each lowest-
priority class and the resulting cycle-time estimate.

Run:  python demos/01_analyze_reentrant_line.py
"""

from pathlib import Path

import sbpq

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "2s5c_rho96_99.yaml"

cfg = sbpq.load_config(CONFIG)
print(f"network: {cfg.name}")

problems = sbpq.validate_spec(cfg.spec)
print(f"validation: {'clean' if not problems else problems}")

lam = sbpq.solve_traffic(cfg.spec)
rho, flagged = sbpq.traffic_intensities(cfg.spec)
print(f"per-class throughput: {lam.round(6).tolist()}")
print(f"station loads: {rho.round(4).tolist()} (overloaded: {flagged})")

# the exact idle-probability law: P(all classes at priority >= k empty)
beta = sbpq.idle_probabilities(cfg.spec, cfg.policy)
for k, b in enumerate(beta):
    print(f"  class {k + 1}: sees its station clear with probability {b:.4f}")

report = sbpq.analyze(cfg.spec, cfg.policy)
print(f"\nassumption status: {report.status}")
print(f"reflection matrix R:\n{report.bundle.R.round(6)}")
print(f"P-matrix verdict: {report.bundle.diagnostics.p_matrix.status}")

print("\nheavy-traffic approximations (lowest-priority class per station):")
for c in report.constants:
    g = sbpq.GeometricApprox(c.mean_estimate)
    print(f"  class {c.user_class + 1}: E[Z] ~ {c.mean_estimate:8.3f} jobs   "
          f"(sigma^2 {c.sigma2:.4f}, geometric p {c.geom_p:.5f}, "
          f"90% quantile {g.quantile(0.9)})")
print(f"cycle-time estimate: {report.cycle_time:.3f}")

# the closed-form oracle for this very topology agrees with the pipeline
d1, d4 = sbpq.two_station_reentrant_d(cfg.spec)
by_user = report.constants_by_user_class()
print(f"\nclosed-form cross-check: d1 {d1:.6f} vs {by_user[0].exp_mean:.6f}, "
      f"d4 {d4:.6f} vs {by_user[3].exp_mean:.6f}")
