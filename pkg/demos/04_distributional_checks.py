"""
Checking simulated laws against their closed-form limits
========================================================

The verification layer ties everything together: it simulates a chain
at size n, rescales, and compares the empirical law at a fixed time
against the corresponding closed-form limit with a KS statistic.  This
script runs one check per marginal statement at desk scale, then the
two cross checks (forward vs backward in distribution, and simulated
path suprema vs suprema of the limiting record).  Desk-scale sizes keep
the runtime around half a minute; the shipped acceptance tests rerun
the same checks at larger n and R.
"""

from perpetuities import (
    compatible_tags,
    preset_law,
    verify_forward_backward_equality,
    verify_functional_sup,
    verify_marginal,
)

N, R = 2000, 500
laws = {
    "cauchy": preset_law("cauchy"),
    "regvar": preset_law("regvar"),
    "heavynegm": preset_law("heavynegm"),
}

# --- marginal laws, every compatible statement -------------------------------
# compatible_tags knows which limit statements apply to which tail
# family; running anything else raises instead of silently comparing
# against the wrong distribution.
print(f"marginal checks at n = {N}, R = {R}")
print("  law         tag              D        threshold  verdict")
reports = []
for name, law in laws.items():
    for tag in compatible_tags(law):
        rep = verify_marginal(tag, law, N, 1.0, R, seed=17)
        reports.append(rep)
        print(f"  {name:<10}  {rep.tag:<15}  {rep.D:.4f}   "
              f"{rep.threshold:.4f}     {'PASS' if rep.passed else 'FAIL'}")

# --- forward vs backward -----------------------------------------------------
eq = verify_forward_backward_equality(laws["cauchy"], N, 1.0, R, seed=18)
print(f"\nforward vs backward, two-sample at the 1% level: "
      f"D = {eq.D:.4f} vs {eq.threshold:.4f} -> "
      f"{'PASS' if eq.passed else 'FAIL'}")

# --- path suprema vs record suprema ------------------------------------------
# The J1 convergence of whole paths implies the running supremum over
# [0, T] converges too; comparing suprema exercises the path geometry,
# not just one marginal.
sup = verify_functional_sup("thm11-backward", laws["cauchy"], N, 1.0, R, seed=19)
print(f"path-sup vs record-sup ({sup.detail}): D = {sup.D:.4f} vs "
      f"{sup.threshold:.4f} -> {'PASS' if sup.passed else 'FAIL'}")

failed = [r for r in (*reports, eq, sup) if not r.passed]
print(f"\n{len(reports) + 2} checks, {len(failed)} failures")
