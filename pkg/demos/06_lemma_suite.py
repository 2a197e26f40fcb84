"""Run the randomized identity and inequality checks.

These are the building blocks of the entropy argument checked in
isolation: a pointwise logarithmic inequality, the closed-form entropy
between two Maxwellians, the Maxwellian moment formulas and a finite
difference test of the material derivative of log M. Each line reports
the worst case over the samples against its tolerance.
"""
from bgkhydro.verification import run_verification

for c in run_verification(seed=0):
    print(f"{'ok  ' if c.passed else 'FAIL'} {c.name:26s} worst={c.measured:10.3e} tol={c.tolerance:g}")
