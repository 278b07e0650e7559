"""A stationary product measure that is not ergodic although sum lambda_i = oo.

With lambda_i = (2 i^2 + 1)! and b(n, k) = 1/(2(k+1))!, site k carries k^2
particles with probability so close to one that the whole profile
eta_k = k^2 (k >= 3) has positive probability.  The series criterion cannot
decide this case; the certificate does.
"""
from cpslab.counterexample import build_counterexample, joint_verdict, nontriviality_certificate, profile_concentration

s = build_counterexample(100)
print(f"detailed balance residual {s.detailed_balance_residual:.1e}")
c = profile_concentration(100)
print(f"modes at k^2: {c['modes_ok']}; sum of deviation probabilities {c['deficit_sum']:.4f} <= {c['bound']:.4f}")
for k in (1, 2, 3, 5, 10):
    print(f"  P[eta_{k} = {k * k}] = {c['mode_probability'][k]:.10f}")
cert = nontriviality_certificate(3, 100)
print(f"P[eta_k = k^2 for all k >= 3] >= {cert['lower_bound']:.4f}")
print(joint_verdict())
