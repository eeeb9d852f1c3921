# ML identification error for four Bernoulli users against the
# cycle-sum upper bound and the pairwise lower trend.
from sasmac.identification import (
    IdentificationInstance,
    mc_identification_error,
    pe_lower_bound,
    pe_upper_bound,
)
from sasmac.prob_core import Distribution

dists = [Distribution.bernoulli(p) for p in (0.1, 0.35, 0.65, 0.9)]

print("  n    P_e(MC)   stderr    trend     upper")
for n in (5, 10, 20, 40, 80):
    inst = IdentificationInstance(dists, n)
    p_hat, se = mc_identification_error(inst, trials=4000, seed=n)
    print(f"{n:3d}  {p_hat:8.4f}  {se:7.4f}  {pe_lower_bound(inst):8.4f}  {pe_upper_bound(inst):8.4f}")

# the upper bound is vacuous for short blocks and holds once finite.
# the lower column drops polynomial prefactors, so it only matches the
# decay exponent and can sit above the finite-n error
