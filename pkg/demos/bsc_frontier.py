# Rate frontiers over a BSC(0.11) as the false-alarm exponent grows.
# The common-codebook region sits above the block-ML region, and the
# synchronization-limited converse caps both.
import numpy as np

from sasmac.prob_core import Channel, Distribution, mutual_info
from sasmac.regions import BscClosedForms, thm2_frontier, thm4_frontier, thm5_frontier

Q = Channel.bsc(0.11)
nu = 0.02
cap = mutual_info(Distribution.bernoulli(0.5), Q)
print(f"capacity {cap:.6f} nats, idle exponent g(1/2) {BscClosedForms(0.11).g_half:.6f}")

print(" alpha    common   block-ML  converse  (binding)")
for alpha in np.linspace(0.05, 0.3, 6):
    f2 = thm2_frontier(Q, alpha, nu, resolution=100, lam_points=101)
    f4 = thm4_frontier(Q, alpha, nu, resolution=100)
    f5 = thm5_frontier(Q, alpha, nu, resolution=60)
    print(f"{alpha:6.3f}  {f2.R_star:8.4f}  {f4.R_star:8.4f}  {f5.R_star:8.4f}  ({f2.binding}, {f4.binding})")

# block-ML with a uniform input is linear: alpha + nu + R stays on g(1/2)
f = thm4_frontier(Q, 0.1, nu, P=Distribution.bernoulli(0.5))
print("alpha + nu + R at uniform input:", round(0.1 + nu + f.R_star, 6))
