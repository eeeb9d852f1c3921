# End-to-end Monte Carlo of the three receivers: collisions, threshold
# synchronization, identification and message decoding.
from sasmac.prob_core import Channel, Distribution
from sasmac.sim import SimConfig, run_experiment

Q = Channel.bsc(0.11)
P = Distribution.bernoulli(0.5)

for pipeline in ("thm2", "thm3", "thm4"):
    for n in (20, 40, 80):
        cfg = SimConfig(pipeline, n=n, A=8, K=2, M=2, channels=[Q], inputs=[P], trials=1000, seed=7)
        s = run_experiment(cfg).summary
        print(
            f"{pipeline} n={n:3d}  global {s['global_error_rate']:.4f}"
            f"  non-collision {s['non_collision_error_rate']:.4f}"
            f"  collisions {s['collisions']}"
        )

# global error never drops below the collision floor 1 - (A-1)/A = 0.125
