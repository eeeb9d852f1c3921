# Mean cycle gain over all r-cycles of random weighted complete graphs
# never exceeds the power mean of the squared edge weights.
import numpy as np

from sasmac.graph_cycles import WeightedCompleteGraph, count_cycles, lemma1_check, n_edges

rng = np.random.default_rng(0)
worst = 0.0
for k in range(3, 8):
    for r in range(2, k + 1):
        for _ in range(50):
            g = WeightedCompleteGraph(k, rng.uniform(0, 1, n_edges(k)))
            lhs, rhs, holds = lemma1_check(g, r)
            assert holds
            worst = max(worst, lhs / rhs)
    print(f"k={k}  cycles per length {[count_cycles(k, r) for r in range(2, k + 1)]}")
print(f"worst lhs/rhs over all draws {worst:.4f}")
