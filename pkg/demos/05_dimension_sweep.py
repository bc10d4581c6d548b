"""Exact W_1 against sliced SW_1 between two independent samples as the dimension grows.

The gap ratio E dist(n=128) / E dist(n=32) says how much of the distance
survives a fourfold increase in sample size.  For W it creeps towards 1 with
d; for SW it stays near 1/2.
"""

from swlab import w_vs_sw_dimension_sweep

rep = w_vs_sw_dimension_sweep(replicates=5, seed=6)
print("  d   W gap ratio   SW gap ratio   W/SW")
for d, _, _, _, _, wr, sr, ratio in rep.tables["dim_sweep_ratios"].rows:
    print(f"{d:>3}   {wr:11.3f}   {sr:12.3f}   {ratio:5.1f}")
for d, t in rep.timings.items():
    print(f"{d}: {1e3 * t['w_seconds_per_eval']:.1f} ms per exact W, {1e3 * t['sw_seconds_per_eval']:.2f} ms per SW")
