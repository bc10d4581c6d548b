"""How fast the sliced distance between a sample and its law shrinks.

A reduced version of the rate experiment: the mean estimate is printed next
to the constant times n^(-1/2p), and the fitted log-log slope next to the
bound's slope -1/(2p).  The measured slope can be steeper; the bound is not tight.
"""

from swlab import MeasureSpec, rate_experiment

for p in (1, 2):
    rep = rate_experiment(MeasureSpec.isotropic_gaussian(8), p, 4 * p, n_grid=(100, 316, 1000, 3162),
                          replicates=10, dirs_per_estimate=256, seed=4)
    print(f"p={p}  constant C = {rep.summary['constant']:.3f}")
    for n, mean, se, bound in rep.tables["rate_summary"].rows:
        print(f"  n={n:>5}  mean {mean:.4f} +- {se:.4f}  bound {bound:.4f}")
    print(f"  slope {rep.summary['slope']:.3f}; the bound decays with slope {-1 / (2 * p):.2f}\n")
