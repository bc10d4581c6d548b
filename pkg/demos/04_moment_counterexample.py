"""Point masses at n^(1/3) e_n: second moments blow up, yet the sliced distance to delta_0 can vanish.

The squared distance is n^(2/3) E<theta, e_n>^2.  With an isotropic reference
the second factor is 1/d for every n, so inside a fixed truncation the
distance grows like n^(1/3).  A reference with decaying eigenvalues makes
E<theta, e_n>^2 fall faster than n^(-2/3), and the distance goes to zero.
"""

from swlab import GaussianReference, counterexample_run

for ref in (GaussianReference.isotropic(256), GaussianReference.poly(1.0, 256)):
    rep = counterexample_run(ref, n_list=range(1, 201), dirs=10_000, seed=5)
    rows = {r[0]: r for r in rep.main.rows}
    print(f"reference {ref.family}: slope of log SW_2 vs log n = {rep.summary['slope']:.3f}")
    for n in (1, 10, 100, 200):
        print(f"  n={n:>3}  SW_2 {rows[n][1]:.4f}  M_2 {rows[n][4]:.3f}")
