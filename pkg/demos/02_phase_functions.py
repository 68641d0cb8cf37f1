"""The distance-type phase functions and their degeneracy diagnostics.

For each shipped kind: evaluate value/gradients/mixed Hessian at a sample
pair, show the bordered-determinant values, and scan a fractal measure for
mass near the forbidden set.
"""

import numpy as np

from pinlab import (build_product_cantor, monge_ampere_det, natural_measure,
                    nondegeneracy_scan, phase_function)

x = np.array([0.45, 0.62])
y = np.array([0.71, 0.38])

for kind, params in [("euclidean", {}), ("scaled_euclidean", {"factor": 3.0}),
                     ("dot_product", {}), ("flat_torus", {}),
                     ("sphere_geodesic_chart", {})]:
    phi = phase_function(kind, 2, **params)
    ev = phi.evaluate(x, y)
    det = monge_ampere_det(phi, x, y)
    print(f"{kind:24s} phi={ev.value:.4f} |grad_x|={np.linalg.norm(ev.grad_x):.4f} "
          f"|grad_y|={np.linalg.norm(ev.grad_y):.4f} MA det={det:+.4f}")

# the dot product's determinant is x.y on the nose
pd = phase_function("dot_product", 2)
print("dot_product det - x.y =", monge_ampere_det(pd, x, y) - float(x @ y))

# forbidden sets: the euclidean diagonal, the scaled diagonal x = 3y,
# the coordinate hyperplanes for the dot product
pe = phase_function("euclidean", 2)
print("euclidean diagonal forbidden:", bool(pe.forbidden(x, x)))
ps = phase_function("scaled_euclidean", 2, factor=3.0)
print("x = 3y forbidden:", bool(ps.forbidden(3 * y, y)))
print("dot at x = 0 forbidden:", bool(pd.forbidden(np.zeros(2), y)))

# Monte Carlo scan: the diagonal carries no mu x mu mass for distinct draws
mu = natural_measure(build_product_cantor(2, 1 / 3, 5))
res = nondegeneracy_scan(pe, mu, pair_count=20_000, tolerance=1e-9, seed=2,
                         exclude_self=True)
print(f"euclidean scan on the Cantor measure: forbidden mass "
      f"{res.forbidden_mass_estimate}, min |grad| {res.min_grad_norm:.3f}, "
      f"min |MA det| {res.min_ma_det_abs:.3f}")
