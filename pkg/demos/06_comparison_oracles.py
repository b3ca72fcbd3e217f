"""Brute-force validation of the Gaussian comparison toolbox.

The convergence and moment arguments rest on a few exact inequalities for
Gaussian vectors; at n <= 4 they are checkable by quadrature and Monte
Carlo with certified margins.  This runs a reduced battery; `gmclab
oracles` runs the full one.
"""

import numpy as np

from gmclab import oracles as oc

# interpolation identity, n = 2
sx = oc.GaussianVectorSpec([[0.5, 0.0], [0.0, 0.5]])
sy = oc.GaussianVectorSpec([[0.5, 0.3], [0.3, 0.5]])
v = oc.interpolation_derivative_check(sx, sy, ("power", 0.4), t=0.5)
print("interpolation derivative identity (n=2, phi=u^0.4):")
print(f"  finite difference {v.detail['fd_value']:.10f}")
print(f"  covariance-gap formula {v.detail['formula_value']:.10f}")
print(f"  residual {v.detail['residual']:.2e} within budget {v.budget:.2e}")

# comparison of convex statistics of lognormal sums
v = oc.convex_comparison_check(sx, sy, ("square",))
print(f"\nconvex comparison, F = u^2: margin {v.margin:.6f} "
      f"(closed form 2(e^0.3 - 1) = {2 * (np.exp(0.3) - 1):.6f})")

# sup comparison: higher correlation lowers the expected sup
sx2 = oc.GaussianVectorSpec([[1.0, 0.0], [0.0, 1.0]])
sy2 = oc.GaussianVectorSpec([[1.0, 0.5], [0.5, 1.0]])
v = oc.sup_comparison_check(sx2, sy2, ("identity",), seed=1,
                            n_samples=300000)
print(f"\nsup comparison E[max X] - E[max Y]: {v.margin:.5f} "
      f"(closed form {np.sqrt(1 / np.pi) - np.sqrt(0.5 / np.pi):.5f}), "
      f"certified: {v.certified}")

# normalized exponential sup of iid gaussians: growth exponent below p
for lam2, p in ((1.0, 1.5), (4.0, 0.9)):
    v = oc.sup_moment_growth(lam2, p, seed=3, n_samples=200000)
    print(f"\nsup moment growth lam2={lam2}, p={p}: "
          f"x_hat = {v.detail['x_hat']:.4f} +- {v.detail['x_se']:.4f} "
          f"({'certified < 1' if v.passed else 'not certified'})")

# mollifier tail lemma
gauss = lambda u: np.exp(-u * u / 2.0) / np.sqrt(2.0 * np.pi)
sups = oc.log_convolution_tail(gauss, (10.0, 100.0, 1000.0), 0.6, 2.0)
print("\nlog-convolution tail sup over |z| > A (gaussian profile):")
for a, s in sorted(sups.items()):
    print(f"  A = {a:6.0f}: {s:.3e}")
