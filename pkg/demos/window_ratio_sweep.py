"""Measured vs predicted rare-window probabilities across row sizes.

The headline asymptotic statement says

    P(S_n in I_n)  ~  C(n, k) * (rho2 - rho1) * n^(-alpha k) * K(rho),

with I_n the window [n(rho1 + mu_n), n(rho2 + mu_n)].  This script measures
the left side by plain hit counting (and the dominant-configuration
estimator as a cross-check), computes the right side, and tracks their
ratio as n doubles repeatedly.  The drift of the ratio toward 1 is the
whole point; at small n the bulk's own fluctuations smear the window and
the ratio sits well below 1.

Run:  python3 demos/window_ratio_sweep.py     (about a minute)
"""

import bigjumps as bj

tp = bj.TruncatedPareto(c=1.5, alpha=1.5)
window = bj.RhoWindow(0.5, ("fixed", 0.1))
krho = bj.condensation_constant(tp.h, 0.5, 1)

print(f"scheme: conditioned Pareto, alpha = {tp.alpha}, target excess rho = 0.5 (k = 1)")
print(f"window width 0.1 centered at rho; K = h(0.5) = {krho.value:.4f}\n")

rows = bj.ratio_sweep(
    tp, window, [64, 256, 1024, 4096], samples_per_n=200_000, krho=krho, seed=3,
    structured_samples=200_000,
)
print(f"{'n':>5} {'measured':>11} {'(se)':>9} {'predicted':>11} {'ratio':>7} {'structured/rhs':>15}")
for row in rows:
    print(
        f"{row['n']:5d} {row['prob']:11.3e} {row['std_error']:9.1e} "
        f"{row['rhs']:11.3e} {row['ratio']:7.3f} {row.get('structured_ratio', float('nan')):15.3f}"
    )

print
print("""
Reading the table: the hit-counting column is the truth (up to sampling
noise); at n = 64 the window is narrower than the bulk fluctuation scale
and the measured probability is only ~0.35x the prediction, but the ratio
climbs toward 1 as n grows.  The structured estimator prices the dominant
configuration directly (one conditioned big jump times a bulk factor), so
it tracks the prediction itself rather than the finite-n truth; the gap
between the two columns is exactly the finite-size correction that the
asymptotic statement absorbs into 1 + o(1).""")

print("=== exact-oracle variant (discrete grid scheme) ===")
dg = bj.DiscreteGrid(pmf=(0.9, 0.05, 0.03, 0.02))
w = bj.RhoWindow(0.45, ("fixed", 0.3))
kr = bj.condensation_constant(bj.uniform_h, 0.45, 1)
for row in bj.ratio_sweep(dg, w, [16, 32, 64], 0, kr, alpha=1.5):
    print(f"n={row['n']:3d}: exact P = {row['prob']:.5e} (method {row['method']})")
print("Grid schemes route through the exact n-fold convolution, which is what")
print("the hit-counting estimator is validated against in the test suite.")
