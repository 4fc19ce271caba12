"""What a conditioned row actually looks like: the big-jump decomposition.

Conditioned on S_n landing in the rare window, the theory says the row
splits into exactly k = ceil(rho) coordinates of order n (the condensate)
plus a bulk that still obeys the law of large numbers, and that the k
normalized jump sizes follow the density h(x_1)...h(x_k)/K on the slab
sum(x) = rho.

Both statements are asymptotic, and this script shows the approach as well
as the honest pre-asymptotic picture: at moderate n with a small threshold
eps the "bulk" itself contains many coordinates above eps*n, so the clean
k-jump structure only crystallizes once n*P(W > eps*n) is small.

Run:  python3 demos/conditional_structure.py    (about two minutes)
"""

import collections

import numpy as np

import bigjumps as bj

tp = bj.TruncatedPareto(c=1.5, alpha=1.5)
window = bj.RhoWindow(0.5, ("fixed", 0.1))
eps = window.default_eps(tp.alpha)
print(f"scheme alpha = 1.5, rho = 0.5 (k = 1), decomposition threshold eps = {eps}")
print(f"{'n':>6} {'hits':>5} {'E#big':>7} {'exactly-1':>10} {'>=2 jumps':>10}")
for i, n in enumerate((64, 512, 4096, 16384)):
    cond = bj.conditional_profiles(
        tp, n, window, eps=eps, target_hits=400, max_samples=2_000_000, seed=10 + i
    )
    counts = [p.n_big for p in cond.profiles]
    exactly = np.mean([c == 1 for c in counts])
    extra = np.mean([c >= 2 for c in counts])
    expected_bigs = n * tp.tail(n, eps * n)
    print(f"{n:6d} {cond.hits:5d} {expected_bigs:7.2f} {exactly:10.3f} {extra:10.3f}")
print("""
The middle column is n*P(W > eps*n), the typical number of threshold
crossers in an unconditioned row.  Until that count drops below ~0.1 the
conditioned rows cannot show "exactly one big jump"; with eps = 0.05 and
alpha = 1.5 that needs n of order a million.  The trend in the last two
columns is the limiting structure emerging at the achievable scale.""")

print("=== with a threshold matched to the jump scale, the structure is visible ===")
for i, n in enumerate((64, 512, 4096)):
    cond = bj.conditional_profiles(
        tp, n, window, eps=0.3, target_hits=400, max_samples=2_000_000, seed=20 + i
    )
    mu_ref = cond.mu_ref
    frac = bj.structure_fraction(cond, k=1, gamma=0.25, mu_ref=mu_ref, rho=0.5)
    extra = np.mean([p.n_big >= 2 for p in cond.profiles])
    print(f"n={n:5d}: exactly-1-jump-with-gamma-windows fraction {frac:.3f}, >=2 bigs {extra:.3f}")

print("\n=== the jump sizes themselves (k = 2, heavier tail) ===")
tp12 = bj.TruncatedPareto(c=1.2, alpha=1.2)
rho, k, n = 1.5, 2, 256
w2 = bj.RhoWindow(rho, ("fixed", 0.2))
krho = bj.condensation_constant(tp12.h, rho, k, tol=1e-8)
cond = bj.conditional_profiles(tp12, n, w2, eps=0.4, target_hits=400, max_samples=400_000, seed=30)
res = bj.jump_size_gof(cond, tp12.h, rho, k, krho, bins=8, seed=31)
hist = collections.Counter(p.n_big for p in cond.profiles)
print(f"big-jump counts among {cond.hits} hits: {dict(sorted(hist.items()))}")
print(f"chi-square vs the limit density: stat = {res.statistic:.2f} on {res.dof} dof, p = {res.pvalue:.3f}")
print(f"({res.used_profiles} first-jump values used, {res.out_of_support} outside the support,")
print(f" {res.skipped_profiles} profiles skipped for not having exactly {k} big jumps)")

print("\n=== local limit for the k-fold sum alone ===")
for i, n in enumerate((256, 1024, 4096)):
    est = bj.jump_sum_window_prob(tp12, 2, n, 1.4, 1.6, samples=1_000_000, seed=40 + i)
    rhs = 0.2 * n ** (-2 * tp12.alpha) * krho.value
    print(f"n={n:5d}: P(T_2 in window) = {est.prob:.3e} +- {est.std_error:.1e}, ratio to prediction {est.prob / rhs:.4f}")
print("Importance boosting (both coordinates conditioned above the forced-big")
print("threshold, with the exact conditioning weight) reaches these")
print("probabilities at the 1e-9 scale with a few seconds of sampling.")
