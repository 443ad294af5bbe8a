"""How slowly the single-big-jump asymptotic kicks in for a lognormal pair.

X1 ~ Lognormal(0, 1) and X2 ~ Lognormal(0, 3/4), independent. The asymptotic
P(S > g) ~ P(X1 > g) + P(X2 > g) is compared with the exact tail (adaptive
quadrature) on a grid of tail probabilities. Even at one in ten billion the
approximation is still more than one percent off.
"""
from polartail.oracle import fig1_curve

print(f"{'-log10 l':>9} {'gamma':>12} {'one term':>10} {'two terms':>10}")
for k, gamma, ell, one, two in fig1_curve(points=14, lo=1, hi=14):
    print(f"{k:9.1f} {gamma:12.4f} {one:10.5f} {two:10.5f}")
