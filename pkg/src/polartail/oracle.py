"""Exact and quadrature references.

Two ``Exp(1)`` summands have closed-form sum and angle densities under
independence, a Clayton(1) copula and an Ali-Mikhail-Haq(-1) copula. For
any two-dimensional problem the tail probability is computed by adaptive
quadrature; this is the ground truth used to check the estimators.
"""
from __future__ import annotations

import math
import warnings
from functools import partial

import numpy as np
from scipy import integrate, optimize

from .copulas import AMH, Clayton, Independent, ProblemSpec
from .marginals import Exponential, Lognormal
from .polar import ExactConditional, ExactSum

__all__ = [
    "KINDS",
    "exp_spec",
    "exp_sum_density",
    "exp_sum_tail",
    "exp_angular_density",
    "exp_angular_cdf",
    "exact_radial",
    "exact_angular",
    "sum_density_2d",
    "brute_truth_2d",
    "solve_gamma_2d",
    "FIG1_SPEC",
    "fig1_ratio",
    "fig1_curve",
]

KINDS = ("ind", "clayton", "amh")


def _kind(kind: str) -> str:
    k = kind.lower()
    aliases = {"ind": "ind", "independent": "ind", "clayton": "clayton", "clayton1": "clayton",
               "cla": "clayton", "amh": "amh", "amhneg1": "amh"}
    if k not in aliases:
        raise ValueError(f"unknown example kind {kind!r}")
    return aliases[k]


def exp_spec(kind: str) -> ProblemSpec:
    """Two Exp(1) summands with the copula of ``kind``."""
    cop = {"ind": Independent(2), "clayton": Clayton(1.0, 2), "amh": AMH(-1.0, 2)}[_kind(kind)]
    return ProblemSpec([Exponential(1.0), Exponential(1.0)], cop)


def _positive(s):
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("s must be positive")
    return s


def _clayton_sum_density(s):
    # series for small s: numerator sum_{n>=2} (2n-2) s^(2n) / (2n)!,
    # denominator (cosh s - 1)^2 = 4 sinh(s/2)^4
    small = s < 0.5
    ss = np.where(small, s, 0.5)
    num = np.zeros_like(ss)
    for n in range(2, 14):
        num += (2 * n - 2) * ss ** (2 * n) / math.factorial(2 * n)
    series = num / (4.0 * np.sinh(ss / 2) ** 4)
    sl = np.where(small, 1.0, s)
    e = np.exp(-sl)
    large = 4.0 * e * ((sl / 2 - 1) + 2 * e - (1 + sl / 2) * e * e) / (-np.expm1(-sl)) ** 4
    return np.where(small, series, large)


def exp_sum_density(kind: str, s):
    """Density of ``X_1 + X_2`` for the Exp(1) examples."""
    s = _positive(s)
    k = _kind(kind)
    if k == "ind":
        return s * np.exp(-s)
    if k == "clayton":
        return _clayton_sum_density(s)
    # 8 csch(s)^3 sinh(s/2)^4 == tanh(s/2) sech(s/2)^2
    h = s / 2
    return np.tanh(h) * (2 * np.exp(-h) / (1 + np.exp(-2 * h))) ** 2


def exp_sum_tail(kind: str, s):
    """``P(X_1 + X_2 > s)`` for the Exp(1) examples."""
    s = _positive(s)
    k = _kind(kind)
    if k == "ind":
        return (1 + s) * np.exp(-s)
    if k == "clayton":
        e = np.exp(-s)
        return 2 * ((s - 1) * e + e * e) / np.expm1(-s) ** 2
    h = s / 2
    return (2 * np.exp(-h) / (1 + np.exp(-2 * h))) ** 2


def _check_theta(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0) or np.any(theta >= 1):
        raise ValueError("theta must lie in (0, 1)")
    return theta


def _clayton_den(s):
    # 2 + s - 2e^s + s e^s, scaled by e^-s for s >= 1
    small = s < 1
    ss = np.where(small, s, 0.5)
    series = np.zeros_like(ss)
    for m in range(3, 30):
        series += (m - 2) * ss**m / math.factorial(m)
    sl = np.where(small, 1.0, s)
    scaled = (sl - 2) + (sl + 2) * np.exp(-sl)
    return small, series, scaled


def exp_angular_density(kind: str, s, theta):
    """Density of ``Theta_1 = X_1 / S`` given ``S = s``."""
    s = _positive(s)
    theta = _check_theta(theta)
    s, theta = np.broadcast_arrays(s, theta)
    k = _kind(kind)
    if k == "ind":
        return np.ones(s.shape)
    if k == "clayton":
        small, series, scaled = _clayton_den(s)
        num = s * np.expm1(s * (1 - theta)) * np.expm1(s * theta)
        num_scaled = s * np.expm1(-s * (1 - theta)) * np.expm1(-s * theta)
        with np.errstate(over="ignore", invalid="ignore"):
            return np.where(small, num / series, num_scaled / scaled)
    return s * (np.exp(-s * theta) + np.exp(-s * (1 - theta))) / (-2 * np.expm1(-s))


def exp_angular_cdf(kind: str, s, theta):
    """CDF of ``Theta_1`` given ``S = s`` (closed-form integrals of the densities)."""
    s = np.asarray(s, dtype=float)
    t = np.clip(np.asarray(theta, dtype=float), 0.0, 1.0)
    k = _kind(kind)
    if k == "ind":
        return t + 0.0 * s
    if k == "clayton":
        small, series, scaled = _clayton_den(s)
        # integral of s expm1(s(1-x)) expm1(s x) over (0, t)
        with np.errstate(over="ignore", invalid="ignore"):
            raw = s * t * (np.exp(s) + 1) - (np.exp(s) - np.exp(s * (1 - t))) - np.expm1(s * t)
            sc = (s * t * (1 + np.exp(-s)) - (1 - np.exp(-s * t)) - (np.exp(s * (t - 1)) - np.exp(-s)))
            return np.clip(np.where(small, raw / series, sc / scaled), 0.0, 1.0)
    num = -np.expm1(-s * t) + (np.exp(-s * (1 - t)) - np.exp(-s))
    return num / (-2 * np.expm1(-s))


def exact_radial(kind: str) -> ExactSum:
    k = _kind(kind)
    with np.errstate(divide="ignore"):
        return ExactSum(lambda s: np.log(exp_sum_density(k, s)),
                        lambda s: np.log(exp_sum_tail(k, s)), name=k)


def exact_angular(kind: str) -> ExactConditional:
    k = _kind(kind)
    if k == "ind":
        return ExactConditional.uniform()
    return ExactConditional(lambda s, t: np.log(exp_angular_density(k, s, t)),
                            partial(exp_angular_cdf, k), name=k)


# ---------------------------------------------------------------------------
# quadrature truth for d = 2

def _breaks(m, lo, hi):
    qs = [1e-12, 1e-6, 1e-3, 0.05, 0.5, 0.95, 1 - 1e-3, 1 - 1e-6, 1 - 1e-12]
    pts = [float(m.ppf(q)) for q in qs]
    return sorted({p for p in pts if lo < p < hi})


def sum_density_2d(spec: ProblemSpec, s: float, epsrel: float = 1e-11) -> float:
    """``f_S(s)`` as the line integral of ``f_X`` along ``x_1 + x_2 = s``.

    Written in angle form ``s * int f_X(s t, s (1 - t)) dt``.
    """
    if spec.d != 2:
        raise ValueError("sum_density_2d needs d = 2")
    m1, m2 = spec.marginals
    lo, hi = m1.lower, s - m2.lower
    if hi <= lo:
        return 0.0

    def integrand(x1):
        return float(np.exp(spec.joint_logpdf(np.array([x1, s - x1]))))

    pts = sorted(set(_breaks(m1, lo, hi) + [s - p for p in _breaks(m2, lo, hi)] + [0.5 * (lo + hi)]))
    pts = [p for p in pts if lo < p < hi]
    edges = [lo] + pts + [hi]
    total = math.fsum(integrate.quad(integrand, a, b, epsabs=0.0, epsrel=epsrel, limit=200)[0]
                      for a, b in zip(edges[:-1], edges[1:]))
    return total


def brute_truth_2d(spec: ProblemSpec, gamma: float, epsrel: float = 1e-10) -> float:
    """``P(X_1 + X_2 > gamma)`` by adaptive quadrature.

    Conditions on ``X_1``:
    ``P(S > gamma) = sf_1(gamma - a_2) + int_{a_1}^{gamma - a_2} f_1(x) P(X_2 > gamma - x | X_1 = x) dx``
    with ``a_i`` the lower support bounds, so the inner integral is exact.
    """
    if spec.d != 2:
        raise ValueError("brute_truth_2d needs d = 2")
    m1, m2 = spec.marginals
    a1, a2 = m1.lower, m2.lower
    top = gamma - a2
    head = float(m1.sf(top)) if top > a1 else 1.0
    if top <= a1:
        return 1.0

    def integrand(x):
        cond = spec.conditional_sf(1, np.array([gamma - x]), np.array([[x]]))
        return float(m1.pdf(x) * cond[0])

    pts = set(_breaks(m1, a1, top))
    pts.update(gamma - p for p in _breaks(m2, a1, top))
    pts.add(0.5 * (a1 + top))
    pts = sorted(p for p in pts if a1 < p < top)
    edges = [a1] + pts + [top]
    pieces = []
    with warnings.catch_warnings():
        # strongly tail-dependent copulas give a sharply peaked conditional
        # survival near the diagonal and quad flags roundoff there; the totals
        # still agree with crude Monte Carlo and the polar estimator
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(integrand, a, b, epsabs=1e-300, epsrel=epsrel, limit=400)
            pieces.append(val)
    return head + math.fsum(pieces)


def solve_gamma_2d(spec: ProblemSpec, target: float, guess: float | None = None) -> float:
    """Threshold ``gamma`` with ``brute_truth_2d(spec, gamma) == target``."""
    def f(log_g):
        return math.log(brute_truth_2d(spec, math.exp(log_g))) - math.log(target)

    if guess is None:
        # the largest single-summand quantile is a good start for heavy tails
        guess = max(float(m.isf_log(math.log(target))) for m in spec.marginals)
    lo = hi = math.log(max(guess, 1e-8))
    while f(lo) < 0:
        lo -= 0.5
    while f(hi) > 0:
        hi += 0.5
    return math.exp(optimize.brentq(f, lo, hi, xtol=1e-12, rtol=1e-12))


# ---------------------------------------------------------------------------
# slow convergence of the lognormal-sum asymptotic

FIG1_SPEC = ProblemSpec([Lognormal(0.0, 1.0), Lognormal(0.0, 0.75)])


def fig1_ratio(gamma: float, terms: str = "two", spec: ProblemSpec = FIG1_SPEC) -> float:
    """Asymptotic-over-exact ratio ``sum_i sf_i(gamma) / P(S > gamma)``.

    ``terms="one"`` keeps only the dominant (first) survival term.
    """
    t = terms.lower().replace("_", "")
    if t in ("two", "twoterms"):
        asym = float(sum(m.sf(gamma) for m in spec.marginals))
    elif t in ("one", "oneterm"):
        asym = float(spec.marginals[0].sf(gamma))
    else:
        raise ValueError(f"unknown terms {terms!r}")
    return asym / brute_truth_2d(spec, gamma)


def fig1_curve(points: int = 15, lo: float = 1.0, hi: float = 14.0, spec: ProblemSpec = FIG1_SPEC):
    """Rows ``(-log10 l, gamma, l, one_term_ratio, two_term_ratio)`` on a log grid of ``l``."""
    rows = []
    guess = None
    for k in np.linspace(lo, hi, points):
        target = 10.0 ** (-k)
        gamma = solve_gamma_2d(spec, target, guess)
        guess = gamma
        ell = brute_truth_2d(spec, gamma)
        one = float(spec.marginals[0].sf(gamma)) / ell
        two = float(sum(m.sf(gamma) for m in spec.marginals)) / ell
        rows.append((float(k), gamma, ell, one, two))
    return rows
