"""L1-polar importance sampling for ``P(X_1 + ... + X_d > gamma)``.

The change of variables ``x -> (s, theta) = (sum(x), x / sum(x))`` has
Jacobian ``|s|**(d-1)`` when ``theta`` is parametrized by its first ``d-1``
coordinates (the last one is fixed by ``sum(theta) == 1``). All angular
densities below use that same reference measure, so likelihood ratios are
consistent.

The estimator samples ``S`` from a radial model truncated to ``S > gamma`` and
``Theta | S`` from an angular model, and returns

    asym_prefactor * mean(f_{S,Theta}(S, Theta) / (c_S f_rad(S) g(Theta | S)))

where ``asym_prefactor = c_S * radial_tail(gamma)`` is the asymptotic
approximation of the tail and the mean is its Monte Carlo correction factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .copulas import ProblemSpec
from .marginals import Marginal, Weibull, _open_uniform
from .results import EstimatorResult, relative_error, run_replicates

__all__ = [
    "PolarPoint",
    "to_polar",
    "from_polar",
    "polar_joint_logpdf",
    "RadialModel",
    "SubexpDominant",
    "LightWeibullProp1",
    "ExactSum",
    "AngularModel",
    "OptimisticInd",
    "OptimisticDep",
    "LightWeibullGaussian",
    "ExactConditional",
    "optimistic_weights",
    "polar_is_estimate",
]


# ---------------------------------------------------------------------------
# coordinates

@dataclass(frozen=True)
class PolarPoint:
    s: float
    theta: np.ndarray


def to_polar(x) -> PolarPoint:
    x = np.asarray(x, dtype=float)
    s = float(np.sum(x))
    if s == 0.0:
        raise ValueError("L1-polar coordinates need a nonzero sum")
    return PolarPoint(s, x / s)


def from_polar(p: PolarPoint) -> np.ndarray:
    return p.s * np.asarray(p.theta, dtype=float)


def polar_joint_logpdf(spec: ProblemSpec, s, theta):
    """``log f_X(s theta) + (d-1) log|s|`` (rows of ``theta`` against ``s``)."""
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    x = s[..., None] * theta
    with np.errstate(divide="ignore"):
        return spec.joint_logpdf(x) + (spec.d - 1) * np.log(np.abs(s))


# ---------------------------------------------------------------------------
# radial models

class RadialModel:
    """Asymptotic form ``c_S * f_rad`` of the sum density.

    Subclasses provide ``log_tail``, ``log_pdf`` and ``sample``; the tail is the
    integral of ``f_rad`` over ``(gamma, inf)`` and ``sample`` draws from
    ``f_rad`` truncated to ``(gamma, inf)``.
    """

    c_S = 1.0

    def log_tail(self, gamma):
        raise NotImplementedError

    def log_pdf(self, s):
        raise NotImplementedError

    def sample(self, gamma, rng, size):
        raise NotImplementedError

    def log_asym(self, gamma) -> float:
        return math.log(self.c_S) + float(self.log_tail(gamma))


class SubexpDominant(RadialModel):
    """``f_rad(s) = sum_{i in I} f_i(s)`` for the slowest-decaying summands ``I``."""

    def __init__(self, spec: ProblemSpec, indices):
        self.indices = tuple(int(i) for i in np.atleast_1d(indices))
        if not self.indices:
            raise ValueError("dominant index set is empty")
        self.marginals: tuple[Marginal, ...] = tuple(spec.marginals[i] for i in self.indices)

    def log_tail(self, gamma):
        return logsumexp([m.logsf(gamma) for m in self.marginals], axis=0)

    def log_pdf(self, s):
        return logsumexp([m.logpdf(s) for m in self.marginals], axis=0)

    def tail_weights(self, gamma) -> np.ndarray:
        logs = np.array([float(m.logsf(gamma)) for m in self.marginals])
        return np.exp(logs - logsumexp(logs))

    def sample(self, gamma, rng, size):
        if len(self.marginals) == 1:
            return self.marginals[0].rvs_tail(gamma, rng, size)
        which = rng.choice(len(self.marginals), size=size, p=self.tail_weights(gamma))
        out = np.empty(size)
        for k, m in enumerate(self.marginals):
            mask = which == k
            if mask.any():
                out[mask] = m.rvs_tail(gamma, rng, int(mask.sum()))
        return out

    def __repr__(self):
        return f"SubexpDominant(indices={self.indices})"


class LightWeibullProp1(RadialModel):
    """Tail ``A s**p exp(-b s**beta)`` of an iid light-tailed Weibull sum.

    ``p = beta (d-1)/2``, ``b = d**(1-beta) lam**-beta`` and
    ``A = (2 beta pi/(beta-1))**((d-1)/2) d**-0.5 (lam d)**-p``. The density is
    the exact negative derivative of that tail, which is only positive above
    the turning point ``s_star = (p/(b beta))**(1/beta)``.
    """

    def __init__(self, beta: float, lam: float, d: int):
        if not beta > 1:
            raise ValueError("light-tailed Weibull needs beta > 1")
        if d < 2:
            raise ValueError("need d >= 2")
        self.beta, self.lam, self.d = float(beta), float(lam), int(d)
        self.p = self.beta * (self.d - 1) / 2.0
        self.b = self.d ** (1.0 - self.beta) * self.lam ** (-self.beta)
        self.log_A = (0.5 * (self.d - 1) * math.log(2 * self.beta * math.pi / (self.beta - 1))
                      - 0.5 * math.log(self.d) - self.p * math.log(self.lam * self.d))
        self.s_star = (self.p / (self.b * self.beta)) ** (1.0 / self.beta)

    def _check(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s <= self.s_star):
            raise ValueError(f"Weibull-sum asymptotic is only valid for s > {self.s_star:.6g}")
        return s

    def log_tail(self, gamma):
        s = self._check(gamma)
        return self.log_A + self.p * np.log(s) - self.b * s**self.beta

    def log_pdf(self, s):
        s = self._check(s)
        bracket = self.b * self.beta * s ** (self.p + self.beta - 1) - self.p * s ** (self.p - 1)
        return self.log_A - self.b * s**self.beta + np.log(bracket)

    def sample(self, gamma, rng, size):
        # y = b s^beta turns log T into const - (y - q log y) with q = p/beta;
        # h(y) = y - q log y is increasing and convex past y = q, so Newton
        # started right of the root decreases monotonically onto it.
        self._check(gamma)
        q = self.p / self.beta
        y_g = self.b * gamma**self.beta
        e = -np.log(_open_uniform(rng, size))
        target = y_g - q * math.log(y_g) + e
        y = y_g + e / (1.0 - q / y_g)
        for _ in range(200):
            step = (y - q * np.log(y) - target) / (1.0 - q / y)
            y = y - step
            if np.all(np.abs(step) <= 1e-13 * y):
                break
        else:
            raise RuntimeError("radial inversion did not converge")
        s = (y / self.b) ** (1.0 / self.beta)
        return np.maximum(s, np.nextafter(gamma, np.inf))

    def __repr__(self):
        return f"LightWeibullProp1(beta={self.beta}, lam={self.lam}, d={self.d})"


class ExactSum(RadialModel):
    """Radial model from a known sum density and tail.

    Sampling inverts the tail by vectorized bisection.
    """

    def __init__(self, log_pdf: Callable, log_tail: Callable, name: str = "exact"):
        self._log_pdf = log_pdf
        self._log_tail = log_tail
        self.name = name

    def log_pdf(self, s):
        return self._log_pdf(np.asarray(s, dtype=float))

    def log_tail(self, gamma):
        return self._log_tail(np.asarray(gamma, dtype=float))

    def sample(self, gamma, rng, size):
        target = np.log(_open_uniform(rng, size)) + float(self.log_tail(gamma))
        lo = np.full(size, float(gamma))
        width = np.full(size, max(1.0, abs(gamma)))
        hi = lo + width
        for _ in range(2000):
            above = self.log_tail(hi) > target
            if not above.any():
                break
            width = np.where(above, 2 * width, width)
            lo = np.where(above, hi, lo)
            hi = np.where(above, lo + width, hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            above = self.log_tail(mid) > target
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.all(hi - lo <= 4e-16 * np.abs(hi)):
                break
        return np.maximum(0.5 * (lo + hi), np.nextafter(gamma, np.inf))

    def __repr__(self):
        return f"ExactSum({self.name})"


# ---------------------------------------------------------------------------
# angular models

class AngularModel:
    """Conditional law of ``Theta`` given ``S = s``.

    ``sample(s, rng)`` returns one angle per entry of ``s`` (shape ``(n, d)``)
    and ``log_pdf(s, theta)`` is the density in the first ``d-1`` coordinates.
    """

    def sample(self, s, rng):
        raise NotImplementedError

    def log_pdf(self, s, theta):
        raise NotImplementedError


def _log_weights(spec: ProblemSpec, s) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    logsf = np.stack([m.logsf(s) for m in spec.marginals], axis=-1)
    norm = logsumexp(logsf, axis=-1, keepdims=True)
    if np.any(np.isneginf(norm)):
        raise ValueError("all marginal survivals vanish at this radius")
    return logsf - norm


def optimistic_weights(spec: ProblemSpec, s) -> np.ndarray:
    """``p_i(s) = sf_i(s) / sum_j sf_j(s)``; rows for array ``s``."""
    w = np.exp(_log_weights(spec, s))
    return w[0] if np.ndim(s) == 0 else w


class OptimisticInd(AngularModel):
    """Pick coordinate ``I`` with probability ``p_I(s)``, draw the others from
    their marginals and let ``X_I`` close the sum (it may go negative)."""

    dependent = False

    def __init__(self, spec: ProblemSpec):
        self.spec = spec
        self._reduced = [spec.drop(i) for i in range(spec.d)] if self.dependent else None

    def _draw_x(self, rng, n):
        if self.dependent:
            return self.spec.sample(rng, n)
        return np.column_stack([m.rvs(rng, n) for m in self.spec.marginals])

    def sample(self, s, rng):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        n, d = s.size, self.spec.d
        if d == 1:
            return np.ones((n, 1))
        p = np.exp(_log_weights(self.spec, s))
        cum = np.cumsum(p, axis=1)
        u = rng.random(n)[:, None]
        idx = np.minimum(np.sum(u >= cum, axis=1), d - 1)
        theta = self._draw_x(rng, n) / s[:, None]
        rows = np.arange(n)
        theta[rows, idx] = 0.0
        theta[rows, idx] = 1.0 - np.sum(theta, axis=1)
        return theta

    def log_pdf(self, s, theta):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        if np.any(np.abs(theta.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("angles must sum to one")
        d = self.spec.d
        if d == 1:
            return np.zeros(s.shape)
        x = s[:, None] * theta
        lf = self.spec.logpdf_marginals(x)
        comp = np.empty_like(lf)
        for i in range(d):
            others = [j for j in range(d) if j != i]
            comp[:, i] = np.sum(lf[:, others], axis=1)
            if self.dependent:
                comp[:, i] += self._log_copula_rest(i, x[:, others], comp[:, i])
        return (d - 1) * np.log(np.abs(s)) + logsumexp(_log_weights(self.spec, s) + comp, axis=1)

    def _log_copula_rest(self, i, x_rest, log_marg):
        reduced = self._reduced[i]
        out = np.zeros(x_rest.shape[0])
        ok = np.isfinite(log_marg)
        if reduced.d < 2 or not ok.any():
            return out
        xr = x_rest[ok]
        tiny = np.finfo(float).tiny
        u = np.clip(np.exp(reduced.logcdf_marginals(xr)), tiny, 1.0 - 2**-53)
        v = np.clip(np.exp(reduced.logsf_marginals(xr)), tiny, 1.0)
        out[ok] = reduced.copula._log_density(u, v)
        return out


class OptimisticDep(OptimisticInd):
    """Optimistic angles with ``X_{-I}`` drawn jointly from ``f_X``.

    The density uses the ``(d-1)``-dimensional margin of the copula, which for
    an Archimedean family is the same family in one dimension less.
    """

    dependent = True


class LightWeibullGaussian(AngularModel):
    """Gaussian angles for iid light-tailed Weibull summands.

    ``W ~ Normal(0, (1-rho) I + rho 11')`` with ``rho = -1/(d-1)`` (so
    ``sum(W) == 0``), and ``theta = 1/d + W / (omega(s) s)`` with
    ``omega(s) = sqrt(2 beta (beta-1)) (s/(d lam))**((beta-2)/2) / lam``.
    """

    def __init__(self, beta: float, lam: float, d: int):
        if not beta > 1:
            raise ValueError("light-tailed Weibull needs beta > 1")
        if d < 2:
            raise ValueError("need d >= 2")
        self.beta, self.lam, self.d = float(beta), float(lam), int(d)
        self.rho = -1.0 / (self.d - 1)

    def omega(self, s):
        s = np.asarray(s, dtype=float)
        return (math.sqrt(2 * self.beta * (self.beta - 1))
                * (s / (self.d * self.lam)) ** ((self.beta - 2) / 2) / self.lam)

    def sample_w(self, rng, n):
        z = rng.standard_normal((n, self.d))
        return math.sqrt(self.d / (self.d - 1)) * (z - z.mean(axis=1, keepdims=True))

    def sample(self, s, rng):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        w = self.sample_w(rng, s.size)
        return 1.0 / self.d + w / (self.omega(s) * s)[:, None]

    def log_pdf(self, s, theta):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        d = self.d
        scale = self.omega(s) * s
        w = (theta - 1.0 / d) * scale[:, None]
        w_last = -np.sum(w[:, :-1], axis=1)
        # covariance of W_{1..d-1} is a I + rho 11' with a = d/(d-1); its inverse
        # is (1/a)(I + 11') and its determinant a**(d-2) / (d-1)
        quad = (d - 1) / d * (np.sum(w[:, :-1] ** 2, axis=1) + w_last**2)
        log_det = (d - 2) * math.log(d / (d - 1)) - math.log(d - 1)
        log_norm = -0.5 * ((d - 1) * math.log(2 * math.pi) + log_det)
        return log_norm - 0.5 * quad + (d - 1) * np.log(scale)

    @classmethod
    def from_spec(cls, spec: ProblemSpec):
        beta, lam = _iid_weibull(spec)
        return cls(beta, lam, spec.d)


class ExactConditional(AngularModel):
    """Known conditional law of ``Theta_1 | S`` for ``d = 2``.

    ``log_pdf1(s, t)`` and ``cdf1(s, t)`` describe ``Theta_1`` on ``(0, 1)``;
    sampling inverts ``cdf1`` by bisection.
    """

    def __init__(self, log_pdf1: Callable, cdf1: Callable, name: str = "exact"):
        self._log_pdf1 = log_pdf1
        self._cdf1 = cdf1
        self.name = name

    def sample(self, s, rng):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        u = _open_uniform(rng, s.size)
        lo, hi = np.zeros(s.size), np.ones(s.size)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = self._cdf1(s, mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        t = 0.5 * (lo + hi)
        return np.column_stack([t, 1.0 - t])

    def log_pdf(self, s, theta):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        t = theta[:, 0]
        inside = (t > 0) & (t < 1)
        out = np.full(t.shape, -np.inf)
        out[inside] = self._log_pdf1(s[inside], t[inside])
        return out

    @classmethod
    def uniform(cls):
        return cls(lambda s, t: np.zeros(np.broadcast(s, t).shape),
                   lambda s, t: np.clip(t, 0.0, 1.0) + 0.0 * s, name="uniform")

    def __repr__(self):
        return f"ExactConditional({self.name})"


def _iid_weibull(spec: ProblemSpec) -> tuple[float, float]:
    first = spec.marginals[0]
    if not (spec.iid and isinstance(first, Weibull)):
        raise ValueError("model requires iid Weibull summands")
    return first.beta, first.lam


# ---------------------------------------------------------------------------
# estimator

def likelihood_ratio(spec: ProblemSpec, radial: RadialModel, angular: AngularModel, s, theta):
    """Per-replicate ratio ``f_{S,Theta} / (c_S f_rad g)`` evaluated in log space."""
    log_ratio = (polar_joint_logpdf(spec, s, theta) - math.log(radial.c_S)
                 - radial.log_pdf(s) - angular.log_pdf(s, theta))
    with np.errstate(invalid="ignore"):
        return np.exp(log_ratio)


def polar_is_estimate(spec: ProblemSpec, radial: RadialModel, angular: AngularModel,
                      gamma: float, R: int, seed=None, workers=None) -> EstimatorResult:
    """L1-polar importance sampling estimate of ``P(S > gamma)``.

    Parameters
    ----------
    spec : ProblemSpec
        Law of the summands.
    radial : RadialModel
        Proposal for ``S``; must be valid at ``gamma``.
    angular : AngularModel
        Proposal for ``Theta | S``.
    gamma : float
        Threshold.
    R : int
        Number of replicates (at least 2).
    seed : int or SeedSequence, optional
        Root seed; the run is reproducible for a fixed ``(seed, workers)``.
    workers : int, optional
        Thread count (defaults to ``$POLARTAIL_THREADS`` or 1).

    Returns
    -------
    EstimatorResult
        ``estimate = asym_prefactor * correction`` with
        ``asym_prefactor = c_S * radial_tail(gamma)``.
    """
    log_pref = radial.log_asym(gamma)

    def draw(rng, n):
        s = radial.sample(gamma, rng, n)
        theta = angular.sample(s, rng)
        return likelihood_ratio(spec, radial, angular, s, theta)

    mean, std, used = run_replicates(draw, R, seed, workers)
    prefactor = math.exp(log_pref)
    return EstimatorResult(
        estimate=prefactor * mean,
        rel_err=relative_error(mean, std, R),
        R=R,
        asym_prefactor=prefactor,
        correction=mean,
        seed=used,
        std=prefactor * std,
    )


# functional aliases
def radial_tail(rm: RadialModel, gamma):
    return rm.log_tail(gamma)


def radial_pdf(rm: RadialModel, s):
    return rm.log_pdf(s)


def sample_radial(rm: RadialModel, gamma, rng, size=None):
    return rm.sample(gamma, rng, 1 if size is None else size)


def sample_optimistic(spec: ProblemSpec, s, rng, dependent: bool | None = None):
    dep = (not spec.independent) if dependent is None else dependent
    model = OptimisticDep(spec) if dep else OptimisticInd(spec)
    return model.sample(s, rng)


def optimistic_pdf(spec: ProblemSpec, s, theta, dependent: bool | None = None):
    dep = (not spec.independent) if dependent is None else dependent
    model = OptimisticDep(spec) if dep else OptimisticInd(spec)
    return model.log_pdf(s, theta)
