"""Univariate marginal families used as summands.

Parameterizations follow the usual computer-algebra conventions:

* ``Lognormal(mu, sigma)`` is ``exp(Normal(mu, sigma))``.
* ``Pareto(k, alpha, mu)`` has survival ``(1 + (x - mu)/k)**(-alpha)`` on ``x >= mu``.
* ``Weibull(beta, lam)`` has survival ``exp(-(x/lam)**beta)`` on ``x >= 0``.
* ``Exponential(rate)`` has survival ``exp(-rate*x)`` on ``x >= 0``.

Every family works internally with the log-survival function. Tail
probabilities in the regimes of interest are far below ``1e-7`` and their
products underflow, so the linear scale only appears at the API edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "Marginal",
    "Lognormal",
    "Pareto",
    "Weibull",
    "Exponential",
    "marginal_from_dict",
    "log1mexp",
]

_LOG_HALF = -math.log(2.0)


def log1mexp(a):
    """Return ``log(1 - exp(a))`` for ``a <= 0`` without cancellation."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(a > _LOG_HALF, np.log(-np.expm1(a)), np.log1p(-np.exp(a)))


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.isnan(x).any():
        raise ValueError("NaN passed to a marginal evaluation")
    return x


def _check_prob(u):
    u = np.asarray(u, dtype=float)
    if np.isnan(u).any() or np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    return u


def _open_uniform(rng, size):
    u = rng.random(size)
    # rng.random is on [0, 1); zero would map to an infinite tail draw
    return np.where(u == 0.0, np.nextafter(0.0, 1.0), u)


class Marginal:
    """Common interface of the marginal families.

    Subclasses implement ``logpdf``, ``logsf``, ``logcdf``, ``ppf`` and
    ``isf_log`` (the inverse of the log-survival function); everything else
    is derived here. All methods broadcast over array input.
    """

    family: str = ""
    lower: float = 0.0

    # -- to be provided by the families -------------------------------
    def logpdf(self, x):
        raise NotImplementedError

    def logsf(self, x):
        raise NotImplementedError

    def logcdf(self, x):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError

    def isf_log(self, log_p):
        """Return ``x`` with ``logsf(x) == log_p``."""
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    @property
    def params(self) -> list[float]:
        raise NotImplementedError

    # -- derived -------------------------------------------------------
    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def sf(self, x):
        return np.exp(self.logsf(x))

    def cdf(self, x):
        return np.exp(self.logcdf(x))

    def eval(self, which: str, x):
        """Evaluate ``pdf``, ``cdf``, ``survival`` or ``log_pdf`` at ``x``."""
        funcs = {
            "pdf": self.pdf,
            "cdf": self.cdf,
            "survival": self.sf,
            "sf": self.sf,
            "log_pdf": self.logpdf,
            "logpdf": self.logpdf,
            "log_survival": self.logsf,
        }
        try:
            return funcs[which](x)
        except KeyError:
            raise ValueError(f"unknown evaluation {which!r}") from None

    def quantile(self, u):
        return self.ppf(_check_prob(u))

    def ppf_log(self, log_u):
        """Quantile from ``log(u)``; accurate for ``u`` close to one."""
        log_u = np.asarray(log_u, dtype=float)
        upper = log_u > _LOG_HALF
        with np.errstate(divide="ignore", invalid="ignore"):
            from_top = self.isf_log(log1mexp(np.where(upper, log_u, _LOG_HALF)))
            from_bottom = self.ppf(np.exp(np.where(upper, _LOG_HALF, log_u)))
        return np.where(upper, from_top, from_bottom)

    def rvs(self, rng, size=None):
        return self.ppf(_open_uniform(rng, size))

    def rvs_tail(self, gamma, rng, size=None):
        """Draw from the law conditioned on exceeding ``gamma``.

        Inverse-CDF in log space: ``logsf(X) = log(U) + logsf(gamma)``.
        """
        log_tail = self.logsf(_check_x(gamma))
        if np.any(np.isneginf(log_tail)):
            raise ValueError(f"survival at gamma={gamma} underflows; truncation infeasible")
        target = np.log(_open_uniform(rng, size)) + log_tail
        x = self.isf_log(target)
        # U == 1 - eps can round back onto gamma itself
        return np.maximum(x, np.nextafter(gamma, np.inf))

    def sample(self, rng):
        """Single draw."""
        return float(self.rvs(rng))

    def sample_tail(self, gamma, rng):
        return float(self.rvs_tail(gamma, rng))

    def to_dict(self) -> dict:
        return {"family": self.family, "params": [float(p) for p in self.params]}


@dataclass(frozen=True)
class Lognormal(Marginal):
    mu: float
    sigma: float

    family = "lognormal"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("Lognormal sigma must be positive")

    @property
    def params(self):
        return [self.mu, self.sigma]

    def _z(self, x):
        with np.errstate(divide="ignore"):
            return (np.log(np.maximum(x, 0.0)) - self.mu) / self.sigma

    def logpdf(self, x):
        x = _check_x(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = self._z(x)
            out = -0.5 * z * z - np.log(self.sigma) - 0.5 * math.log(2 * math.pi) - np.log(x)
        return np.where(x > 0, out, -np.inf)

    def logsf(self, x):
        return special.log_ndtr(-self._z(_check_x(x)))

    def logcdf(self, x):
        return special.log_ndtr(self._z(_check_x(x)))

    def ppf(self, u):
        return np.exp(self.mu + self.sigma * special.ndtri(u))

    def isf_log(self, log_p):
        return np.exp(self.mu - self.sigma * special.ndtri_exp(log_p))

    def rvs(self, rng, size=None):
        return rng.lognormal(self.mu, self.sigma, size)

    def mean(self):
        return math.exp(self.mu + 0.5 * self.sigma**2)


@dataclass(frozen=True)
class Pareto(Marginal):
    k: float
    alpha: float
    mu: float = 0.0

    family = "pareto"

    def __post_init__(self):
        if not (self.k > 0 and self.alpha > 0):
            raise ValueError("Pareto k and alpha must be positive")

    @property
    def lower(self):
        return self.mu

    @property
    def params(self):
        return [self.k, self.alpha, self.mu]

    def _y(self, x):
        return np.maximum((x - self.mu) / self.k, 0.0)

    def logpdf(self, x):
        x = _check_x(x)
        y = self._y(x)
        out = math.log(self.alpha / self.k) - (self.alpha + 1.0) * np.log1p(y)
        return np.where(x >= self.mu, out, -np.inf)

    def logsf(self, x):
        return -self.alpha * np.log1p(self._y(_check_x(x)))

    def logcdf(self, x):
        return log1mexp(self.logsf(x))

    def ppf(self, u):
        return self.mu + self.k * np.expm1(-np.log1p(-u) / self.alpha)

    def isf_log(self, log_p):
        return self.mu + self.k * np.expm1(-np.asarray(log_p) / self.alpha)

    def mean(self):
        if self.alpha <= 1:
            return math.inf
        return self.mu + self.k / (self.alpha - 1.0)


@dataclass(frozen=True)
class Weibull(Marginal):
    beta: float
    lam: float = 1.0

    family = "weibull"

    def __post_init__(self):
        if not (self.beta > 0 and self.lam > 0):
            raise ValueError("Weibull beta and lambda must be positive")

    @property
    def params(self):
        return [self.beta, self.lam]

    def _h(self, x):
        # cumulative hazard (x/lam)**beta; overflow to inf is the right limit
        with np.errstate(over="ignore"):
            return (np.maximum(x, 0.0) / self.lam) ** self.beta

    def logpdf(self, x):
        x = _check_x(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (math.log(self.beta / self.lam)
                   + (self.beta - 1.0) * np.log(np.maximum(x, 0.0) / self.lam)
                   - self._h(x))
        out = np.where(x > 0, out, -np.inf)
        if self.beta == 1.0:
            out = np.where(x == 0, -math.log(self.lam), out)
        return out

    def logsf(self, x):
        return -self._h(_check_x(x))

    def logcdf(self, x):
        return log1mexp(-self._h(_check_x(x)))

    def ppf(self, u):
        return self.lam * (-np.log1p(-u)) ** (1.0 / self.beta)

    def isf_log(self, log_p):
        return self.lam * (-np.asarray(log_p)) ** (1.0 / self.beta)

    def rvs(self, rng, size=None):
        return self.lam * rng.weibull(self.beta, size)

    def mean(self):
        return self.lam * math.gamma(1.0 + 1.0 / self.beta)


@dataclass(frozen=True)
class Exponential(Marginal):
    rate: float = 1.0

    family = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("Exponential rate must be positive")

    @property
    def params(self):
        return [self.rate]

    def logpdf(self, x):
        x = _check_x(x)
        return np.where(x >= 0, math.log(self.rate) - self.rate * x, -np.inf)

    def logsf(self, x):
        return -self.rate * np.maximum(_check_x(x), 0.0)

    def logcdf(self, x):
        return log1mexp(self.logsf(x))

    def ppf(self, u):
        return -np.log1p(-u) / self.rate

    def isf_log(self, log_p):
        return -np.asarray(log_p) / self.rate

    def rvs(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def mean(self):
        return 1.0 / self.rate


_FAMILIES = {cls.family: cls for cls in (Lognormal, Pareto, Weibull, Exponential)}


def marginal_from_dict(record: dict) -> Marginal:
    """Inverse of :meth:`Marginal.to_dict`."""
    family = record["family"].lower()
    if family not in _FAMILIES:
        raise ValueError(f"unknown marginal family {record['family']!r}")
    return _FAMILIES[family](*record.get("params", []))
