"""Archimedean copulas and the joint law of the summands.

A copula is described by its generator ``phi`` and the generator inverse
``psi`` (a Laplace transform for the families here), so that
``C(u) = psi(sum(phi(u_i)))``. Densities need the ``d``-th derivative of
``psi``; these are evaluated from closed forms in log space because ``d``
goes up to 16 and the terms span many orders of magnitude.

Generators are evaluated from the pair ``(u, 1 - u)`` so that points deep in
the upper tail (``1 - u`` far below machine epsilon) keep full precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .marginals import Marginal, marginal_from_dict

__all__ = [
    "Copula",
    "Independent",
    "Clayton",
    "Frank",
    "GumbelHougaard",
    "AMH",
    "copula_from_dict",
    "ProblemSpec",
    "eulerian_numbers",
]


@lru_cache(maxsize=None)
def eulerian_numbers(n: int) -> tuple[int, ...]:
    """Row ``n`` of the Eulerian triangle ``A(n, 0..n-1)`` (``(1,)`` for n=0)."""
    row = [1]
    for m in range(1, n + 1):
        new = [0] * m
        for k in range(m):
            left = row[k - 1] if k >= 1 else 0
            here = row[k] if k < len(row) else 0
            new[k] = (k + 1) * here + (m - k) * left
        row = new
    return tuple(row)


def _eulerian_poly(n, z):
    """``sum_k A(n,k) z**k``; with it ``Li_{-n}(z) = z P_n(z) / (1-z)**(n+1)``."""
    coeffs = np.array(eulerian_numbers(n), dtype=float)
    return np.polynomial.polynomial.polyval(z, coeffs)


def _log_u(u, v):
    """``log(u)`` using whichever of ``u`` or ``v = 1-u`` is more accurate."""
    with np.errstate(divide="ignore"):
        return np.where(u < 0.5, np.log(u), np.log1p(-v))


class Copula:
    """Base class; subclasses provide the generator and its inverse.

    Attributes
    ----------
    d : int
        Dimension.
    """

    family = ""
    d: int

    def _check_d(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("copula dimension must be a positive integer")

    # generator phi(u), evaluated from (u, v=1-u)
    def generator(self, u, v=None):
        raise NotImplementedError

    def log_generator_deriv_abs(self, u, v=None):
        """``log|phi'(u)|``."""
        raise NotImplementedError

    def log_psi(self, t):
        """``log psi(t)``, i.e. log of the copula coordinate for generator value ``t``."""
        raise NotImplementedError

    def psi(self, t):
        return np.exp(self.log_psi(t))

    def psi_deriv(self, k: int, t):
        """``k``-th derivative of ``psi`` as ``(log_abs, sign)``."""
        raise NotImplementedError

    def frailty(self, rng, size):
        raise NotImplementedError

    def with_dim(self, d: int) -> "Copula":
        """Same family and parameter in dimension ``d`` (Archimedean margins)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"family": self.family, "theta": float(self.theta)}

    # -- derived -------------------------------------------------------
    def log_density(self, u, v=None):
        """Log copula density at the rows of ``u`` (shape ``(..., d)``)."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.d:
            raise ValueError(f"expected {self.d} coordinates, got {u.shape[-1]}")
        if np.any(u <= 0) or np.any(u >= 1):
            raise ValueError("copula density requires u strictly inside (0, 1)")
        v = 1.0 - u if v is None else np.asarray(v, dtype=float)
        return self._log_density(u, v)

    def _log_density(self, u, v):
        if self.d == 1:
            return np.zeros(u.shape[:-1])
        t = np.sum(self.generator(u, v), axis=-1)
        log_abs, _ = self.psi_deriv(self.d, t)
        return log_abs + np.sum(self.log_generator_deriv_abs(u, v), axis=-1)

    def density(self, u):
        return np.exp(self.log_density(u))

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        return self.psi(np.sum(self.generator(u, 1.0 - u), axis=-1))

    def sample_log(self, rng, size):
        """Log-uniforms ``log U`` of shape ``(size, d)`` (Marshall-Olkin)."""
        v = self.frailty(rng, size)
        e = rng.standard_exponential((size, self.d))
        return self.log_psi(e / v[:, None])

    def sample(self, rng, size):
        return np.exp(self.sample_log(rng, size))

    def __repr__(self):
        return f"{type(self).__name__}(theta={getattr(self, 'theta', None)}, d={self.d})"


@dataclass(frozen=True, repr=False)
class Independent(Copula):
    d: int = 2
    family = "independent"
    theta = 0.0

    def __post_init__(self):
        self._check_d()

    def generator(self, u, v=None):
        u = np.asarray(u, dtype=float)
        v = 1.0 - u if v is None else v
        return -_log_u(u, v)

    def log_generator_deriv_abs(self, u, v=None):
        return -np.log(u)

    def log_psi(self, t):
        return -np.asarray(t, dtype=float)

    def psi_deriv(self, k, t):
        t = np.asarray(t, dtype=float)
        return -t, (-1.0) ** k

    def _log_density(self, u, v):
        return np.zeros(u.shape[:-1])

    def sample_log(self, rng, size):
        return -rng.standard_exponential((size, self.d))

    def with_dim(self, d):
        return Independent(d)

    def to_dict(self):
        return {"family": "independent"}


@dataclass(frozen=True, repr=False)
class Clayton(Copula):
    """``psi(t) = (1 + t)**(-1/theta)``, gamma frailty."""

    theta: float
    d: int = 2
    family = "clayton"

    def __post_init__(self):
        self._check_d()
        if not self.theta > 0:
            raise ValueError("Clayton theta must be positive")

    def generator(self, u, v=None):
        u = np.asarray(u, dtype=float)
        v = 1.0 - u if v is None else v
        return np.expm1(-self.theta * _log_u(u, v))

    def log_generator_deriv_abs(self, u, v=None):
        return math.log(self.theta) - (self.theta + 1.0) * np.log(u)

    def log_psi(self, t):
        return -np.log1p(t) / self.theta

    def psi_deriv(self, k, t):
        a = 1.0 / self.theta
        log_rising = sum(math.log(a + j) for j in range(k))
        return log_rising - (a + k) * np.log1p(t), (-1.0) ** k

    def frailty(self, rng, size):
        return rng.gamma(1.0 / self.theta, 1.0, size)

    def with_dim(self, d):
        return Clayton(self.theta, d)


@dataclass(frozen=True, repr=False)
class Frank(Copula):
    """``psi(t) = -log(1 - (1 - e^-theta) e^-t) / theta``, log-series frailty.

    Negative ``theta`` is only a valid copula for ``d = 2``.
    """

    theta: float
    d: int = 2
    family = "frank"

    def __post_init__(self):
        self._check_d()
        if self.theta == 0:
            raise ValueError("Frank theta must be nonzero")
        if self.theta < 0 and self.d > 2:
            raise ValueError("Frank with negative theta requires d <= 2")

    @property
    def _log_c_over_theta(self):
        # c = 1 - e^-theta has the sign of theta
        return math.log(-math.expm1(-self.theta) / self.theta)

    def generator(self, u, v=None):
        th = self.theta
        u = np.asarray(u, dtype=float)
        v = 1.0 - u if v is None else np.asarray(v, dtype=float)
        near_one = v < 0.5
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            low = -np.log(np.expm1(-th * u) / math.expm1(-th))
            high = -np.log1p(math.exp(-th) * np.expm1(th * v) / math.expm1(-th))
        return np.where(near_one, high, low)

    def log_generator_deriv_abs(self, u, v=None):
        return math.log(abs(self.theta)) - np.log(np.abs(np.expm1(self.theta * np.asarray(u))))

    def _z(self, t):
        return -math.expm1(-self.theta) * np.exp(-np.asarray(t, dtype=float))

    def log_psi(self, t):
        return np.log(-np.log1p(-self._z(t)) / self.theta)

    def psi_deriv(self, k, t):
        t = np.asarray(t, dtype=float)
        if k == 0:
            return self.log_psi(t), 1.0
        z = self._z(t)
        n = k - 1
        poly = _eulerian_poly(n, z)
        log_abs = self._log_c_over_theta - t + np.log(np.abs(poly)) - (n + 1) * np.log1p(-z)
        return log_abs, (-1.0) ** k * np.sign(poly)

    def frailty(self, rng, size):
        if self.theta < 0:
            raise ValueError("no frailty representation for negative theta")
        return rng.logseries(-math.expm1(-self.theta), size).astype(float)

    def sample_log(self, rng, size):
        if self.theta > 0:
            return super().sample_log(rng, size)
        # d == 2: invert the conditional distribution of U2 given U1
        th = self.theta
        u1 = rng.random(size)
        w = rng.random(size)
        u2 = -np.log1p(w * math.expm1(-th) / (w + (1 - w) * np.exp(-th * u1))) / th
        return np.log(np.column_stack([u1, u2])[:, : self.d])

    def with_dim(self, d):
        return Frank(self.theta, d)


@dataclass(frozen=True, repr=False)
class GumbelHougaard(Copula):
    """``psi(t) = exp(-t**(1/theta))``, positive-stable frailty.

    ``psi^(k)(t) = (-1)^k psi(t) t^-k sum_j b[k, j] t^(j/theta)`` with
    nonnegative ``b`` from the recurrence
    ``b[k+1, j] = (k - j/theta) b[k, j] + b[k, j-1]/theta``.
    """

    theta: float
    d: int = 2
    family = "gumbel"
    _log_b: tuple = field(init=False, compare=False)

    def __post_init__(self):
        self._check_d()
        if not self.theta >= 1:
            raise ValueError("Gumbel-Hougaard theta must be >= 1")
        object.__setattr__(self, "_log_b", _gumbel_log_coeffs(self.d, 1.0 / self.theta))

    def generator(self, u, v=None):
        u = np.asarray(u, dtype=float)
        v = 1.0 - u if v is None else v
        return (-_log_u(u, v)) ** self.theta

    def log_generator_deriv_abs(self, u, v=None):
        u = np.asarray(u, dtype=float)
        v = 1.0 - u if v is None else v
        return (math.log(self.theta) + (self.theta - 1.0) * np.log(-_log_u(u, v))
                - np.log(u))

    def log_psi(self, t):
        return -np.asarray(t, dtype=float) ** (1.0 / self.theta)

    def psi_deriv(self, k, t):
        t = np.asarray(t, dtype=float)
        if k == 0:
            return self.log_psi(t), 1.0
        if k > self.d:
            log_b = _gumbel_log_coeffs(k, 1.0 / self.theta)
        else:
            log_b = self._log_b
        a = 1.0 / self.theta
        logt = np.log(t)
        j = np.arange(k + 1)
        terms = log_b[k][j] + (a * j) * logt[..., None]
        log_abs = -(t**a) - k * logt + logsumexp(terms, axis=-1)
        return log_abs, (-1.0) ** k

    def frailty(self, rng, size):
        a = 1.0 / self.theta
        if a == 1.0:
            return np.ones(size)
        # Kanter / Chambers-Mallows-Stuck, Laplace transform exp(-s**a)
        w = rng.uniform(0.0, math.pi, size)
        e = rng.standard_exponential(size)
        return (np.sin(a * w) / np.sin(w) ** (1.0 / a)
                * (np.sin((1.0 - a) * w) / e) ** ((1.0 - a) / a))

    def with_dim(self, d):
        return GumbelHougaard(self.theta, d)


@lru_cache(maxsize=None)
def _gumbel_log_coeffs(d: int, a: float) -> tuple:
    b = np.zeros((d + 1, d + 1))
    b[0, 0] = 1.0
    for k in range(d):
        for j in range(k + 2):
            here = b[k, j] * (k - a * j) if j <= k else 0.0
            left = b[k, j - 1] * a if j >= 1 else 0.0
            b[k + 1, j] = here + left
    with np.errstate(divide="ignore"):
        return tuple(np.log(np.maximum(b, 0.0)))


@dataclass(frozen=True, repr=False)
class AMH(Copula):
    """Ali-Mikhail-Haq, ``psi(t) = (1 - theta) / (e^t - theta)``.

    Geometric frailty for ``theta >= 0``; negative ``theta`` is sampled by
    conditional inversion and, like the density, supported for ``d <= 2``.
    """

    theta: float
    d: int = 2
    family = "amh"

    def __post_init__(self):
        self._check_d()
        if not -1.0 <= self.theta < 1.0:
            raise ValueError("AMH theta must lie in [-1, 1)")
        if self.theta < 0 and self.d > 2:
            raise ValueError("AMH with negative theta requires d <= 2")

    def generator(self, u, v=None):
        u = np.asarray(u, dtype=float)
        v = 1.0 - u if v is None else np.asarray(v, dtype=float)
        return np.log1p(-self.theta * v) - _log_u(u, v)

    def log_generator_deriv_abs(self, u, v=None):
        u = np.asarray(u, dtype=float)
        return math.log1p(-self.theta) - np.log(u) - np.log1p(-self.theta * (1.0 - u))

    def log_psi(self, t):
        t = np.asarray(t, dtype=float)
        return math.log1p(-self.theta) - t - np.log1p(-self.theta * np.exp(-t))

    def psi_deriv(self, k, t):
        # psi^(k) = (-1)^k (1-theta) e^-t P_k(z) / (1-z)^(k+1), z = theta e^-t
        t = np.asarray(t, dtype=float)
        z = self.theta * np.exp(-t)
        poly = _eulerian_poly(k, z)
        log_abs = math.log1p(-self.theta) - t + np.log(np.abs(poly)) - (k + 1) * np.log1p(-z)
        return log_abs, (-1.0) ** k * np.sign(poly)

    def _log_density(self, u, v):
        if self.d > 2:
            raise ValueError("AMH density only supported for d <= 2")
        return super()._log_density(u, v)

    def frailty(self, rng, size):
        return rng.geometric(1.0 - self.theta, size).astype(float)

    def sample_log(self, rng, size):
        if self.theta >= 0:
            return super().sample_log(rng, size)
        u1 = rng.random(size)
        w = rng.random(size)
        return np.log(np.column_stack([u1, _amh_conditional_inverse(self.theta, u1, w)])[:, : self.d])

    def with_dim(self, d):
        return AMH(self.theta, d)


def _amh_conditional_inverse(theta, u, w):
    # solve dC/du (u, v) = w for v; quadratic in v
    a = theta * (1.0 - u)
    qa = theta - w * a * a
    qb = (1.0 - theta) - 2.0 * w * a * (1.0 - a)
    qc = -w * (1.0 - a) ** 2
    disc = np.sqrt(np.maximum(qb * qb - 4.0 * qa * qc, 0.0))
    # numerically stable root that lies in [0, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(qb >= 0, 2.0 * qc / (-qb - disc), (-qb + disc) / (2.0 * qa))
    return np.clip(v, 0.0, 1.0)


_COPULAS = {
    "independent": Independent,
    "clayton": Clayton,
    "frank": Frank,
    "gumbel": GumbelHougaard,
    "gumbelhougaard": GumbelHougaard,
    "gumbel_hougaard": GumbelHougaard,
    "amh": AMH,
}


def copula_from_dict(record: dict, d: int) -> Copula:
    family = record["family"].lower()
    if family not in _COPULAS:
        raise ValueError(f"unknown copula family {record['family']!r}")
    if family == "independent":
        return Independent(d)
    return _COPULAS[family](float(record["theta"]), d)


@dataclass(frozen=True)
class ProblemSpec:
    """Joint law of ``X = (X_1, ..., X_d)``: marginals glued by a copula."""

    marginals: tuple
    copula: Copula = None

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if self.copula is None:
            object.__setattr__(self, "copula", Independent(len(self.marginals)))
        if self.copula.d != len(self.marginals):
            raise ValueError("copula dimension does not match number of marginals")

    @property
    def d(self) -> int:
        return len(self.marginals)

    @property
    def independent(self) -> bool:
        return isinstance(self.copula, Independent)

    @property
    def iid(self) -> bool:
        return self.independent and all(m == self.marginals[0] for m in self.marginals)

    def drop(self, i: int) -> "ProblemSpec":
        """Law of ``X_{-i}``."""
        rest = self.marginals[:i] + self.marginals[i + 1:]
        return ProblemSpec(rest, self.copula.with_dim(self.d - 1))

    # -- marginal matrices -------------------------------------------
    def _columns(self, fn, x):
        x = np.asarray(x, dtype=float)
        return np.stack([getattr(m, fn)(x[..., i]) for i, m in enumerate(self.marginals)], axis=-1)

    def logpdf_marginals(self, x):
        return self._columns("logpdf", x)

    def logsf_marginals(self, x):
        return self._columns("logsf", x)

    def logcdf_marginals(self, x):
        return self._columns("logcdf", x)

    def joint_logpdf(self, x):
        """``log f_X(x)``; ``-inf`` outside the product of supports."""
        x = np.asarray(x, dtype=float)
        lp = self.logpdf_marginals(x)
        total = np.sum(lp, axis=-1)
        if self.independent:
            return total
        inside = np.isfinite(total)
        out = np.full(total.shape, -np.inf)
        if not np.any(inside):
            return out
        u = np.exp(self.logcdf_marginals(x[inside]))
        v = np.exp(self.logsf_marginals(x[inside]))
        # copula density is only defined strictly inside the cube
        tiny = np.finfo(float).tiny
        u = np.clip(u, tiny, 1.0 - 2**-53)
        v = np.clip(v, tiny, 1.0)
        out[inside] = self.copula._log_density(u, v) + total[inside]
        return out

    def conditional_sf(self, i: int, x, x_rest):
        """``P(X_i > x | X_{-i} = x_rest)`` for an Archimedean copula.

        ``x_rest`` has shape ``(..., d-1)`` and broadcasts against ``x``.
        """
        x = np.asarray(x, dtype=float)
        m = self.marginals[i]
        if self.independent:
            return np.exp(m.logsf(x))
        others = self.marginals[:i] + self.marginals[i + 1:]
        x_rest = np.asarray(x_rest, dtype=float)
        u_rest = np.exp(np.stack([mj.logcdf(x_rest[..., j]) for j, mj in enumerate(others)], -1))
        v_rest = np.exp(np.stack([mj.logsf(x_rest[..., j]) for j, mj in enumerate(others)], -1))
        t_rest = np.sum(self.copula.generator(u_rest, v_rest), axis=-1)
        return _conditional_sf_from_generator(self.copula, m, x, t_rest)

    def sample(self, rng, size):
        """Draw ``size`` rows of ``X``."""
        if self.independent:
            return np.column_stack([m.rvs(rng, size) for m in self.marginals])
        log_u = self.copula.sample_log(rng, size)
        return np.column_stack([m.ppf_log(log_u[:, i]) for i, m in enumerate(self.marginals)])

    def to_dict(self) -> dict:
        return {
            "marginals": [m.to_dict() for m in self.marginals],
            "copula": self.copula.to_dict(),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "ProblemSpec":
        marginals = [marginal_from_dict(m) for m in record["marginals"]]
        cop = record.get("copula", {"family": "independent"})
        return cls(marginals, copula_from_dict(cop, len(marginals)))


def _conditional_sf_from_generator(cop: Copula, m: Marginal, x, t_rest):
    k = cop.d - 1
    log_u = m.logcdf(x)
    log_v = m.logsf(x)
    u, v = np.exp(log_u), np.exp(log_v)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t_i = cop.generator(u, v)
        num, _ = cop.psi_deriv(k, t_rest + t_i)
        den, _ = cop.psi_deriv(k, t_rest)
    if np.any(np.isneginf(den)):
        raise ValueError("conditioning point is numerically unreachable")
    diff = np.minimum(num - den, 0.0)
    out = -np.expm1(diff)
    out = np.where(log_u == -np.inf, 1.0, out)
    out = np.where(log_v == -np.inf, 0.0, out)
    return np.clip(out, 0.0, 1.0)


# thin functional aliases matching the operation names
def generator_inverse_deriv(cop: Copula, k: int, t):
    return cop.psi_deriv(k, t)


def copula_density(cop: Copula, u):
    return cop.log_density(u)


def sample_copula(cop: Copula, rng, size=1):
    return cop.sample(rng, size)


def joint_pdf(spec: ProblemSpec, x):
    return spec.joint_logpdf(x)


def conditional_survival(spec: ProblemSpec, i: int, x, x_rest):
    return spec.conditional_sf(i, x, x_rest)
