"""Reference estimators: crude Monte Carlo, Asmussen-Kroese and exponential tilting."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, stats

from .copulas import ProblemSpec
from .marginals import Weibull
from .results import EstimatorResult, relative_error, run_replicates

__all__ = [
    "cmc_estimate",
    "ak_estimate",
    "ak_replicates",
    "TiltingParams",
    "tilt_solve",
    "tilt_estimate",
    "sample_tilted",
]


def _baseline_result(mean, std, R, seed):
    return EstimatorResult(estimate=mean, rel_err=relative_error(mean, std, R), R=R,
                           asym_prefactor=1.0, correction=mean, seed=seed, std=std)


def cmc_estimate(spec: ProblemSpec, gamma: float, R: int, seed=None, workers=None) -> EstimatorResult:
    """Average of ``1{S > gamma}`` over ``R`` joint draws."""
    def draw(rng, n):
        return (spec.sample(rng, n).sum(axis=1) > gamma).astype(float)

    mean, std, used = run_replicates(draw, R, seed, workers)
    return _baseline_result(mean, std, R, used)


# ---------------------------------------------------------------------------
# Asmussen-Kroese

def _leave_one_out(x):
    """Row-wise ``max_{j != i} x_j`` and ``sum_{j != i} x_j`` for every ``i``."""
    n, d = x.shape
    total = x.sum(axis=1, keepdims=True)
    sums = total - x
    if d == 1:
        return np.full_like(x, -np.inf), np.zeros_like(x)
    order = np.argsort(x, axis=1)
    rows = np.arange(n)
    top = x[rows, order[:, -1]]
    second = x[rows, order[:, -2]]
    maxes = np.repeat(top[:, None], d, axis=1)
    maxes[rows, order[:, -1]] = second
    return maxes, sums


def ak_replicates(spec: ProblemSpec, gamma, x):
    """AK replicate values for the sample rows ``x``.

    ``sum_i P(X_i > max(M_{-i}, gamma - S_{-i}) | X_{-i})`` where ``M_{-i}``
    and ``S_{-i}`` are the maximum and sum of the other coordinates. Under
    independence the conditional survival is the marginal one.
    """
    x = np.asarray(x, dtype=float)
    maxes, sums = _leave_one_out(x)
    thresh = np.maximum(maxes, np.asarray(gamma, dtype=float)[..., None] - sums)
    out = np.zeros(x.shape[0])
    for i, m in enumerate(spec.marginals):
        if spec.independent:
            out += np.exp(m.logsf(thresh[:, i]))
        else:
            rest = np.delete(x, i, axis=1)
            out += spec.conditional_sf(i, thresh[:, i], rest)
    return out


def _ak_iid_replicates(spec, gamma, x_rest):
    # iid form: d * sf(max(M_{d-1}, gamma - S_{d-1})) from d-1 draws
    m = spec.marginals[0]
    d = spec.d
    if d == 1:
        return np.exp(m.logsf(np.full(x_rest.shape[0], gamma)))
    thresh = np.maximum(x_rest.max(axis=1), gamma - x_rest.sum(axis=1))
    return d * np.exp(m.logsf(thresh))


def ak_estimate(spec: ProblemSpec, gamma: float, R: int, seed=None, workers=None) -> EstimatorResult:
    """Asmussen-Kroese conditional Monte Carlo estimate of ``P(S > gamma)``.

    iid summands use the classic ``d * sf(max(M_{d-1}, gamma - S_{d-1}))`` form;
    non-identical summands sum the conditioning over every coordinate, and
    dependent summands replace the marginal survival by the copula
    conditional survival given the other coordinates.
    """
    if spec.iid:
        m = spec.marginals[0]

        def draw(rng, n):
            x_rest = np.column_stack([m.rvs(rng, n) for _ in range(spec.d - 1)]) \
                if spec.d > 1 else np.zeros((n, 0))
            return _ak_iid_replicates(spec, gamma, x_rest)
    else:
        def draw(rng, n):
            return ak_replicates(spec, gamma, spec.sample(rng, n))

    mean, std, used = run_replicates(draw, R, seed, workers)
    return _baseline_result(mean, std, R, used)


# ---------------------------------------------------------------------------
# exponential tilting for iid light-tailed Weibull sums

@dataclass(frozen=True)
class TiltingParams:
    """Tilt ``f_t(x) = exp(t x - kappa(t)) f(x)`` and its gamma AR proposal."""

    theta_star: float
    kappa: float
    proposal_shape: float
    proposal_rate: float
    envelope_log: float
    beta: float
    lam: float
    d: int
    tilted_mean: float
    tilted_var: float

    def log_tilted_pdf(self, x):
        return self.theta_star * x - self.kappa + Weibull(self.beta, self.lam).logpdf(x)

    def log_proposal_pdf(self, x):
        return stats.gamma.logpdf(x, self.proposal_shape, scale=1.0 / self.proposal_rate)

    def log_ratio(self, x):
        """``log(tilted / proposal)``; bounded above by ``envelope_log``."""
        return self.log_tilted_pdf(x) - self.log_proposal_pdf(x)


def _tilted_moments(t: float, beta: float, lam: float):
    """``kappa(t)``, mean and variance of the tilted law, by adaptive quadrature.

    With ``x = lam u**(1/beta)`` the integrand is ``exp(t lam u**(1/beta) - u)``,
    which is smooth; its exponent is shifted by its maximum before integrating.
    """
    a = 1.0 / beta
    if t > 0:
        u_star = (t * lam * a) ** (beta / (beta - 1.0))
    else:
        u_star = 0.0
    g_star = t * lam * u_star**a - u_star

    def piece(power):
        def f(u):
            return (lam * u**a) ** power * math.exp(t * lam * u**a - u - g_star)
        pts = [0.0, u_star] if u_star > 0 else [0.0]
        total = 0.0
        for lo, hi in zip(pts, pts[1:] + [math.inf]):
            val, _ = integrate.quad(f, lo, hi, epsabs=1e-300, epsrel=1e-12, limit=200)
            total += val
        return total

    z0, z1, z2 = piece(0), piece(1), piece(2)
    mean = z1 / z0
    var = max(z2 / z0 - mean * mean, 0.0)
    return g_star + math.log(z0), mean, var


def _envelope(beta: float, lam: float, t: float, kappa: float,
              shape: float, rate: float, mean: float, sd: float) -> float:
    wb = Weibull(beta, lam)

    def log_ratio(x):
        x = np.asarray(x, dtype=float)
        return (t * x - kappa + wb.logpdf(x)
                - stats.gamma.logpdf(x, shape, scale=1.0 / rate))

    hi = mean + 20.0 * sd
    grid = np.linspace(hi / 1000.0, hi, 1000)
    vals = log_ratio(grid)
    k = int(np.argmax(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = optimize.minimize_scalar(lambda x: -float(log_ratio(x)), bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-12})
    best = max(float(vals[k]), -float(res.fun))
    # behaviour at the origin: ratio tends to a constant when shape == beta
    edge = float(log_ratio(np.array([grid[0] * 1e-6]))[0])
    return max(best, edge) + 1e-3


def tilt_solve(beta: float, lam: float, d: int, gamma: float) -> TiltingParams:
    """Tilting parameter with ``d * kappa'(theta) = gamma`` and a gamma AR proposal.

    The proposal is moment-matched to the tilted law; when the matched shape
    exceeds ``beta`` it is lowered to ``beta`` (keeping the mean) because a
    gamma density with a larger shape cannot dominate the ``x**(beta-1)``
    behaviour of the Weibull density at the origin.
    """
    if not beta > 1:
        raise ValueError("exponential tilting here requires light tails (beta > 1)")
    target = gamma / d
    mean0 = lam * math.gamma(1 + 1 / beta)
    if target < mean0 * (1 - 1e-12):
        raise ValueError("gamma must be at least the mean of the sum")

    if target <= mean0 * (1 + 1e-12):
        t = 0.0
    else:
        def f(t):
            return _tilted_moments(t, beta, lam)[1] - target

        hi = 1.0 / lam
        while f(hi) < 0:
            hi *= 2.0
            if hi > 1e8:
                raise ValueError("tilting root not bracketed")
        t = optimize.brentq(f, 0.0, hi, xtol=1e-14, rtol=1e-13)

    kappa, mean, var = _tilted_moments(t, beta, lam)
    shape = min(mean * mean / var, beta)
    rate = shape / mean
    env = _envelope(beta, lam, t, kappa, shape, rate, mean, math.sqrt(var))
    return TiltingParams(theta_star=t, kappa=kappa, proposal_shape=shape, proposal_rate=rate,
                         envelope_log=env, beta=beta, lam=lam, d=d, tilted_mean=mean, tilted_var=var)


def sample_tilted(params: TiltingParams, rng, size: int) -> np.ndarray:
    """Acceptance-rejection draws from the tilted Weibull law."""
    out = np.empty(0)
    need = size
    while need > 0:
        n = int(need * 1.5) + 16
        x = rng.gamma(params.proposal_shape, 1.0 / params.proposal_rate, n)
        log_acc = params.log_ratio(x) - params.envelope_log
        keep = np.log(rng.random(n)) < log_acc
        out = np.concatenate([out, x[keep][:need]])
        need = size - out.size
    return out


def tilt_estimate(beta: float, lam: float, d: int, gamma: float, R: int, seed=None,
                  workers=None, params: TiltingParams | None = None) -> EstimatorResult:
    """Exponential tilting estimate of ``P(S > gamma)`` for iid Weibull(beta, lam)."""
    params = tilt_solve(beta, lam, d, gamma) if params is None else params
    t, kappa = params.theta_star, params.kappa

    def draw(rng, n):
        s = sample_tilted(params, rng, n * d).reshape(n, d).sum(axis=1)
        return np.where(s > gamma, np.exp(-t * s + d * kappa), 0.0)

    mean, std, used = run_replicates(draw, R, seed, workers)
    return _baseline_result(mean, std, R, used)
