# **************************************************************************
# *
# * Authors:     cttts developers
# *
# * This program is free software; you can redistribute it and/or modify
# * it under the terms of the GNU General Public License as published by
# * the Free Software Foundation; either version 3 of the License, or
# * (at your option) any later version.
# *
# * This program is distributed in the hope that it will be useful,
# * but WITHOUT ANY WARRANTY; without even the implied warranty of
# * MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# * GNU General Public License for more details.
# *
# * You should have received a copy of the GNU General Public License
# * along with this program; if not, write to the Free Software
# * Foundation, Inc., 59 Temple Place, Suite 330, Boston, MA
# * 02111-1307  USA
# *
# **************************************************************************

"""
Posterior families. The Normal-Gamma conjugate model serves Gaussian data and
a discretised (rho, k) grid serves right-censored Weibull data. Functional
single-design operations come first, then the per-replication containers
that hold the beliefs of every design and are vectorised for the policies.
"""
import logging, math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, special

from .constants import *
from .objects import ParameterDraw, PosteriorSamplingError, SolverError
from .instances import weibullScale, weibullMean

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormalGammaState:
    """Normal-Gamma belief of one design.

    Besides (m, n, a, b) the state keeps its prior and the observations themselves; the
    statistics are exactly rounded sums, so any permutation of the data gives the same state.
    """
    m: float
    n: float
    a: float
    b: float
    prior: Tuple[float, float, float, float] = NG_PRIOR
    observations: Tuple[float, ...] = ()

    @property
    def count(self):
        return len(self.observations)

    @classmethod
    def fromPrior(cls, prior=NG_PRIOR):
        m0, n0, a0, b0 = prior
        if n0 <= 0 or a0 <= 0 or b0 <= 0:
            raise ValueError('Normal-Gamma prior needs n0, a0, b0 > 0')
        return cls(m=m0, n=n0, a=a0, b=b0, prior=tuple(prior))


@dataclass(frozen=True)
class GridPosterior:
    rho: np.ndarray
    k: np.ndarray
    logWeights: np.ndarray

    def nodes(self):
        '''Flattened (rho, k) coordinates of every node, row-major over (rho, k)'''
        rr, kk = np.meshgrid(self.rho, self.k, indexing='ij')
        return rr.ravel(), kk.ravel()

    def normalizedWeights(self):
        lw = self.logWeights.ravel()
        top = np.max(lw)
        if not np.isfinite(top):
            raise PosteriorSamplingError('every grid node has zero posterior weight')
        w = np.exp(lw - top)
        return w / w.sum()


def ngFromStats(prior, count, mean, ssd):
    """Posterior (m, n, a, b) after `count` observations with sample mean `mean` and
    sum of squared deviations `ssd`."""
    m0, n0, a0, b0 = prior
    if count == 0:
        return m0, n0, a0, b0
    n = n0 + count
    m = (n0 * m0 + count * mean) / n
    a = a0 + count / 2.0
    b = b0 + 0.5 * ssd + 0.5 * n0 * count * (mean - m0) ** 2 / n
    return m, n, a, b


def ngUpdate(state, value):
    observations = state.observations + (float(value),)
    count = len(observations)
    mean = math.fsum(observations) / count
    ssd = math.fsum((x - mean) ** 2 for x in observations)
    m, n, a, b = ngFromStats(state.prior, count, mean, ssd)
    return replace(state, m=m, n=n, a=a, b=b, observations=observations)


def ngSample(state, rng, thetaBox=None):
    """(mu, sigma^2) draw: precision ~ Gamma(shape a, rate b), mu ~ N(m, sigma^2/n), truncated to thetaBox."""
    for _ in range(REJECTION_BUDGET):
        var = 1.0 / rng.gamma(state.a, 1.0 / state.b)
        mu = rng.normal(state.m, np.sqrt(var / state.n))
        if thetaBox is None or _inBox(mu, var, thetaBox):
            return ParameterDraw(float(mu), float(var))
    raise PosteriorSamplingError('no Normal-Gamma draw inside theta_box after {} tries'.format(REJECTION_BUDGET))


def newGridPosterior(rhoSpec=GRID_RHO, kSpec=GRID_K):
    rho, k = np.linspace(*rhoSpec), np.linspace(*kSpec)
    return GridPosterior(rho=rho, k=k, logWeights=np.zeros((len(rho), len(k))))


def weibullLogLikelihood(value, tau, rho, k):
    """log p(value | rho, k) of a right-censored Weibull observation; value >= tau is censored."""
    if not value > 0:
        raise ValueError('Weibull observations must be positive, got {}'.format(value))
    if tau is not None and value >= tau:
        return -np.exp(k * (np.log(tau) - np.log(rho)))
    lz = np.log(value) - np.log(rho)
    return np.log(k) - np.log(rho) + (k - 1.0) * lz - np.exp(k * lz)


def gridUpdate(state, value, tau):
    if tau is not None and value > tau:
        raise ValueError('observation {} exceeds the censoring time {}'.format(value, tau))
    rr, kk = np.meshgrid(state.rho, state.k, indexing='ij')
    return replace(state, logWeights=state.logWeights + weibullLogLikelihood(value, tau, rr, kk))


def gridSample(state, rng):
    w = state.normalizedWeights()
    idx = rng.choice(len(w), p=w)
    rr, kk = state.nodes()
    return ParameterDraw(float(weibullMean(rr[idx], kk[idx])), float(kk[idx]))


def klGaussian(theta1, theta2):
    """KL(N(mu1, v1) || N(mu2, v2)) with theta = (mu, variance)."""
    (mu1, v1), (mu2, v2) = theta1, theta2
    if v1 <= 0 or v2 <= 0:
        raise ValueError('variances must be positive')
    return max(0.5 * np.log(v2 / v1) + (v1 + (mu1 - mu2) ** 2) / (2.0 * v2) - 0.5, 0.0)


def klWeibullCensored(theta1, theta2, tau):
    """KL divergence between two Weibull laws right-censored at tau, theta = (mu, k).

    Quadrature of the density part on (0, tau) plus the censoring atom at tau.
    """
    (mu1, k1), (mu2, k2) = theta1, theta2
    if min(mu1, k1, mu2, k2) <= 0:
        raise ValueError('Weibull parameters must be positive')
    if mu1 == mu2 and k1 == k2:
        return 0.0
    tau = np.inf if tau is None else float(tau)
    rho1, rho2 = weibullScale(mu1, k1), weibullScale(mu2, k2)

    def integrand(y):
        lf1 = weibullLogLikelihood(y, None, rho1, k1)
        lf2 = weibullLogLikelihood(y, None, rho2, k2)
        return np.exp(lf1) * (lf1 - lf2)

    res = integrate.quad(integrand, 0.0, tau, epsabs=KL_ABS_TOL, epsrel=1e-10, limit=200, full_output=1)
    value, abserr = res[0], res[1]
    if len(res) > 3 and abserr > 100 * KL_ABS_TOL:
        raise SolverError('Weibull KL quadrature did not converge: {}'.format(res[3]))
    if np.isfinite(tau):
        logS1, logS2 = -(tau / rho1) ** k1, -(tau / rho2) ** k2
        value += np.exp(logS1) * (logS1 - logS2)
    return max(float(value), 0.0)


def klWeibullCensoredArray(theta1, mu2, k2, tau):
    """Closed form of klWeibullCensored, vectorised over the second law's (mu, k).

    Under theta1, t = (Y/rho1)^k1 is a unit exponential cut at T = (tau/rho1)^k1, so every term
    of the log-likelihood ratio has an incomplete-gamma expectation.
    """
    mu1, k1 = float(theta1[0]), float(theta1[1])
    mu2, k2 = np.broadcast_arrays(np.asarray(mu2, dtype=float), np.asarray(k2, dtype=float))
    if mu1 <= 0 or k1 <= 0 or np.any(mu2 <= 0) or np.any(k2 <= 0):
        raise ValueError('Weibull parameters must be positive')
    rho1, rho2 = weibullScale(mu1, k1), weibullScale(mu2, k2)
    tau = np.inf if tau is None else float(tau)

    if np.isfinite(tau):
        T = (tau / rho1) ** k1
        survival = np.exp(-T)
        if T < 1e-8:
            logMean = T * (np.log(T) - 1.0)
        else:
            logMean = -np.euler_gamma - survival * np.log(T) - special.exp1(T)
        tMean = 1.0 - survival * (1.0 + T)
    else:
        T, survival, logMean, tMean = np.inf, 0.0, -np.euler_gamma, 1.0
    inside = 1.0 - survival

    # E[(Y/rho2)^k2; Y < tau]
    a = k2 / k1
    with np.errstate(over='ignore', divide='ignore'):
        powerMean = np.exp(k2 * np.log(rho1 / rho2) + special.gammaln(1.0 + a) +
                           np.log(special.gammainc(1.0 + a, T)))
        value = inside * (np.log(k1 / k2) - k1 * np.log(rho1) + k2 * np.log(rho2)) + \
                (k1 - k2) * (np.log(rho1) * inside + logMean / k1) - tMean + powerMean
        if np.isfinite(tau):
            value = value + survival * ((tau / rho2) ** k2 - T)
    value = np.maximum(value, 0.0)
    return float(value) if value.ndim == 0 else value


# ---------------------------------- Containers  -----------------------
class NormalGammaPosteriors:
    """Normal-Gamma beliefs of every design, refreshed from AllocationHistory statistics."""
    kind = POSTERIOR_NG

    def __init__(self, instance, prior=NG_PRIOR, thetaBox=None):
        self.prior = tuple(prior)
        if thetaBox is None:
            muLo, muHi, etaLo, etaHi = instance.thetaBox
            thetaBox = instance.thetaBox if instance.family == GAUSSIAN else (muLo, muHi, 0.0, np.inf)
        self.thetaBox = thetaBox
        size = instance.nDesigns
        self.m, self.n, self.a, self.b = [np.full(size, float(v)) for v in self.prior]

    def observe(self, design, value, history):
        self.m[design], self.n[design], self.a[design], self.b[design] = ngFromStats(
            self.prior, history.counts[design], history.means[design], history.m2[design])

    def state(self, design):
        return NormalGammaState(m=self.m[design], n=self.n[design], a=self.a[design], b=self.b[design],
                                prior=self.prior)

    def sampleParams(self, rng):
        var = 1.0 / rng.gamma(self.a, 1.0 / self.b)
        mu = rng.normal(self.m, np.sqrt(var / self.n))
        outside = ~_inBox(mu, var, self.thetaBox)
        tries = 0
        while np.any(outside):
            tries += 1
            if tries > REJECTION_BUDGET:
                raise PosteriorSamplingError('no Normal-Gamma draw inside theta_box for designs {}'.format(
                    np.flatnonzero(outside).tolist()))
            idx = np.flatnonzero(outside)
            var[idx] = 1.0 / rng.gamma(self.a[idx], 1.0 / self.b[idx])
            mu[idx] = rng.normal(self.m[idx], np.sqrt(var[idx] / self.n[idx]))
            outside[idx] = ~_inBox(mu[idx], var[idx], self.thetaBox)
        return mu, var

    def sampleMu(self, rng):
        return self.sampleParams(rng)[0]

    def posteriorMeans(self):
        return self.m.copy()

    def posteriorVariances(self):
        '''Posterior mean of sigma^2 per design'''
        return np.where(self.a > 1.0, self.b / np.maximum(self.a - 1.0, 1e-300), self.b / self.a)

    def pluginEstimates(self):
        return self.posteriorMeans(), self.posteriorVariances()

    def toDict(self):
        return {'kind': self.kind, 'm': self.m.tolist(), 'n': self.n.tolist(), 'a': self.a.tolist(),
                'b': self.b.tolist()}


class WeibullGridPosteriors:
    """Grid posteriors over (rho, k) for every design, sharing one lattice."""
    kind = POSTERIOR_GRID

    def __init__(self, instance, rhoSpec=GRID_RHO, kSpec=GRID_K, tau=None):
        self.tau = instance.tau if tau is None else tau
        self.grid = newGridPosterior(rhoSpec, kSpec)
        rr, kk = self.grid.nodes()
        self.logRho, self.kNodes = np.log(rr), kk
        self.muNodes = weibullMean(rr, kk)
        self.logWeights = np.zeros((instance.nDesigns, len(rr)))
        self._cdf = [None] * instance.nDesigns

    def observe(self, design, value, history=None):
        if self.tau is not None and value > self.tau:
            raise ValueError('observation {} exceeds the censoring time {}'.format(value, self.tau))
        if not value > 0:
            raise ValueError('Weibull observations must be positive, got {}'.format(value))
        if self.tau is not None and value >= self.tau:
            inc = -np.exp(self.kNodes * (np.log(self.tau) - self.logRho))
        else:
            lz = np.log(value) - self.logRho
            inc = np.log(self.kNodes) - self.logRho + (self.kNodes - 1.0) * lz - np.exp(self.kNodes * lz)
        self.logWeights[design] += inc
        self._cdf[design] = None

    def state(self, design):
        return GridPosterior(rho=self.grid.rho, k=self.grid.k,
                             logWeights=self.logWeights[design].reshape(self.grid.logWeights.shape).copy())

    def weights(self, design):
        lw = self.logWeights[design]
        top = np.max(lw)
        if not np.isfinite(top):
            raise PosteriorSamplingError('design {} has zero posterior weight everywhere'.format(design))
        w = np.exp(lw - top)
        return w / w.sum()

    def _cumulative(self, design):
        if self._cdf[design] is None:
            self._cdf[design] = np.cumsum(self.weights(design))
        return self._cdf[design]

    def sampleIndices(self, rng):
        u = rng.random(len(self.logWeights))
        idx = np.empty(len(u), dtype=int)
        for d in range(len(u)):
            cdf = self._cumulative(d)
            idx[d] = min(np.searchsorted(cdf, u[d] * cdf[-1], side='right'), len(cdf) - 1)
        return idx

    def sampleParams(self, rng):
        idx = self.sampleIndices(rng)
        return self.muNodes[idx], self.kNodes[idx]

    def sampleMu(self, rng):
        return self.muNodes[self.sampleIndices(rng)]

    def posteriorMeans(self):
        return np.array([self.weights(d) @ self.muNodes for d in range(len(self.logWeights))])

    def pluginEstimates(self):
        shapes = np.array([self.weights(d) @ self.kNodes for d in range(len(self.logWeights))])
        return self.posteriorMeans(), shapes

    def toDict(self):
        mu, k = self.pluginEstimates()
        return {'kind': self.kind, 'mu_mean': mu.tolist(), 'k_mean': k.tolist()}


def buildPosteriors(kind, instance, **params):
    if kind == POSTERIOR_NG:
        return NormalGammaPosteriors(instance, **params)
    if kind == POSTERIOR_GRID:
        if instance.family != WEIBULL:
            raise ValueError('grid posteriors need positive censored lifetimes (Weibull instances)')
        return WeibullGridPosteriors(instance, **params)
    raise ValueError('unknown posterior family {}, valid ones: {}'.format(kind, ', '.join(POSTERIOR_NAMES)))


# ---------------------------------- Utils functions  -----------------------
def _inBox(mu, var, thetaBox):
    muLo, muHi, etaLo, etaHi = thetaBox
    return (mu >= muLo) & (mu <= muHi) & (var >= etaLo) & (var <= etaHi)
