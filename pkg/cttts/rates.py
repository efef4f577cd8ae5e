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
Posterior large-deviations rate functions G_{d,d'}(x, y) for a preferred
design d and a competitor d'. Every spec is a concave, nondecreasing and
1-homogeneous function of the two sampling ratios; `inverse` gives the
smallest y reaching a target value, which is what the balance solvers need.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from scipy import interpolate, optimize

from .constants import *
from .objects import ConfigError
from .utils import smallestAtLeast, gridMinimize, topM
from .posteriors import klWeibullCensoredArray

logger = logging.getLogger(__name__)


def rateGaussianKnownVar(psiD, psiDp, muD, muDp, varD, varDp):
    """(mu_d - mu_d')^2 / (var_d/psi_d + var_d'/psi_d'), zero when either ratio is zero."""
    psiD, psiDp = np.asarray(psiD, dtype=float), np.asarray(psiDp, dtype=float)
    positive = (psiD > 0) & (psiDp > 0)
    with np.errstate(divide='ignore', invalid='ignore'):
        value = (muD - muDp) ** 2 / (varD / psiD + varDp / psiDp)
    value = np.where(positive, value, 0.0)
    return float(value) if value.ndim == 0 else value


class RateFunctionSpec:
    family = None

    def __init__(self, thetaD=None, thetaDp=None, tol=LINE_SEARCH_TOL):
        self.thetaD = None if thetaD is None else tuple(float(v) for v in thetaD)
        self.thetaDp = None if thetaDp is None else tuple(float(v) for v in thetaDp)
        self.tol = tol

    def value(self, x, y):
        raise NotImplementedError

    def inverse(self, x, z, upper):
        """Smallest y in [0, upper] with value(x, y) >= z, inf if none."""
        if z <= 0:
            return 0.0
        return smallestAtLeast(lambda y: self.value(x, y), z, 0.0, upper)

    def partials(self, x, y):
        hx, hy = self._step(x), self._step(y)
        dx = (self.value(x + hx, y) - self.value(x - hx, y)) / (2 * hx)
        dy = (self.value(x, y + hy) - self.value(x, y - hy)) / (2 * hy)
        return float(dx), float(dy)

    def isKink(self, x, y):
        '''True when one-sided derivatives disagree in either argument'''
        g = self.value(x, y)
        for dx, dy, h in [(1, 0, self._step(x)), (0, 1, self._step(y))]:
            right = (self.value(x + dx * h, y + dy * h) - g) / h
            left = (g - self.value(x - dx * h, y - dy * h)) / h
            if abs(right - left) > KINK_TOL * (abs(right) + abs(left)) + 1e-10:
                return True
        return False

    def toDict(self):
        dic = {'family': self.family}
        if self.thetaD is not None:
            dic.update({'theta_d': list(self.thetaD), 'theta_dp': list(self.thetaDp)})
        return dic

    def _step(self, v):
        return FD_STEP * max(abs(v), 1e-8)


class ProfileRate(RateFunctionSpec):
    """Rate obtained as inf over a common crossing mu in [mu*_d', mu*_d] of
    x * cost_d(mu) + y * cost_d'(mu), each cost already minimised over the nuisance parameter."""

    def __init__(self, thetaD, thetaDp, tol=LINE_SEARCH_TOL):
        super().__init__(thetaD, thetaDp, tol)
        if not self.thetaD[0] > self.thetaDp[0]:
            raise ValueError('the preferred design needs the larger mean: {} <= {}'.format(
                self.thetaD[0], self.thetaDp[0]))

    def cost(self, theta, mu):
        raise NotImplementedError

    def profileValue(self, x, y):
        '''Numerical rate and its minimising crossing value'''
        lo, hi = self.thetaDp[0], self.thetaD[0]
        if x <= 0:
            return 0.0, lo
        if y <= 0:
            return 0.0, hi
        value = lambda mu: x * self.cost(self.thetaD, mu) + y * self.cost(self.thetaDp, mu)
        mu, val = gridMinimize(value, lo, hi, xtol=self.tol * 1e-4 * max(hi - lo, 1.0))
        return max(val, 0.0), mu

    def value(self, x, y):
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return self.profileValue(float(x), float(y))[0]
        return np.vectorize(lambda a, b: self.profileValue(a, b)[0])(x, y)

    def costAt(self, mu):
        return self.cost(self.thetaD, mu), self.cost(self.thetaDp, mu)

    def partials(self, x, y):
        '''Envelope derivatives, the two costs at the minimising crossing mean'''
        if x <= 0 or y <= 0:
            return super().partials(x, y)
        _, mu = self.profileValue(float(x), float(y))
        return tuple(float(c) for c in self.costAt(mu))

    def inverse(self, x, z, upper):
        """Brent root of the increasing map y -> value(x, y) - z on [0, upper]."""
        if z <= 0:
            return 0.0
        if x <= 0:
            return np.inf
        gap = lambda y: self.value(x, y) - z
        top = gap(upper)
        if top < 0:
            return np.inf
        if top == 0:
            return float(upper)
        return float(optimize.brentq(gap, 0.0, upper, xtol=BRENT_XTOL))


class GaussianKnownVarRate(ProfileRate):
    family = RATE_KNOWN_VAR

    def __init__(self, thetaD, thetaDp, tol=LINE_SEARCH_TOL):
        super().__init__(thetaD, thetaDp, tol)
        if self.thetaD[1] <= 0 or self.thetaDp[1] <= 0:
            raise ValueError('variances must be positive')
        self.gap2 = (self.thetaD[0] - self.thetaDp[0]) ** 2

    def cost(self, theta, mu):
        return (theta[0] - mu) ** 2 / theta[1]

    def value(self, x, y):
        return rateGaussianKnownVar(x, y, self.thetaD[0], self.thetaDp[0], self.thetaD[1], self.thetaDp[1])

    def inverse(self, x, z, upper):
        if z <= 0:
            return 0.0
        if x <= 0:
            return np.inf
        room = self.gap2 / z - self.thetaD[1] / x
        if room <= 0:
            return np.inf
        y = self.thetaDp[1] / room
        return y if y <= upper else np.inf

    def partials(self, x, y):
        v1, v2 = self.thetaD[1], self.thetaDp[1]
        s = v1 / x + v2 / y
        return self.gap2 * v1 / x ** 2 / s ** 2, self.gap2 * v2 / y ** 2 / s ** 2

    def isKink(self, x, y):
        return False


class GaussianUnknownVarRate(ProfileRate):
    family = RATE_UNKNOWN_VAR

    def cost(self, theta, mu):
        # the variance minimising the KL at a given mean is var* + (mu* - mu)^2
        return 0.5 * np.log1p((theta[0] - mu) ** 2 / theta[1])


class WeibullCensoredRate(ProfileRate):
    """Censored-Weibull rate. Both profiled costs depend on the crossing mean only, so they are
    tabulated once on PROFILE_NODES means and interpolated by cubic splines; the rate is then the
    exact minimum of the spline combination."""
    family = RATE_WEIBULL

    def __init__(self, thetaD, thetaDp, tau=WEIBULL_TAU, thetaBox=WEIBULL_THETA_BOX, tol=LINE_SEARCH_TOL):
        super().__init__(thetaD, thetaDp, tol)
        self.tau = tau
        self.kBounds = (max(thetaBox[2], GRID_K[0]), thetaBox[3])
        self._tables = None

    def cost(self, theta, mu):
        '''min over the shape k of KL(theta || (mu, k))'''
        _, value = gridMinimize(lambda k: klWeibullCensoredArray(theta, mu, k, self.tau), *self.kBounds,
                                nGrid=NUISANCE_GRID, xtol=1e-8, vectorized=True)
        return value

    def costTables(self):
        if self._tables is None:
            nodes = np.linspace(self.thetaDp[0], self.thetaD[0], PROFILE_NODES)
            self._tables = tuple(interpolate.CubicSpline(nodes, [self.cost(theta, mu) for mu in nodes])
                                 for theta in (self.thetaD, self.thetaDp))
        return self._tables

    def costAt(self, mu):
        costD, costDp = self.costTables()
        return costD(mu), costDp(mu)

    def profileValue(self, x, y):
        lo, hi = self.thetaDp[0], self.thetaD[0]
        if x <= 0:
            return 0.0, lo
        if y <= 0:
            return 0.0, hi
        costD, costDp = self.costTables()
        total = interpolate.PPoly(x * costD.c + y * costDp.c, costD.x)
        candidates = np.concatenate([[lo, hi], total.derivative().roots(extrapolate=False)])
        candidates = candidates[np.isfinite(candidates)]
        values = total(candidates)
        best = int(np.argmin(values))
        return max(float(values[best]), 0.0), float(candidates[best])

    def toDict(self):
        dic = super().toDict()
        dic['tau'] = self.tau
        return dic


class HarmonicRate(RateFunctionSpec):
    '''Synthetic rate scale * 2 / (1/x + 1/y)'''
    family = RATE_HARMONIC

    def __init__(self, scale=1.0, tol=LINE_SEARCH_TOL):
        super().__init__(tol=tol)
        self.scale = float(scale)

    def value(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        with np.errstate(divide='ignore', invalid='ignore'):
            value = np.where((x > 0) & (y > 0), 2.0 * self.scale / (1.0 / x + 1.0 / y), 0.0)
        return float(value) if value.ndim == 0 else value

    def inverse(self, x, z, upper):
        if z <= 0:
            return 0.0
        room = 2.0 * self.scale / z - 1.0 / x if x > 0 else -1.0
        if room <= 0:
            return np.inf
        y = 1.0 / room
        return y if y <= upper else np.inf

    def toDict(self):
        return {'family': self.family, 'scale': self.scale}


class MinRate(RateFunctionSpec):
    '''Synthetic rate scale * min(x, y), flat in y once y exceeds x'''
    family = RATE_MIN

    def __init__(self, scale=1.0, tol=LINE_SEARCH_TOL):
        super().__init__(tol=tol)
        self.scale = float(scale)

    def value(self, x, y):
        value = self.scale * np.minimum(x, y)
        return float(value) if np.ndim(value) == 0 else value

    def inverse(self, x, z, upper):
        if z <= 0:
            return 0.0
        if self.scale * x < z:
            return np.inf
        y = z / self.scale
        return y if y <= upper else np.inf

    def toDict(self):
        return {'family': self.family, 'scale': self.scale}


def rateSpec(family, thetaD=None, thetaDp=None, tau=None, thetaBox=None, scale=1.0):
    if family == RATE_KNOWN_VAR:
        return GaussianKnownVarRate(thetaD, thetaDp)
    if family == RATE_UNKNOWN_VAR:
        return GaussianUnknownVarRate(thetaD, thetaDp)
    if family == RATE_WEIBULL:
        return WeibullCensoredRate(thetaD, thetaDp, tau=WEIBULL_TAU if tau is None else tau,
                                   thetaBox=WEIBULL_THETA_BOX if thetaBox is None else thetaBox)
    if family == RATE_HARMONIC:
        return HarmonicRate(scale)
    if family == RATE_MIN:
        return MinRate(scale)
    raise ValueError('unknown rate family {}, valid ones: {}'.format(family, ', '.join(RATE_FAMILIES)))


def rateGeneric(psiD, psiDp, thetaD, thetaDp, family, tau=None, thetaBox=None, returnCrossing=False):
    """Rate by numerical minimisation over the crossing mean, whatever the family.

    For the known-variance family this deliberately bypasses the closed form.
    """
    spec = rateSpec(family, thetaD, thetaDp, tau=tau, thetaBox=thetaBox)
    if not isinstance(spec, ProfileRate):
        raise ValueError('{} has no parametric profile'.format(family))
    value, mu = spec.profileValue(float(psiD), float(psiDp))
    return (value, mu) if returnCrossing else value


@dataclass
class ContextRates:
    """Rate specs of one context: designs in local order, the preferred (top-m) set and
    one spec per (preferred, other) pair of local indices."""
    designIds: List[str]
    preferred: List[int]
    rates: Dict[Tuple[int, int], RateFunctionSpec] = field(default_factory=dict)

    def __post_init__(self):
        self.preferred = sorted(int(i) for i in self.preferred)
        missing = [(i, j) for i in self.preferred for j in self.undesired if (i, j) not in self.rates]
        if missing:
            raise ValueError('missing rate specs for pairs {}'.format(missing))

    @property
    def undesired(self):
        return [j for j in range(len(self.designIds)) if j not in self.preferred]

    @property
    def m(self):
        return len(self.preferred)

    def pairs(self):
        return [(i, j) for i in self.preferred for j in self.undesired]

    def bestSpecs(self):
        '''Specs of (best, d') for d' in U, only meaningful when m = 1'''
        best = self.preferred[0]
        return [self.rates[(best, j)] for j in self.undesired]

    def toDict(self):
        return {'designs': list(self.designIds), 'preferred': [self.designIds[i] for i in self.preferred],
                'rates': [dict(pair=[self.designIds[i], self.designIds[j]], **spec.toDict())
                          for (i, j), spec in sorted(self.rates.items())]}


def contextRatesFromEstimates(designIds, mu, eta, m, family, tau=None, thetaBox=None):
    """Context rates built from (plug-in or true) parameters; the preferred set is the top-m by mu."""
    preferred, _ = topM(mu, m)
    preferred = [int(i) for i in preferred]
    rates = {}
    for i in preferred:
        for j in range(len(designIds)):
            if j not in preferred:
                rates[(i, j)] = rateSpec(family, (mu[i], eta[i]), (mu[j], eta[j]), tau=tau, thetaBox=thetaBox)
    return ContextRates(list(designIds), preferred, rates)


def contextRatesFromInstance(instance, family=None):
    """True-parameter rates of every context of an instance."""
    if family is None:
        family = RATE_KNOWN_VAR if instance.family == GAUSSIAN else RATE_WEIBULL
    out = []
    for c in range(instance.nContexts):
        sl = instance.contextSlice(c)
        out.append(contextRatesFromEstimates(instance.designIds[sl], instance.mu[sl], instance.eta[sl],
                                             instance.m[c], family, tau=instance.tau,
                                             thetaBox=instance.thetaBox))
    return out


def contextRatesFromDict(dic):
    """Rate documents: {"kind": "rates", "contexts": [{"designs", "preferred", "rates": [...]}]}."""
    out = []
    try:
        for ctx in dic['contexts']:
            ids = list(ctx['designs'])
            index = {d: i for i, d in enumerate(ids)}
            rates = {}
            for entry in ctx['rates']:
                i, j = (index[d] for d in entry['pair'])
                rates[(i, j)] = rateSpec(entry['family'], entry.get('theta_d'), entry.get('theta_dp'),
                                         tau=entry.get('tau'), thetaBox=entry.get('theta_box'),
                                         scale=entry.get('scale', 1.0))
            out.append(ContextRates(ids, [index[d] for d in ctx['preferred']], rates))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError('invalid rate document: {}'.format(e))
    return out
