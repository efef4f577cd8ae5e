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
Domain records shared by the whole package and the exception hierarchy.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .constants import *


class CtttsError(Exception):
    """Base class of the package errors"""


class ConfigError(CtttsError):
    pass


class SolverError(CtttsError):
    pass


class PosteriorSamplingError(CtttsError):
    pass


class ResampleCapError(CtttsError):
    pass


class ReplicationError(CtttsError):
    def __init__(self, rep, message):
        super().__init__('replication {}: {}'.format(rep, message))
        self.rep = rep
        self.message = message

    def __reduce__(self):
        return ReplicationError, (self.rep, self.message)


def _readOnly(values, dtype=float):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Fixed world being simulated: contexts, their designs, true parameters and top-m targets.

    Designs are stored in one global order, grouped by context, and mu/eta follow that order.
    For the Weibull family eta is the shape k and the scale is derived from mu.
    """
    family: str
    contexts: Tuple[str, ...]
    designs: Tuple[Tuple[str, ...], ...]
    mu: np.ndarray
    eta: np.ndarray
    m: Tuple[int, ...]
    thetaBox: Tuple[float, float, float, float]
    tau: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'contexts', tuple(self.contexts))
        object.__setattr__(self, 'designs', tuple(tuple(ds) for ds in self.designs))
        object.__setattr__(self, 'm', tuple(int(mc) for mc in self.m))
        object.__setattr__(self, 'thetaBox', tuple(float(v) for v in self.thetaBox))
        object.__setattr__(self, 'mu', _readOnly(self.mu))
        object.__setattr__(self, 'eta', _readOnly(self.eta))
        if self.tau is not None:
            object.__setattr__(self, 'tau', float(self.tau))

        sizes = [len(ds) for ds in self.designs]
        object.__setattr__(self, 'offsets', _readOnly(np.concatenate([[0], np.cumsum(sizes)]), dtype=int))
        object.__setattr__(self, 'contextOf', _readOnly(np.repeat(np.arange(len(sizes)), sizes), dtype=int))
        object.__setattr__(self, 'designIds', tuple(d for ds in self.designs for d in ds))
        object.__setattr__(self, '_designIndex', {d: i for i, d in enumerate(self.designIds)})
        object.__setattr__(self, '_contextIndex', {c: i for i, c in enumerate(self.contexts)})

        errors = self.validate()
        if errors:
            raise ValueError('Invalid problem instance: ' + '; '.join(errors))

    def validate(self):
        errors = []
        if self.family not in FAMILIES:
            errors.append('unknown family {}'.format(self.family))
        if len(self.designs) != len(self.contexts) or len(self.m) != len(self.contexts):
            errors.append('contexts, designs and m must have the same length')
            return errors
        if len(self._designIndex) != len(self.designIds):
            errors.append('design ids must be unique across contexts')
        if len(self._contextIndex) != len(self.contexts):
            errors.append('context ids must be unique')
        if len(self.mu) != self.nDesigns or len(self.eta) != self.nDesigns:
            errors.append('mu and eta need one value per design')
            return errors
        for c in range(self.nContexts):
            size = self.offsets[c + 1] - self.offsets[c]
            if not 1 <= self.m[c] <= size:
                errors.append('context {} needs 1 <= m <= {}'.format(self.contexts[c], size))
            mus = self.mu[self.contextSlice(c)]
            if len(np.unique(mus)) != len(mus):
                errors.append('context {} has tied means'.format(self.contexts[c]))
        muLo, muHi, etaLo, etaHi = self.thetaBox
        if np.any(self.mu <= muLo) or np.any(self.mu >= muHi) or np.any(self.eta <= etaLo) or \
                np.any(self.eta >= etaHi):
            errors.append('every true parameter must lie strictly inside theta_box')
        if self.family == WEIBULL and (self.tau is None or not self.tau > 0):
            errors.append('Weibull instances need a positive censoring time tau')
        return errors

    @property
    def nContexts(self):
        return len(self.contexts)

    @property
    def nDesigns(self):
        return len(self.designIds)

    def contextIndex(self, context):
        if isinstance(context, (int, np.integer)):
            if not 0 <= context < self.nContexts:
                raise KeyError('unknown context {}'.format(context))
            return int(context)
        if context not in self._contextIndex:
            raise KeyError('unknown context {}'.format(context))
        return self._contextIndex[context]

    def designIndex(self, design):
        if isinstance(design, (int, np.integer)):
            if not 0 <= design < self.nDesigns:
                raise KeyError('unknown design {}'.format(design))
            return int(design)
        if design not in self._designIndex:
            raise KeyError('unknown design {}'.format(design))
        return self._designIndex[design]

    def contextSlice(self, context):
        c = self.contextIndex(context)
        return slice(int(self.offsets[c]), int(self.offsets[c + 1]))

    def contextSizes(self):
        return np.diff(self.offsets)


@dataclass(frozen=True)
class Observation:
    design: int
    value: float


@dataclass(frozen=True)
class ParameterDraw:
    mu: float
    eta: float


@dataclass(frozen=True)
class StepDecision:
    context: int
    design: int
    resamplesUsed: int = 0
    fallback: bool = False


class AllocationHistory:
    """Per-design sample counts with running means and squared deviations (Welford)."""

    def __init__(self, instance):
        self.contextOf = instance.contextOf
        self.counts = np.zeros(instance.nDesigns, dtype=int)
        self.means = np.zeros(instance.nDesigns)
        self.m2 = np.zeros(instance.nDesigns)
        self.contextCounts = np.zeros(instance.nContexts, dtype=int)
        self.total = 0

    def add(self, design, value):
        self.counts[design] += 1
        delta = value - self.means[design]
        self.means[design] += delta / self.counts[design]
        self.m2[design] += delta * (value - self.means[design])
        self.contextCounts[self.contextOf[design]] += 1
        self.total += 1

    def psiBar(self):
        if self.total == 0:
            return np.zeros(len(self.counts))
        return self.counts / self.total

    def alphaBar(self):
        if self.total == 0:
            return np.zeros(len(self.contextCounts))
        return self.contextCounts / self.total

    def betaBar(self):
        '''Within-context ratios; NaN for designs of unvisited contexts'''
        ctx = self.contextCounts[self.contextOf].astype(float)
        with np.errstate(invalid='ignore', divide='ignore'):
            return np.where(ctx > 0, self.counts / ctx, np.nan)

    def sampleMeans(self):
        return self.means.copy()

    def sampleVariances(self):
        with np.errstate(invalid='ignore', divide='ignore'):
            return np.where(self.counts >= 2, self.m2 / np.maximum(self.counts - 1, 1), np.nan)

    def copy(self):
        new = object.__new__(AllocationHistory)
        new.contextOf = self.contextOf
        new.counts, new.means, new.m2 = self.counts.copy(), self.means.copy(), self.m2.copy()
        new.contextCounts, new.total = self.contextCounts.copy(), self.total
        return new

    def toDict(self):
        return {'total': int(self.total), 'counts': self.counts.tolist(), 'means': self.means.tolist(),
                'm2': self.m2.tolist()}


@dataclass
class AllocationVector:
    """Static allocation: alpha over contexts, beta within each context (local design order)."""
    alpha: np.ndarray
    beta: List[np.ndarray]
    gamma: np.ndarray
    value: float
    contextValues: np.ndarray
    preferred: List[List[int]]
    residual: float = float('nan')
    degraded: bool = False
    trajectory: List[float] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def psi(self):
        return np.concatenate([a * b for a, b in zip(self.alpha, self.beta)])

    def toDict(self, designIds=None):
        beta = [b.tolist() for b in self.beta]
        if designIds is not None:
            beta = [dict(zip(ids, b)) for ids, b in zip(designIds, beta)]
        return {'alpha': np.asarray(self.alpha).tolist(), 'beta': beta, 'gamma': np.asarray(self.gamma).tolist(),
                'value': float(self.value), 'context_values': np.asarray(self.contextValues).tolist(),
                'residual': float(self.residual), 'degraded': bool(self.degraded), 'warnings': list(self.warnings)}


@dataclass
class ReplicationRecord:
    rep: int
    checkpoints: np.ndarray
    correct: np.ndarray
    counts: np.ndarray
    history: AllocationHistory


@dataclass
class MetricsCurve:
    """PCS, PCSW and PCSE per (policy, checkpoint) with their standard errors.

    contextRatios (policy x checkpoint x context) and designRatios (policy x checkpoint x design)
    are the replication means of alpha_T(c) and of beta_T(c, d) inside each context.
    """
    policies: List[str]
    checkpoints: np.ndarray
    pcs: np.ndarray
    pcsSe: np.ndarray
    pcsw: np.ndarray
    pcswSe: np.ndarray
    pcse: np.ndarray
    pcseSe: np.ndarray
    reps: int
    flags: List[str] = field(default_factory=list)
    contextRatios: Optional[np.ndarray] = None
    designRatios: Optional[np.ndarray] = None

    def rows(self):
        for p, policy in enumerate(self.policies):
            for k, checkpoint in enumerate(self.checkpoints):
                yield (policy, int(checkpoint), self.pcs[p, k], self.pcsSe[p, k], self.pcsw[p, k],
                       self.pcswSe[p, k], self.pcse[p, k], self.pcseSe[p, k], self.reps)
