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

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from cttts.constants import *
from cttts.objects import ConfigError
from cttts.posteriors import buildPosteriors
from cttts.utils import topM, rankOrder

logger = logging.getLogger(__name__)


@dataclass
class PolicyState:
    """Mutable state of one policy inside one replication."""
    kind: str
    gamma: np.ndarray
    tuneSchedule: Tuple[int, ...] = TUNE_SCHEDULE
    roundRobinCursor: int = 0
    resampleCap: int = RESAMPLE_CAP
    allowFallback: bool = True
    rateFamily: Optional[str] = None
    nextTune: int = 0
    tuneLog: list = field(default_factory=list)
    sweep: Optional[list] = None

    def __post_init__(self):
        self.gamma = np.array(self.gamma, dtype=float)
        if np.any(self.gamma < 0) or np.any(self.gamma > 1):
            raise ValueError('gamma must lie in [0, 1]')
        self.tuneSchedule = tuple(int(t) for t in self.tuneSchedule)
        if any(b <= a for a, b in zip(self.tuneSchedule, self.tuneSchedule[1:])):
            raise ValueError('tune schedule must be strictly increasing')
        if self.resampleCap < 1:
            raise ValueError('resample cap must be positive')


class ProtSamplingPolicy:
    """Base class of the sequential sampling policies.

    Subclasses declare their parameters in _defineParams as
    {config key: (attribute, default, help)} and implement step().
    """
    _label = None
    _kinds = []

    def __init__(self, instance, name=None, **kwargs):
        self.instance = instance
        self.name = name or self._kinds[0]
        self.label = kwargs.pop('label', None) or self.name
        params = self._defineParams()
        unknown = sorted(set(kwargs) - set(params))
        if unknown:
            raise ConfigError('{}: unknown parameters {}, valid ones: {}'.format(
                self.name, ', '.join(unknown), ', '.join(sorted(params))))
        for key, (attr, default, _) in params.items():
            if key in kwargs:
                setattr(self, attr, kwargs[key])
            else:
                setattr(self, attr, default(instance) if callable(default) else default)

    def _defineParams(self):
        return {'posterior': ('posterior', lambda instance: POSTERIOR_NG,
                              'Posterior family used for sampling and final selection')}

    # --------------------------- Policy functions --------------------
    def newState(self):
        return PolicyState(kind=self.name, gamma=np.full(self.instance.nContexts, DEFAULT_GAMMA))

    def newPosteriors(self):
        return buildPosteriors(self.posterior, self.instance)

    def step(self, state, posteriors, history, rng):
        raise NotImplementedError

    ########################### Validation functions #######################

    def _validate(self):
        errors = []
        if self.posterior not in POSTERIOR_NAMES:
            errors.append('{}: unknown posterior {}, valid ones: {}'.format(self.name, self.posterior,
                                                                            ', '.join(POSTERIOR_NAMES)))
        elif self.posterior == POSTERIOR_GRID and self.instance.family != WEIBULL:
            errors.append('{}: the grid posterior needs a Weibull instance'.format(self.name))
        return errors

    def _citations(self):
        return []

    def getLabel(self):
        return self.label


def selectFinal(posteriors, instance, mode=SELECT_PLUGIN, rng=None, draws=DEFAULT_BAYES_DRAWS):
    """Selected top-m set per context, as sorted global design indices.

    plugin ranks designs by posterior mean; bayes keeps the set most often on top
    over `draws` joint posterior draws, the posterior factorising across contexts.
    """
    means = posteriors.posteriorMeans()
    plugin = topSets(means, instance)
    if mode == SELECT_PLUGIN:
        return plugin
    if mode != SELECT_BAYES:
        raise ValueError('unknown selection mode {}, valid ones: {}'.format(mode, ', '.join(SELECTION_MODES)))
    if rng is None:
        raise ValueError('bayes selection needs a random stream')

    counters = [Counter() for _ in range(instance.nContexts)]
    for _ in range(draws):
        for c, top in enumerate(topSets(posteriors.sampleMu(rng), instance)):
            counters[c][tuple(top)] += 1

    selected = []
    for c, counter in enumerate(counters):
        sl = instance.contextSlice(c)
        rank = np.empty(sl.stop - sl.start, dtype=int)
        rank[rankOrder(means[sl])] = np.arange(len(rank))
        best = max(counter.values())
        tied = [key for key, n in counter.items() if n == best]
        key = min(tied, key=lambda k: (sum(rank[i - sl.start] for i in k), k))
        selected.append(np.array(key, dtype=int))
    return selected


# ---------------------------------- Utils functions  -----------------------
def topSets(values, instance, logTies=False):
    '''Per context, sorted global indices of the m_c largest values'''
    sets = []
    for c in range(instance.nContexts):
        sl = instance.contextSlice(c)
        top, tied = topM(values[sl], instance.m[c])
        if tied and logTies:
            logger.debug('Tied posterior draw in context %s, keeping the lowest design ids', instance.contexts[c])
        sets.append(top + sl.start)
    return sets
