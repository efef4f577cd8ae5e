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

import numpy as np

from cttts.constants import *
from cttts.objects import StepDecision
from .protocol_base import ProtSamplingPolicy
from .protocol_boldmc import candidateTriple, standardizedGaps


class ProtAOAmc(ProtSamplingPolicy):
    """One-step look-ahead baseline on Normal-Gamma posterior estimates."""
    _label = 'AOAmc'
    _kinds = [AOAMC]

    def step(self, state, posteriors, history, rng):
        return aoamcStep(posteriors, history, self.instance)

    def _validate(self):
        errors = super()._validate()
        if self.posterior != POSTERIOR_NG:
            errors.append('{}: the look-ahead needs the gaussian posterior'.format(self.name))
        return errors


def aoamcStep(posteriors, history, instance, estimates=None):
    """Same candidate triple as BOLDmc on posterior means and variances; sample d_T only if
    an extra sample there raises the context's smallest standardised gap more than at d'_T."""
    if np.any(history.counts < 2):
        raise ValueError('every design needs two samples before the look-ahead is defined')
    mu, var = estimates if estimates is not None else (posteriors.posteriorMeans(), posteriors.posteriorVariances())
    counts = history.counts.astype(float)
    c, d, dp, preferred, others = candidateTriple(mu, var, counts, instance)

    ahead = lookAheadValue(mu, var, counts, preferred, others, d)
    behind = lookAheadValue(mu, var, counts, preferred, others, dp)
    return StepDecision(c, d if ahead > behind else dp)


def lookAheadValue(mu, var, counts, preferred, others, design):
    trial = counts.copy()
    trial[design] += 1
    return float(standardizedGaps(mu, var, trial, preferred, others).min())
