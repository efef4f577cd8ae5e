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
from cttts.utils import topM
from .protocol_base import ProtSamplingPolicy


class ProtBOLDmc(ProtSamplingPolicy):
    """Balance-tracking baseline: find the hardest (context, top design, other design) triple
    by the standardised gap, then sample the side whose first-order balance term lags."""
    _label = 'BOLDmc'
    _kinds = [BOLDMC]

    def step(self, state, posteriors, history, rng):
        return boldmcStep(history, self.instance)

    def _citations(self):
        return ['chen2000simulation']


def boldmcStep(history, instance, estimates=None):
    if np.any(history.counts < 2):
        raise ValueError('every design needs two samples before the sample variance is defined')
    mu, var = estimates if estimates is not None else (history.sampleMeans(), history.sampleVariances())
    var = np.maximum(var, VARIANCE_FLOOR)
    counts = history.counts.astype(float)
    c, d, dp, preferred, others = candidateTriple(mu, var, counts, instance)

    psi = counts / counts.sum()
    preferredTerm = np.sum(psi[preferred] ** 2 / var[preferred])
    otherTerm = np.sum(psi[others] ** 2 / var[others])
    return StepDecision(c, d if preferredTerm < otherTerm else dp)


def candidateTriple(mu, var, counts, instance):
    """argmin over contexts c, d in the estimated top set and d' outside it of
    (mu_d - mu_d')^2 / (var_d/N_d + var_d'/N_d'); first minimum in (context, d, d') id order.

    Returns (c, d, d', preferred indices of c, other indices of c).
    """
    best = None
    for c in range(instance.nContexts):
        preferred, others = contextSplit(mu, instance, c)
        grid = standardizedGaps(mu, var, counts, preferred, others)
        p, u = np.unravel_index(int(np.argmin(grid)), grid.shape)
        if best is None or grid[p, u] < best[0]:
            best = (grid[p, u], c, int(preferred[p]), int(others[u]), preferred, others)
    return best[1:]


def contextSplit(mu, instance, c):
    sl = instance.contextSlice(c)
    top, _ = topM(mu[sl], instance.m[c])
    preferred = top + sl.start
    others = np.setdiff1d(np.arange(sl.start, sl.stop), preferred)
    return preferred, others


def standardizedGaps(mu, var, counts, preferred, others):
    var = np.maximum(var, VARIANCE_FLOOR)
    gap2 = (mu[preferred][:, None] - mu[others][None, :]) ** 2
    noise = (var[preferred] / counts[preferred])[:, None] + (var[others] / counts[others])[None, :]
    return gap2 / noise
