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


class ProtEqualAllocation(ProtSamplingPolicy):
    """Equal allocation: deterministic round-robin over contexts and, inside each, over designs."""
    _label = 'EA'
    _kinds = [EA]

    def step(self, state, posteriors, history, rng):
        return eaStep(state, self.instance)


def eaOrder(instance):
    """Sweep covering every design once: round r visits, in context order, the r-th design
    of each context that has one."""
    sizes = instance.contextSizes()
    order = []
    for r in range(int(sizes.max())):
        for c in range(instance.nContexts):
            if r < sizes[c]:
                order.append(int(instance.offsets[c]) + r)
    return order


def eaStep(state, instance):
    if state.sweep is None:
        state.sweep = eaOrder(instance)
    design = state.sweep[state.roundRobinCursor % len(state.sweep)]
    state.roundRobinCursor += 1
    return StepDecision(int(instance.contextOf[design]), design)
