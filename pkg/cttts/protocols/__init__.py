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

from cttts.constants import *
from cttts.objects import ConfigError

from .protocol_base import ProtSamplingPolicy, PolicyState, selectFinal, topSets
from .protocol_tttsc import ProtTTTSC, tttscStep, gammaTune, analyticPolicyProb
from .protocol_ea import ProtEqualAllocation, eaStep, eaOrder
from .protocol_boldmc import ProtBOLDmc, boldmcStep, candidateTriple
from .protocol_aoamc import ProtAOAmc, aoamcStep

POLICY_CLASSES = {TTTSC_COIN: ProtTTTSC, TTTSC_TUNE: ProtTTTSC, EA: ProtEqualAllocation,
                  BOLDMC: ProtBOLDmc, AOAMC: ProtAOAmc}


def buildPolicy(policyConfig, instance):
    """Policy object from a config entry {"name": ..., parameters...}; raises ConfigError when invalid."""
    params = dict(policyConfig)
    name = params.pop('name', None)
    if name not in POLICY_CLASSES:
        raise ConfigError('unknown policy name {}, valid names: {}'.format(name, ', '.join(POLICY_NAMES)))
    policy = POLICY_CLASSES[name](instance, name=name, **params)
    errors = policy._validate()
    if errors:
        raise ConfigError('; '.join(errors))
    return policy
