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
Problem instances: true top-m sets, observation sampling, the synthetic
Gaussian and Weibull generators and the JSON codec.
"""
import json, logging

import numpy as np
from scipy import special

from .constants import *
from .objects import ProblemInstance, Observation, ConfigError

logger = logging.getLogger(__name__)


def trueTopM(instance, context):
    """Ids of the m_c designs of the context with the largest mu."""
    c = instance.contextIndex(context)
    sl = instance.contextSlice(c)
    order = np.argsort(-instance.mu[sl], kind='stable')[:instance.m[c]]
    return frozenset(instance.designIds[sl.start + i] for i in order)


def trueTopMIndices(instance):
    '''Per context, the sorted global indices of the true top-m set'''
    tops = []
    for c in range(instance.nContexts):
        sl = instance.contextSlice(c)
        order = np.argsort(-instance.mu[sl], kind='stable')[:instance.m[c]]
        tops.append(np.sort(order + sl.start))
    return tops


def weibullScale(mu, k):
    return mu / special.gamma(1.0 + 1.0 / k)


def weibullMean(rho, k):
    return rho * special.gamma(1.0 + 1.0 / k)


def weibullInverseCdf(u, rho, k):
    return rho * (-np.log(u)) ** (1.0 / k)


def simulate(instance, design, rng):
    """One observation of the design drawn from its true sampling distribution."""
    d = instance.designIndex(design)
    mu, eta = instance.mu[d], instance.eta[d]
    if instance.family == GAUSSIAN:
        return Observation(d, float(rng.normal(mu, np.sqrt(eta))))

    u = rng.random()
    while u == 0.0:
        u = rng.random()
    w = weibullInverseCdf(u, weibullScale(mu, eta), eta)
    return Observation(d, float(min(w, instance.tau)))


def generateGaussianInstance(seed, nContexts, nDesigns, m=1):
    """Random Gaussian instance: mu ~ N(0, 10) (variance 10) and sigma ~ U[4, 6] per design."""
    if nContexts < 1 or nDesigns < 1:
        raise ValueError('need at least one context and one design')
    ms = _expandM(m, nContexts)
    if any(not 1 <= mc <= nDesigns for mc in ms):
        raise ValueError('m must lie in [1, {}]'.format(nDesigns))

    rng = np.random.default_rng(seed)
    mus, etas, designs = [], [], []
    for c in range(nContexts):
        mu = rng.normal(0.0, np.sqrt(GAUSSIAN_MEAN_VAR), size=nDesigns)
        mu = _redrawCollisions(mu, lambda: rng.normal(0.0, np.sqrt(GAUSSIAN_MEAN_VAR)))
        sigma = rng.uniform(*GAUSSIAN_SIGMA_RANGE, size=nDesigns)
        mus.append(mu)
        etas.append(sigma ** 2)
        designs.append([DESIGN_ID.format(c, j) for j in range(nDesigns)])

    return ProblemInstance(family=GAUSSIAN, contexts=[CONTEXT_ID.format(c) for c in range(nContexts)],
                           designs=designs, mu=np.concatenate(mus), eta=np.concatenate(etas), m=ms,
                           thetaBox=GAUSSIAN_THETA_BOX)


def generateWeibullInstance(seed, tau=None, sizes=WEIBULL_SIZES, m=WEIBULL_M):
    """Production-line style instance: right-censored Weibull lifetimes, mu ~ U[90, 110], k ~ U[2, 4]."""
    tau = WEIBULL_TAU if tau is None else float(tau)
    rng = np.random.default_rng(seed)
    mus, etas, designs = [], [], []
    for c, size in enumerate(sizes):
        mu = rng.uniform(*WEIBULL_MU_RANGE, size=size)
        mu = _redrawCollisions(mu, lambda: rng.uniform(*WEIBULL_MU_RANGE))
        mus.append(mu)
        etas.append(rng.uniform(*WEIBULL_K_RANGE, size=size))
        designs.append([DESIGN_ID.format(c, j) for j in range(size)])

    return ProblemInstance(family=WEIBULL, contexts=[CONTEXT_ID.format(c) for c in range(len(sizes))],
                           designs=designs, mu=np.concatenate(mus), eta=np.concatenate(etas), m=m,
                           thetaBox=WEIBULL_THETA_BOX, tau=tau)


def buildInstance(spec):
    """Instance from a config `instance` block: a generator spec or a path to a JSON file."""
    if spec.get('path'):
        return loadInstance(spec['path'])
    generator = spec.get('generator', GAUSSIAN)
    seed = spec.get('seed', DEFAULT_SEED)
    if generator == GAUSSIAN:
        return generateGaussianInstance(seed, spec.get('n_contexts', 10), spec.get('n_designs', 50), spec.get('m', 1))
    if generator == 'weibull':
        from cttts import Plugin
        tau = spec.get('tau', Plugin.getWeibullTau())
        return generateWeibullInstance(seed, tau=tau)
    raise ConfigError('unknown instance generator {}, valid ones: {}'.format(generator, ', '.join(GENERATORS)))


# ---------------------------------- JSON codec  -----------------------
def instanceToDict(instance):
    designs = []
    for c, ids in enumerate(instance.designs):
        for did in ids:
            d = instance.designIndex(did)
            designs.append({'context': instance.contexts[c], 'id': did,
                            'mu': float(instance.mu[d]), 'eta': float(instance.eta[d])})
    return {'family': instance.family, 'contexts': list(instance.contexts), 'designs': designs,
            'm': list(instance.m), 'tau': instance.tau, 'theta_box': list(instance.thetaBox)}


def instanceFromDict(dic):
    missing = [key for key in ['family', 'contexts', 'designs', 'm', 'theta_box'] if key not in dic]
    if missing:
        raise ConfigError('instance document misses keys: {}'.format(', '.join(missing)))
    contexts = list(dic['contexts'])
    perContext = {c: [] for c in contexts}
    for entry in dic['designs']:
        if entry['context'] not in perContext:
            raise ConfigError('design {} refers to unknown context {}'.format(entry['id'], entry['context']))
        perContext[entry['context']].append(entry)

    entries = [e for c in contexts for e in perContext[c]]
    try:
        return ProblemInstance(family=dic['family'], contexts=contexts,
                               designs=[[e['id'] for e in perContext[c]] for c in contexts],
                               mu=[float(e['mu']) for e in entries], eta=[float(e['eta']) for e in entries],
                               m=_expandM(dic['m'], len(contexts)), thetaBox=dic['theta_box'],
                               tau=dic.get('tau'))
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e))


def saveInstance(instance, path):
    # json writes floats with repr, the shortest string that round-trips bit exactly
    with open(path, 'w') as f:
        json.dump(instanceToDict(instance), f, indent=2)


def loadInstance(path):
    with open(path) as f:
        return instanceFromDict(json.load(f))


# ---------------------------------- Utils functions  -----------------------
def _expandM(m, nContexts):
    if isinstance(m, (list, tuple)):
        if len(m) != nContexts:
            raise ValueError('m needs one entry per context')
        return [int(mc) for mc in m]
    return [int(m)] * nContexts


def _redrawCollisions(values, draw):
    values = np.array(values)
    while len(np.unique(values)) != len(values):
        _, first = np.unique(values, return_index=True)
        for i in sorted(set(range(len(values))) - set(first)):
            logger.debug('Redrawing colliding design value %s', values[i])
            values[i] = draw()
    return values
