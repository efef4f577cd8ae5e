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

import itertools, logging, math

import numpy as np

from cttts.constants import *
from cttts.objects import StepDecision, ResampleCapError, CtttsError
from cttts.rates import contextRatesFromEstimates
from cttts.allocation import optimizeGamma, solveTopmAllocation
from .protocol_base import ProtSamplingPolicy, PolicyState, topSets

logger = logging.getLogger(__name__)


class ProtTTTSC(ProtSamplingPolicy):
    """Top-two Thompson sampling for contextual top-m selection.

    A first posterior draw proposes a top set per context; further draws are taken
    until some contexts disagree. One disagreeing context is picked uniformly and
    the policy samples from the first proposal with probability gamma(c), from the
    second otherwise. tttsc-coin keeps gamma fixed, tttsc-tune re-solves it on a schedule.
    """
    _label = 'TTTS-C'
    _kinds = [TTTSC_COIN, TTTSC_TUNE]

    def _defineParams(self):
        params = super()._defineParams()
        params.update({
            'posterior': ('posterior', lambda instance: POSTERIOR_GRID if instance.family == WEIBULL else POSTERIOR_NG,
                          'Posterior family: gaussian (Normal-Gamma) or weibull (grid)'),
            'gamma': ('gamma', DEFAULT_GAMMA, 'Probability of sampling the first top-two candidate'),
            'resample_cap': ('resampleCap', RESAMPLE_CAP, 'Maximum posterior re-draws per step'),
            'allow_fallback': ('allowFallback', True, 'Fall back to the least sampled design when the cap is hit'),
            'tune_schedule': ('tuneSchedule', list(TUNE_SCHEDULE), 'Budgets at which gamma is re-solved'),
            'tune_rate_family': ('tuneRateFamily', None, 'Rate family of the tuning problem'),
        })
        return params

    # --------------------------- Policy functions --------------------
    def newState(self):
        return PolicyState(kind=self.name, gamma=np.broadcast_to(np.asarray(self.gamma, dtype=float),
                                                                 (self.instance.nContexts,)),
                           tuneSchedule=tuple(self.tuneSchedule), resampleCap=int(self.resampleCap),
                           allowFallback=bool(self.allowFallback), rateFamily=self.tuneRateFamily)

    def step(self, state, posteriors, history, rng):
        if self.name == TTTSC_TUNE:
            self.tuneIfDue(state, posteriors, history)
        return tttscStep(posteriors, state, self.instance, rng, history=history)

    def tuneIfDue(self, state, posteriors, history):
        due = False
        while state.nextTune < len(state.tuneSchedule) and history.total >= state.tuneSchedule[state.nextTune]:
            state.nextTune += 1
            due = True
        if due:
            gammaTune(posteriors, state, self.instance, history)

    ########################### Validation functions #######################

    def _validate(self):
        errors = super()._validate()
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.ndim > 1 or (gamma.ndim == 1 and len(gamma) != self.instance.nContexts):
            errors.append('{}: gamma must be a number or one value per context'.format(self.name))
        elif np.any(gamma <= 0) or np.any(gamma >= 1):
            errors.append('{}: gamma must lie strictly inside (0, 1)'.format(self.name))
        if int(self.resampleCap) < 1:
            errors.append('{}: resample_cap must be positive'.format(self.name))
        schedule = list(self.tuneSchedule)
        if any(b <= a for a, b in zip(schedule, schedule[1:])):
            errors.append('{}: tune_schedule must be strictly increasing'.format(self.name))
        if self.tuneRateFamily is not None and self.tuneRateFamily not in RATE_FAMILIES[:3]:
            errors.append('{}: unknown tune_rate_family {}'.format(self.name, self.tuneRateFamily))
        return errors

    def _citations(self):
        return ['russo2020simple']


def tttscStep(posteriors, state, instance, rng, history=None):
    """One TTTS-C allocation decision; reduces to plain top-two sampling per context when m_c = 1."""
    first = topSets(posteriors.sampleMu(rng), instance, logTies=True)
    disagree = []
    for resamples in range(1, state.resampleCap + 1):
        second = topSets(posteriors.sampleMu(rng), instance, logTies=True)
        disagree = [c for c in range(instance.nContexts) if not np.array_equal(first[c], second[c])]
        if disagree:
            break

    if not disagree:
        if not state.allowFallback:
            raise ResampleCapError('no disagreeing context after {} posterior draws'.format(state.resampleCap))
        c = int(rng.integers(instance.nContexts))
        sl = instance.contextSlice(c)
        counts = np.zeros(sl.stop - sl.start, dtype=int) if history is None else history.counts[sl]
        design = sl.start + int(np.argmin(counts))
        logger.info('Resample cap %d reached, sampling least sampled design %s', state.resampleCap,
                    instance.designIds[design])
        return StepDecision(c, design, state.resampleCap, True)

    c = disagree[int(rng.integers(len(disagree)))]
    if rng.random() < state.gamma[c]:
        candidates = np.setdiff1d(first[c], second[c])
    else:
        candidates = np.setdiff1d(second[c], first[c])
    return StepDecision(c, int(candidates[int(rng.integers(len(candidates)))]), resamples)


def gammaTune(posteriors, state, instance, history=None, solver=None):
    """Re-solve gamma from plug-in estimates; on solver failure gamma stays as it was."""
    mu, eta = posteriors.pluginEstimates()
    family = state.rateFamily or (RATE_WEIBULL if posteriors.kind == POSTERIOR_GRID else RATE_KNOWN_VAR)
    if family in (RATE_KNOWN_VAR, RATE_UNKNOWN_VAR) and history is not None:
        sampleVar = history.sampleVariances()
        eta = np.where(np.isfinite(sampleVar) & (sampleVar > 0), sampleVar, eta)
    if solver is None:
        solver = _defaultSolver

    try:
        contextRates = []
        for c in range(instance.nContexts):
            sl = instance.contextSlice(c)
            contextRates.append(contextRatesFromEstimates(instance.designIds[sl], mu[sl], eta[sl], instance.m[c],
                                                          family, tau=instance.tau, thetaBox=instance.thetaBox))
        allocation = solver(contextRates)
        gamma = np.array([allocation.beta[c][ctx.preferred].sum() for c, ctx in enumerate(contextRates)])
    except (CtttsError, ValueError, ArithmeticError) as e:
        logger.warning('Gamma tuning failed at budget %s, keeping gamma: %s',
                       None if history is None else history.total, e)
        state.tuneLog.append((None if history is None else history.total, None))
        return state.gamma

    state.gamma = np.clip(gamma, *GAMMA_BOUNDS)
    state.tuneLog.append((None if history is None else history.total, state.gamma.tolist()))
    logger.info('Gamma re-solved: %s', np.round(state.gamma, 4).tolist())
    return state.gamma


def analyticPolicyProb(pi, gamma):
    """Exact sampling probabilities of TTTS-C (single best per context) for given
    probabilities pi[c][d] that design d is the best of context c.

    Returns (psi over all designs, alpha over contexts, beta per context).
    """
    pi = [np.asarray(p, dtype=float) for p in pi]
    nContexts = len(pi)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (nContexts,))
    if nContexts > POLICY_PROB_MAX_CONTEXTS or math.prod(len(p) for p in pi) > POLICY_PROB_MAX_FUNCTIONS:
        raise ValueError('instance too large for exact enumeration')
    for p in pi:
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError('each context needs a probability vector')
        if p.max() >= 1.0:
            raise ValueError('degenerate probabilities: a context has a certain best design')

    offsets = np.concatenate([[0], np.cumsum([len(p) for p in pi])])
    psi, alpha = np.zeros(offsets[-1]), np.zeros(nContexts)
    for leaders in itertools.product(*[range(len(p)) for p in pi]):
        stay = np.array([p[d] for p, d in zip(pi, leaders)])
        weightLeaders = np.prod(stay)
        if weightLeaders == 0:
            continue
        move = 1.0 - stay
        share = _uniformShare(move) / (1.0 - weightLeaders)
        for c, d in enumerate(leaders):
            mass = weightLeaders * share[c]
            alpha[c] += mass
            psi[offsets[c] + d] += mass * gamma[c]
            others = pi[c] / move[c] * mass * (1.0 - gamma[c])
            others[d] = 0.0
            psi[offsets[c]:offsets[c + 1]] += others

    beta = [psi[offsets[c]:offsets[c + 1]] / alpha[c] if alpha[c] > 0 else np.full(len(pi[c]), np.nan)
            for c in range(nContexts)]
    return psi, alpha, beta


# ---------------------------------- Utils functions  -----------------------
def _defaultSolver(contextRates):
    if all(ctx.m == 1 for ctx in contextRates):
        return optimizeGamma(contextRates)[1]
    return solveTopmAllocation(contextRates)


def _uniformShare(move):
    """E[1{c in S} / |S|] for every c, S containing each context independently with probability move[c]."""
    n = len(move)
    share = np.zeros(n)
    for c in range(n):
        counts = np.array([1.0])
        for other in range(n):
            if other != c:
                counts = np.append(counts * (1 - move[other]), 0.0) + np.append(0.0, counts * move[other])
        share[c] = move[c] * np.sum(counts / np.arange(1, len(counts) + 1))
    return share
