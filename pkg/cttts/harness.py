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
Macro-replication harness: runs seeded replications of (instance, policy, budget),
records per-context correctness at budget checkpoints and aggregates them into
PCS / PCSW / PCSE curves.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from typing import List, Optional

import numpy as np

from cttts import Plugin
from cttts.constants import *
from cttts.instances import buildInstance, simulate, trueTopMIndices
from cttts.objects import AllocationHistory, ConfigError, CtttsError, MetricsCurve, ReplicationError, \
  ReplicationRecord
from cttts.protocols import buildPolicy, eaOrder, selectFinal
from cttts.utils import logSpacedCheckpoints, replicationStreams

logger = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    instance: dict
    policies: List[dict]
    budget: int
    initPerDesign: int = DEFAULT_INIT_PER_DESIGN
    checkpoints: Optional[List[int]] = None
    macroReps: int = DEFAULT_REPS
    baseSeed: int = DEFAULT_SEED
    weights: Optional[List[float]] = None
    parallelism: int = DEFAULT_PARALLELISM
    selectionMode: str = SELECT_PLUGIN
    bayesDraws: int = DEFAULT_BAYES_DRAWS
    output: dict = field(default_factory=dict)

    _keyMap = {'instance': 'instance', 'policies': 'policies', 'budget': 'budget',
               'init_per_design': 'initPerDesign', 'checkpoints': 'checkpoints', 'macro_reps': 'macroReps',
               'base_seed': 'baseSeed', 'weights': 'weights', 'parallelism': 'parallelism',
               'selection_mode': 'selectionMode', 'bayes_draws': 'bayesDraws', 'output': 'output'}

    @classmethod
    def fromDict(cls, dic):
        """Config from its JSON form; unknown keys at any level raise ConfigError."""
        if not isinstance(dic, dict):
            raise ConfigError('the configuration must be a JSON object')
        _checkKeys(dic, CONFIG_KEYS, 'configuration')
        for key in ('instance', 'policies', 'budget'):
            if key not in dic:
                raise ConfigError('missing configuration key: {}'.format(key))
        _checkKeys(dic['instance'], INSTANCE_KEYS, 'instance')
        _checkKeys(dic.get('output', {}), OUTPUT_KEYS, 'output')
        if not isinstance(dic['policies'], list):
            raise ConfigError('policies must be a list')
        for policy in dic['policies']:
            _checkKeys(policy, POLICY_KEYS, 'policy')
        try:
            return cls(**{cls._keyMap[key]: value for key, value in dic.items()})
        except TypeError as e:
            raise ConfigError(str(e))

    def toDict(self):
        return {key: getattr(self, attr) for key, attr in self._keyMap.items()}

    def initialBudget(self, instance):
        return self.initPerDesign * instance.nDesigns

    def resolvedCheckpoints(self, instance):
        if self.checkpoints:
            return [int(t) for t in self.checkpoints]
        return logSpacedCheckpoints(self.initialBudget(instance), self.budget)

    def resolvedWeights(self, instance):
        if self.weights is None:
            return np.full(instance.nContexts, 1 / instance.nContexts)
        return np.asarray(self.weights, dtype=float)

    ########################### Validation functions #######################

    def validate(self, instance):
        errors = []
        if int(self.budget) < self.initialBudget(instance):
            errors.append('budget {} is below the initial allocation {} ({} per design)'.format(
                self.budget, self.initialBudget(instance), self.initPerDesign))
        if self.initPerDesign < 0:
            errors.append('init_per_design must be non negative')
        checkpoints = self.resolvedCheckpoints(instance)
        if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
            errors.append('checkpoints must be strictly increasing')
        if checkpoints and (checkpoints[0] < 1 or checkpoints[-1] > self.budget):
            errors.append('checkpoints must lie in [1, budget]')
        if self.macroReps < 1:
            errors.append('macro_reps must be at least 1')
        if self.parallelism < 1:
            errors.append('parallelism must be at least 1')
        if self.selectionMode not in SELECTION_MODES:
            errors.append('unknown selection_mode {}, valid ones: {}'.format(self.selectionMode,
                                                                            ', '.join(SELECTION_MODES)))
        if self.bayesDraws < 1:
            errors.append('bayes_draws must be at least 1')
        weights = self.resolvedWeights(instance)
        if len(weights) != instance.nContexts:
            errors.append('weights need one entry per context ({})'.format(instance.nContexts))
        elif np.any(weights < 0) or not np.isclose(weights.sum(), 1.0, atol=1e-9):
            errors.append('weights must be non negative and sum to 1')
        return errors


def runReplication(instance, policyConfig, config, rep):
    """One replication: n0 round-robin sweeps, then policy steps up to the budget.

    Returns a ReplicationRecord whose correctness matrix has one row per checkpoint and
    one column per context. Any failure is re-raised as ReplicationError carrying rep.
    """
    simRng, policyRng, selectRng = replicationStreams(config.baseSeed, rep)
    policy = buildPolicy(policyConfig, instance)
    state = policy.newState()
    posteriors = policy.newPosteriors()
    history = AllocationHistory(instance)

    checkpoints = config.resolvedCheckpoints(instance)
    truth = trueTopMIndices(instance)
    correct = np.zeros((len(checkpoints), instance.nContexts), dtype=bool)
    counts = np.zeros((len(checkpoints), instance.nDesigns), dtype=int)

    sweep = eaOrder(instance)
    nInit = config.initialBudget(instance)
    k = 0
    try:
        for t in range(int(config.budget)):
            if t < nInit:
                design = sweep[t % len(sweep)]
            else:
                design = policy.step(state, posteriors, history, policyRng).design
            obs = simulate(instance, design, simRng)
            history.add(obs.design, obs.value)
            posteriors.observe(obs.design, obs.value, history)

            while k < len(checkpoints) and history.total == checkpoints[k]:
                selected = selectFinal(posteriors, instance, config.selectionMode, selectRng, config.bayesDraws)
                correct[k] = [np.array_equal(s, truth[c]) for c, s in enumerate(selected)]
                counts[k] = history.counts
                k += 1
    except ReplicationError:
        raise
    except (CtttsError, ValueError, ArithmeticError) as e:
        raise ReplicationError(rep, '{} at budget {}: {}'.format(policy.getLabel(), history.total, e)) from e

    return ReplicationRecord(rep=rep, checkpoints=np.asarray(checkpoints), correct=correct, counts=counts,
                             history=history)


def runExperiment(config, instance=None, keepRecords=False):
    """All policies times all replications, aggregated into a MetricsCurve.

    Replications run in a process pool when the resolved parallelism exceeds 1 and are
    joined in rep order, so the curve does not depend on the pool size. With keepRecords
    the per-policy replication records are returned alongside the curve.
    """
    instance = instance if instance is not None else buildInstance(config.instance)
    errors = config.validate(instance)
    for policyConfig in config.policies:
        try:
            buildPolicy(policyConfig, instance)
        except ConfigError as e:
            errors.append(str(e))
    if errors:
        raise ConfigError('; '.join(errors))

    parallelism = Plugin.getThreads(config.parallelism)
    checkpoints = config.resolvedCheckpoints(instance)
    weights = config.resolvedWeights(instance)
    logger.info('Running %d policies x %d replications, budget %d, parallelism %d',
                len(config.policies), config.macroReps, config.budget, parallelism)

    labels, perPolicy, perPolicyCounts, allRecords = [], [], [], {}
    for policyConfig in config.policies:
        label = policyConfig.get('label') or policyConfig['name']
        records = _runReplications(instance, policyConfig, config, parallelism)
        labels.append(label)
        perPolicy.append(np.stack([r.correct for r in records]))
        perPolicyCounts.append(np.stack([r.counts for r in records]))
        if keepRecords:
            allRecords[label] = records
        logger.info('%s done', label)

    curve = aggregateCorrectness(labels, checkpoints, perPolicy, weights)
    curve.contextRatios, curve.designRatios = aggregateRatios(instance, perPolicyCounts)
    if keepRecords:
        return curve, allRecords
    return curve


def aggregateCorrectness(labels, checkpoints, correctness, weights):
    """MetricsCurve from per-policy correctness tensors of shape (reps, checkpoints, contexts)."""
    nPolicies, nCheckpoints = len(labels), len(checkpoints)
    shape = (nPolicies, nCheckpoints)
    pcs, pcsw, pcse = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    pcsSe, pcswSe, pcseSe = np.full(shape, np.nan), np.full(shape, np.nan), np.full(shape, np.nan)
    weights = np.asarray(weights, dtype=float)
    reps = correctness[0].shape[0] if correctness else 0

    for p, correct in enumerate(correctness):
        correct = np.asarray(correct, dtype=bool)
        nReps = correct.shape[0]
        joint = correct.all(axis=2).sum(axis=0) / nReps
        perContext = correct.sum(axis=0) / nReps
        worst = np.argmin(perContext, axis=1)
        score = correct @ weights

        pcs[p] = joint
        pcsw[p] = perContext[np.arange(nCheckpoints), worst]
        # joint <= every per-context fraction; keep that exact under rounding of the weighted sum
        pcse[p] = np.clip(np.maximum(score.mean(axis=0), joint), 0.0, 1.0)
        if nReps > 1:
            pcsSe[p] = _binomialSe(pcs[p], nReps)
            pcswSe[p] = _binomialSe(pcsw[p], nReps)
            pcseSe[p] = score.std(axis=0, ddof=1) / np.sqrt(nReps)

    flags = []
    if reps == 1:
        flags.append('single replication: standard errors undefined')
        logger.warning('Only one replication per policy, standard errors are reported as NaN')
    return MetricsCurve(policies=list(labels), checkpoints=np.asarray(checkpoints, dtype=int), pcs=pcs,
                        pcsSe=pcsSe, pcsw=pcsw, pcswSe=pcswSe, pcse=pcse, pcseSe=pcseSe, reps=reps, flags=flags)


def aggregateRatios(instance, counts):
    """Replication means of the sampling ratios from per-policy count tensors (reps, checkpoints, designs).

    Returns (alpha, beta): alpha[p, k, c] is the mean share of context c in the budget, beta[p, k, d]
    the mean share of design d inside its context. A context that some replication never sampled
    gives NaN.
    """
    alphas, betas = [], []
    for tensor in counts:
        tensor = np.asarray(tensor, dtype=float)
        perContext = np.add.reduceat(tensor, instance.offsets[:-1], axis=2)
        with np.errstate(divide='ignore', invalid='ignore'):
            alpha = perContext / tensor.sum(axis=2, keepdims=True)
            beta = tensor / perContext[:, :, instance.contextOf]
        alphas.append(alpha.mean(axis=0))
        betas.append(beta.mean(axis=0))
    return np.array(alphas), np.array(betas)



# ---------------------------------- Utils functions  -----------------------
def _runReplications(instance, policyConfig, config, parallelism):
    reps = range(int(config.macroReps))
    if parallelism <= 1 or len(reps) <= 1:
        return [runReplication(instance, policyConfig, config, rep) for rep in reps]
    with ProcessPoolExecutor(max_workers=min(parallelism, len(reps))) as executor:
        return list(executor.map(runReplication, repeat(instance), repeat(policyConfig), repeat(config), reps))


def _binomialSe(p, n):
    return np.sqrt(np.clip(p * (1 - p), 0, None) / n)


def _checkKeys(dic, valid, where):
    if not isinstance(dic, dict):
        raise ConfigError('{} must be a JSON object'.format(where))
    unknown = sorted(set(dic) - set(valid))
    if unknown:
        raise ConfigError('unknown {} keys: {}, valid ones: {}'.format(where, ', '.join(unknown), ', '.join(valid)))
