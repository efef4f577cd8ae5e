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

import time, unittest

import numpy as np

from cttts import Plugin
from cttts.constants import *
from cttts.instances import instanceFromDict, simulate
from cttts.objects import AllocationHistory, ConfigError, ProblemInstance, ResampleCapError, SolverError
from cttts.posteriors import NormalGammaPosteriors
from cttts.protocols import buildPolicy, PolicyState, selectFinal, tttscStep, gammaTune, analyticPolicyProb, \
  eaOrder, eaStep, boldmcStep, candidateTriple, aoamcStep, ProtTTTSC


class CategoricalPosteriors:
    '''Mean draws that are one-hot per context, the hot design drawn from pi[c]'''

    def __init__(self, instance, pi, means=None):
        self.instance, self.pi = instance, [np.asarray(p) for p in pi]
        self.means = np.concatenate(self.pi) if means is None else np.asarray(means)

    def sampleMu(self, rng):
        mu = np.zeros(self.instance.nDesigns)
        for c, p in enumerate(self.pi):
            mu[self.instance.offsets[c] + rng.choice(len(p), p=p)] = 1.0
        return mu

    def posteriorMeans(self):
        return self.means.copy()


class AlternatingPosteriors(CategoricalPosteriors):
    '''Deterministic draws cycling through a fixed list of mean vectors'''

    def __init__(self, instance, draws, means):
        super().__init__(instance, [], means)
        self.draws, self.calls = [np.asarray(d, dtype=float) for d in draws], 0

    def sampleMu(self, rng):
        self.calls += 1
        return self.draws[(self.calls - 1) % len(self.draws)].copy()


def newInstance(sizes, family=GAUSSIAN, m=None):
    designs = [['c{}_d{}'.format(c, j) for j in range(size)] for c, size in enumerate(sizes)]
    mu = np.concatenate([np.arange(size, 0, -1, dtype=float) for size in sizes])
    return ProblemInstance(family=family, contexts=['c{}'.format(c) for c in range(len(sizes))], designs=designs,
                           mu=mu, eta=np.ones(len(mu)), m=m or [1] * len(sizes), thetaBox=GAUSSIAN_THETA_BOX)


class TestPolicyProbabilities(unittest.TestCase):
    def testTwoDesigns(self):
        psi, alpha, beta = analyticPolicyProb([[0.6, 0.4]], 0.5)
        np.testing.assert_allclose(psi, [0.5, 0.5])
        psi, _, _ = analyticPolicyProb([[0.6, 0.4]], 0.7)
        np.testing.assert_allclose(psi, [0.54, 0.46])
        self.assertEqual(alpha.tolist(), [1.0])

    def testTwoDesignReduction(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            p, gamma = rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99)
            psi, _, _ = analyticPolicyProb([[p, 1 - p]], gamma)
            np.testing.assert_allclose(psi, [gamma * p + (1 - gamma) * (1 - p), gamma * (1 - p) + (1 - gamma) * p],
                                       atol=1e-12)

    def testDistribution(self):
        psi, alpha, beta = analyticPolicyProb([[0.5, 0.3, 0.2], [0.7, 0.3]], [0.6, 0.4])
        self.assertAlmostEqual(psi.sum(), 1.0, places=12)
        self.assertAlmostEqual(alpha.sum(), 1.0, places=12)
        for b in beta:
            self.assertAlmostEqual(b.sum(), 1.0, places=12)

    def testInvalidProbabilities(self):
        with self.assertRaises(ValueError):
            analyticPolicyProb([[1.0, 0.0]], 0.5)
        with self.assertRaises(ValueError):
            analyticPolicyProb([[0.7, 0.7]], 0.5)

    def testMonteCarloAgreement(self):
        pi, gamma = [[0.5, 0.3, 0.2], [0.7, 0.3]], np.array([0.6, 0.4])
        instance = newInstance([3, 2])
        posteriors = CategoricalPosteriors(instance, pi)
        state = PolicyState(kind=TTTSC_COIN, gamma=gamma)
        rng = np.random.default_rng(17)
        nSteps = 10 ** 6 if Plugin.runSlowTests() else 20000
        hits = np.zeros(instance.nDesigns)
        for _ in range(nSteps):
            hits[tttscStep(posteriors, state, instance, rng).design] += 1

        psi, _, _ = analyticPolicyProb(pi, gamma)
        se = np.sqrt(psi * (1 - psi) / nSteps)
        self.assertTrue(np.all(np.abs(hits / nSteps - psi) <= 4 * se), (hits / nSteps, psi))


class TestTTTSC(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.instance = instanceFromDict(Plugin.getTestDataset('threeByThree'))

    @classmethod
    def _runInitial(cls, perDesign=3, seed=0):
        posteriors, history = NormalGammaPosteriors(cls.instance), AllocationHistory(cls.instance)
        rng = np.random.default_rng(seed)
        for _ in range(perDesign):
            for design in eaOrder(cls.instance):
                obs = simulate(cls.instance, design, rng)
                history.add(obs.design, obs.value)
                posteriors.observe(obs.design, obs.value, history)
        return posteriors, history

    def testStateValidation(self):
        with self.assertRaises(ValueError):
            PolicyState(kind=TTTSC_COIN, gamma=[1.5])
        with self.assertRaises(ValueError):
            PolicyState(kind=TTTSC_TUNE, gamma=[0.5], tuneSchedule=(10, 10))
        with self.assertRaises(ValueError):
            PolicyState(kind=TTTSC_COIN, gamma=[0.5], resampleCap=0)

    def testBuildPolicy(self):
        policy = buildPolicy({'name': TTTSC_COIN, 'gamma': 0.3, 'label': 'coin'}, self.instance)
        self.assertIsInstance(policy, ProtTTTSC)
        self.assertEqual(policy.getLabel(), 'coin')
        self.assertEqual(policy.newState().gamma.tolist(), [0.3, 0.3, 0.3])
        self.assertEqual(policy._citations(), ['russo2020simple'])

    def testInvalidPolicies(self):
        with self.assertRaises(ConfigError) as cm:
            buildPolicy({'name': 'ttts'}, self.instance)
        for name in POLICY_NAMES:
            self.assertIn(name, str(cm.exception))
        with self.assertRaises(ConfigError):
            buildPolicy({'name': TTTSC_COIN, 'gamma': 1.0}, self.instance)
        with self.assertRaises(ConfigError):
            buildPolicy({'name': TTTSC_COIN, 'gama': 0.5}, self.instance)
        with self.assertRaises(ConfigError):
            buildPolicy({'name': TTTSC_TUNE, 'tune_schedule': [100, 10]}, self.instance)
        with self.assertRaises(ConfigError):
            buildPolicy({'name': AOAMC, 'posterior': POSTERIOR_GRID}, self.instance)

    def testStepSamplesDisagreeingContext(self):
        posteriors, history = self._runInitial()
        state = buildPolicy({'name': TTTSC_COIN}, self.instance).newState()
        rng = np.random.default_rng(3)
        for _ in range(50):
            decision = tttscStep(posteriors, state, self.instance, rng, history)
            self.assertEqual(self.instance.contextOf[decision.design], decision.context)
            self.assertGreaterEqual(decision.resamplesUsed, 1)
            self.assertFalse(decision.fallback)

    def testForcedBranches(self):
        instance = newInstance([2])
        draws = [[2.0, 1.0], [1.0, 2.0]]
        for gamma, expected in ((1.0, 0), (0.0, 1)):
            posteriors = AlternatingPosteriors(instance, draws, np.zeros(2))
            state = PolicyState(kind=TTTSC_COIN, gamma=[gamma])
            decision = tttscStep(posteriors, state, instance, np.random.default_rng(5))
            self.assertEqual((decision.context, decision.design), (0, expected))
            self.assertEqual(decision.resamplesUsed, 1)

    def testResampleCap(self):
        means = np.array([3.0, 1.0, 0.0, 0.5, 2.0, -1.0, -2.0, -0.5, 1.5])
        posteriors = AlternatingPosteriors(self.instance, [means], means)
        history = AllocationHistory(self.instance)
        history.add(0, 1.0)
        state = PolicyState(kind=TTTSC_COIN, gamma=np.full(3, 0.5), resampleCap=5, allowFallback=False)
        with self.assertRaises(ResampleCapError):
            tttscStep(posteriors, state, self.instance, np.random.default_rng(0), history)

        state.allowFallback = True
        decision = tttscStep(posteriors, state, self.instance, np.random.default_rng(0), history)
        self.assertTrue(decision.fallback)
        self.assertEqual(decision.resamplesUsed, 5)
        sl = self.instance.contextSlice(decision.context)
        self.assertEqual(decision.design, sl.start if decision.context else 1)

    def testTuneRunsOncePerCrossing(self):
        posteriors, history = self._runInitial()
        policy = buildPolicy({'name': TTTSC_TUNE, 'tune_schedule': [5, 20, 1000]}, self.instance)
        state = policy.newState()
        policy.tuneIfDue(state, posteriors, history)
        self.assertEqual(state.nextTune, 2)
        self.assertEqual(len(state.tuneLog), 1)
        self.assertEqual(state.tuneLog[0][0], 27)
        self.assertTrue(np.all((state.gamma > 0) & (state.gamma < 1)))
        policy.tuneIfDue(state, posteriors, history)
        self.assertEqual(len(state.tuneLog), 1)

    def testTuneFailureKeepsGamma(self):
        posteriors, history = self._runInitial()
        state = PolicyState(kind=TTTSC_TUNE, gamma=np.full(3, 0.5))

        def failing(contextRates):
            raise SolverError('no convergence')

        gamma = gammaTune(posteriors, state, self.instance, history, solver=failing)
        self.assertEqual(gamma.tolist(), [0.5, 0.5, 0.5])
        self.assertEqual(state.tuneLog, [(27, None)])

    def testTuneWithGridPosterior(self):
        instance = ProblemInstance(family=WEIBULL, contexts=['c0', 'c1'],
                                   designs=[['c0_d0', 'c0_d1', 'c0_d2'], ['c1_d0', 'c1_d1', 'c1_d2']],
                                   mu=np.array([106.0, 100.0, 94.0, 104.0, 97.0, 92.0]),
                                   eta=np.array([3.0, 2.5, 3.5, 2.2, 3.0, 3.8]), m=[1, 1],
                                   thetaBox=WEIBULL_THETA_BOX, tau=WEIBULL_TAU)
        policy = buildPolicy({'name': TTTSC_TUNE, 'posterior': POSTERIOR_GRID, 'tune_schedule': [12]}, instance)
        state, posteriors = policy.newState(), policy.newPosteriors()
        self.assertEqual(posteriors.kind, POSTERIOR_GRID)
        history, rng = AllocationHistory(instance), np.random.default_rng(8)
        for _ in range(2):
            for design in eaOrder(instance):
                obs = simulate(instance, design, rng)
                history.add(obs.design, obs.value)
                posteriors.observe(obs.design, obs.value, history)

        start = time.perf_counter()
        decision = policy.step(state, posteriors, history, rng)
        self.assertLess(time.perf_counter() - start, 120.0)
        self.assertEqual(len(state.tuneLog), 1)
        total, gamma = state.tuneLog[0]
        self.assertEqual(total, 12)
        self.assertIsNotNone(gamma)
        self.assertTrue(all(0 < g < 1 for g in gamma))
        self.assertEqual(instance.contextOf[decision.design], decision.context)


class TestBaselines(unittest.TestCase):
    def testEqualAllocationOrder(self):
        instance = newInstance([2, 3])
        self.assertEqual(eaOrder(instance), [0, 2, 1, 3, 4])
        state = PolicyState(kind=EA, gamma=[0.5, 0.5])
        designs = [eaStep(state, instance).design for _ in range(7)]
        self.assertEqual(designs, [0, 2, 1, 3, 4, 0, 2])

    def testBoldTriple(self):
        instance = newInstance([3])
        history = AllocationHistory(instance)
        history.counts[:] = [10, 2, 10]
        estimates = (np.array([3.0, 1.0, 0.0]), np.ones(3))
        c, d, dp, preferred, others = candidateTriple(estimates[0], estimates[1], history.counts.astype(float),
                                                      instance)
        self.assertEqual((c, d, dp), (0, 0, 1))
        self.assertEqual(others.tolist(), [1, 2])
        self.assertEqual(boldmcStep(history, instance, estimates).design, 0)

        history.counts[:] = [30, 3, 3]
        self.assertEqual(boldmcStep(history, instance, estimates).design, 1)

    def testBruteForceTriple(self):
        rng = np.random.default_rng(31)
        for _ in range(300):
            sizes = rng.integers(2, 7, size=rng.integers(1, 5)).tolist()
            m = [int(rng.integers(1, size)) for size in sizes]
            instance = newInstance(sizes, m=m)
            mu = rng.normal(size=instance.nDesigns)
            var = rng.uniform(0.1, 3.0, size=instance.nDesigns)
            counts = rng.integers(2, 60, size=instance.nDesigns).astype(float)

            brute = None
            for c in range(instance.nContexts):
                sl = instance.contextSlice(c)
                order = sorted(range(sl.start, sl.stop), key=lambda d: (-mu[d], d))
                top, rest = sorted(order[:m[c]]), sorted(order[m[c]:])
                for d in top:
                    for dp in rest:
                        value = (mu[d] - mu[dp]) ** 2 / (var[d] / counts[d] + var[dp] / counts[dp])
                        if brute is None or value < brute[0]:
                            brute = (value, c, d, dp)
            self.assertEqual(candidateTriple(mu, var, counts, instance)[:3], brute[1:])

    def testBoldZeroVarianceTie(self):
        instance = newInstance([2, 2])
        history = AllocationHistory(instance)
        history.counts[:] = [5, 5, 5, 5]
        estimates = (np.array([1.0, 0.0, 2.0, 2.0]), np.array([1.0, 1.0, 0.0, 0.0]))
        with np.errstate(invalid='raise'):
            c, d, dp, _, _ = candidateTriple(estimates[0], estimates[1], history.counts.astype(float), instance)
            decision = boldmcStep(history, instance, estimates)
        self.assertEqual((c, d, dp), (1, 2, 3))
        self.assertEqual(decision.context, 1)

    def testBoldNeedsTwoSamples(self):
        instance = newInstance([3])
        history = AllocationHistory(instance)
        history.counts[:] = [1, 5, 5]
        with self.assertRaises(ValueError):
            boldmcStep(history, instance)

    def testLookAhead(self):
        instance = newInstance([3])
        history = AllocationHistory(instance)
        history.counts[:] = [10, 2, 10]
        estimates = (np.array([3.0, 1.0, 0.0]), np.ones(3))
        self.assertEqual(aoamcStep(None, history, instance, estimates).design, 1)

        history.counts[:] = [2, 40, 40]
        self.assertEqual(aoamcStep(None, history, instance, estimates).design, 0)


class TestSelection(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.instance = newInstance([2, 3], m=[1, 2])

    def testPluginSelection(self):
        means = np.array([0.0, 1.0, 5.0, 4.0, 6.0])
        posteriors = AlternatingPosteriors(self.instance, [means], means)
        selected = selectFinal(posteriors, self.instance)
        self.assertEqual([s.tolist() for s in selected], [[1], [2, 4]])

    def testBayesTieRule(self):
        means = np.array([1.0, 0.0, 3.0, 2.0, 1.0])
        draws = [[0.0, 1.0, 1.0, 2.0, 3.0], [1.0, 0.0, 3.0, 2.0, 1.0]]
        posteriors = AlternatingPosteriors(self.instance, draws, means)
        selected = selectFinal(posteriors, self.instance, SELECT_BAYES, np.random.default_rng(0), draws=2)
        self.assertEqual([s.tolist() for s in selected], [[0], [2, 3]])

    def testBayesMajority(self):
        means = np.array([1.0, 0.0, 3.0, 2.0, 1.0])
        draws = [[0.0, 1.0, 1.0, 2.0, 3.0]] * 2 + [[1.0, 0.0, 3.0, 2.0, 1.0]]
        posteriors = AlternatingPosteriors(self.instance, draws, means)
        selected = selectFinal(posteriors, self.instance, SELECT_BAYES, np.random.default_rng(0), draws=3)
        self.assertEqual([s.tolist() for s in selected], [[1], [3, 4]])

    def testUnknownMode(self):
        posteriors = AlternatingPosteriors(self.instance, [np.zeros(5)], np.arange(5.0))
        with self.assertRaises(ValueError):
            selectFinal(posteriors, self.instance, 'mode')
        with self.assertRaises(ValueError):
            selectFinal(posteriors, self.instance, SELECT_BAYES)
