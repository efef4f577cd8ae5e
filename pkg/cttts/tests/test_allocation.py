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
from cttts.allocation import solveBalanceBest, alphaStar, optimizeGamma, fixedGammaAllocation, \
  solveTopmAllocation, kktResidualBest, balanceResidualTopm, classConditionCheck, activePattern, empiricalRateTrajectory
from cttts.instances import instanceFromDict, generateGaussianInstance
from cttts.objects import AllocationVector
from cttts.rates import rateSpec, rateGaussianKnownVar, ContextRates, contextRatesFromDict, \
  contextRatesFromInstance, contextRatesFromEstimates


class TestBalanceBest(unittest.TestCase):
    def testCounterexample(self):
        specs = contextRatesFromDict(Plugin.getTestDataset('counterexample'))[0].bestSpecs()
        betas, z = solveBalanceBest(0.1, specs)
        self.assertAlmostEqual(z, 0.1, delta=1e-6)
        self.assertGreaterEqual(betas.min(), 0.1 - 1e-9)
        self.assertAlmostEqual(betas.sum(), 0.9, places=12)
        self.assertGreaterEqual(min(spec.value(0.1, b) for spec, b in zip(specs, betas)), 0.1 - 1e-6)

    def testSymmetricCompetitors(self):
        specs = [rateSpec(RATE_KNOWN_VAR, (1.0, 1.0), (0.0, 1.0)) for _ in range(2)]
        betas, z = solveBalanceBest(0.3, specs)
        self.assertAlmostEqual(betas[0], betas[1], places=8)
        self.assertAlmostEqual(betas.sum(), 0.7, places=12)
        self.assertAlmostEqual(z, specs[0].value(0.3, 0.35), places=8)

    def testSingleCompetitor(self):
        betas, z = solveBalanceBest(0.4, [rateSpec(RATE_KNOWN_VAR, (1.0, 1.0), (0.0, 1.0))])
        self.assertEqual(betas.tolist(), [0.6])
        self.assertAlmostEqual(z, rateGaussianKnownVar(0.4, 0.6, 1.0, 0.0, 1.0, 1.0))

    def testGammaOutOfRange(self):
        with self.assertRaises(ValueError):
            solveBalanceBest(1.0, [rateSpec(RATE_MIN)])


class TestContextAllocation(unittest.TestCase):
    def testAlphaStar(self):
        alpha, value = alphaStar([0.1, 0.3])
        np.testing.assert_allclose(alpha, [0.75, 0.25])
        self.assertAlmostEqual(value, 0.075)
        np.testing.assert_allclose(alphaStar([0.2, 0.2, 0.2])[0], np.full(3, 1 / 3))
        self.assertEqual(alphaStar([0.5])[0].tolist(), [1.0])
        with self.assertRaises(ValueError):
            alphaStar([0.1, 0.0])

    def testSymmetricPair(self):
        contexts = contextRatesFromInstance(instanceFromDict(Plugin.getTestDataset('symmetricPair')))
        gamma, allocation = optimizeGamma(contexts)
        self.assertAlmostEqual(gamma[0], 0.5, delta=1e-3)
        self.assertEqual(kktResidualBest(allocation, contexts).balanceSpread, 0.0)

    def testPermutationInvariance(self):
        mu, var = np.array([2.0, 0.5, 1.2, -0.4]), np.array([1.0, 2.0, 0.5, 1.5])
        order = [2, 0, 3, 1]
        ids = ['a', 'b', 'c', 'd']
        ctx = contextRatesFromEstimates(ids, mu, var, 1, RATE_KNOWN_VAR)
        permuted = contextRatesFromEstimates([ids[i] for i in order], mu[order], var[order], 1, RATE_KNOWN_VAR)
        gamma, _ = optimizeGamma([ctx])
        gammaPermuted, _ = optimizeGamma([permuted])
        self.assertAlmostEqual(gamma[0], gammaPermuted[0], delta=1e-9)
        self.assertTrue(0 < gamma[0] < 1)

    def testKktSelfConsistency(self):
        for seed in range(3):
            contexts = contextRatesFromInstance(generateGaussianInstance(seed, 3, 5))
            _, allocation = optimizeGamma(contexts)
            kkt = kktResidualBest(allocation, contexts)
            self.assertTrue(np.all(kkt.firstOrder <= 1e-4), kkt.firstOrder)
            self.assertLessEqual(kkt.balanceSpread, 1e-4)
            self.assertAlmostEqual(allocation.alpha.sum(), 1.0, places=12)
            for beta in allocation.beta:
                self.assertAlmostEqual(beta.sum(), 1.0, places=12)

    def testWeibullContextFinishes(self):
        ctx = contextRatesFromEstimates(['a', 'b', 'c'], np.array([105.0, 100.0, 97.0]), np.array([3.0, 2.5, 3.5]),
                                        1, RATE_WEIBULL, tau=WEIBULL_TAU, thetaBox=WEIBULL_THETA_BOX)
        start = time.perf_counter()
        gamma, allocation = optimizeGamma([ctx])
        self.assertLess(time.perf_counter() - start, 60.0)
        self.assertTrue(0 < gamma[0] < 1)
        self.assertAlmostEqual(allocation.beta[0].sum(), 1.0, places=12)
        self.assertLessEqual(kktResidualBest(allocation, [ctx]).balanceSpread, 1e-4)

    def testUniformAllocationIsUnbalanced(self):
        instance = instanceFromDict(Plugin.getTestDataset('threeByThree'))
        contexts = contextRatesFromInstance(instance)
        uniform = AllocationVector(alpha=np.full(3, 1 / 3), beta=[np.full(3, 1 / 3)] * 3, gamma=np.full(3, 1 / 3),
                                   value=np.nan, contextValues=np.full(3, np.nan), preferred=[[0], [1], [2]])
        self.assertGreater(kktResidualBest(uniform, contexts).balanceSpread, 1e-2)

    def testFixedGamma(self):
        contexts = contextRatesFromDict(Plugin.getTestDataset('counterexample'))
        allocation = fixedGammaAllocation(contexts, 0.1)
        self.assertAlmostEqual(allocation.contextValues[0], 0.1, delta=1e-6)
        self.assertAlmostEqual(allocation.beta[0][0], 0.1)
        self.assertEqual(allocation.alpha.tolist(), [1.0])


class TestTopmAllocation(unittest.TestCase):
    @classmethod
    def _symmetricContext(cls, n=4, m=2):
        ids = ['d{}'.format(i) for i in range(n)]
        rates = {(i, j): rateSpec(RATE_KNOWN_VAR, (1.0, 1.0), (0.0, 1.0)) for i in range(m) for j in range(m, n)}
        return ContextRates(ids, list(range(m)), rates)

    def testMatchesBestSolver(self):
        contexts = contextRatesFromInstance(instanceFromDict(Plugin.getTestDataset('threeByThree')))
        _, best = optimizeGamma(contexts)
        topm = solveTopmAllocation(contexts)
        self.assertAlmostEqual(topm.value, best.value, delta=1e-4)
        np.testing.assert_allclose(topm.contextValues, best.contextValues, atol=1e-4)

    def testSymmetricContext(self):
        allocation = solveTopmAllocation([self._symmetricContext()])
        np.testing.assert_allclose(allocation.beta[0], np.full(4, 0.25), atol=1e-4)
        self.assertFalse(allocation.degraded)

    def testSinglePairGridOracle(self):
        ctx = contextRatesFromEstimates(['a', 'b'], np.array([1.0, 0.0]), np.array([1.0, 3.0]), 1, RATE_KNOWN_VAR)
        allocation = solveTopmAllocation([ctx])
        x = np.linspace(1e-6, 1 - 1e-6, 10 ** 6)
        brute = np.max(rateGaussianKnownVar(x, 1 - x, 1.0, 0.0, 1.0, 3.0))
        self.assertAlmostEqual(allocation.contextValues[0], brute, delta=1e-4)

    def testAveragedIterateTrajectory(self):
        ctx = contextRatesFromEstimates(['a', 'b'], np.array([1.0, 0.0]), np.array([1.0, 4.0]), 1, RATE_KNOWN_VAR)
        trajectory = np.array(solveTopmAllocation([ctx]).trajectory[0])
        self.assertEqual(len(trajectory), EG_ITERATIONS // EG_RECORD_EVERY)
        self.assertTrue(np.all(np.diff(trajectory) >= -1e-15), trajectory)
        self.assertAlmostEqual(trajectory[-1], 1 / 9, delta=1e-3)

    def testBalanceResidual(self):
        instance = generateGaussianInstance(4, 2, 5, m=2)
        contexts = contextRatesFromInstance(instance)
        allocation = solveTopmAllocation(contexts)
        residual = balanceResidualTopm(allocation, contexts)
        self.assertLessEqual(residual, 1e-3)

        beta = allocation.beta[0].copy()
        beta[0] *= 1.1
        allocation.beta[0] = beta / beta.sum()
        self.assertGreater(balanceResidualTopm(allocation, contexts), residual)

    def testResidualOfSinglePairs(self):
        contexts = [contextRatesFromEstimates(['a', 'b'], np.array([1.0, 0.0]), np.ones(2), 1, RATE_KNOWN_VAR),
                    contextRatesFromEstimates(['c', 'd'], np.array([2.0, 0.0]), np.ones(2), 1, RATE_KNOWN_VAR)]
        uniform = AllocationVector(alpha=np.full(2, 0.5), beta=[np.full(2, 0.5)] * 2, gamma=np.full(2, 0.5),
                                   value=np.nan, contextValues=np.full(2, np.nan), preferred=[[0], [0]])
        self.assertAlmostEqual(balanceResidualTopm(uniform, contexts), kktResidualBest(uniform, contexts).balanceSpread)
        self.assertGreater(balanceResidualTopm(uniform, contexts), 0.0)

    def testMismatchedM(self):
        with self.assertRaises(ValueError):
            solveTopmAllocation([self._symmetricContext()], m=1)


class TestClassConditions(unittest.TestCase):
    def testSinglePair(self):
        ctx = contextRatesFromEstimates(['a', 'b'], np.array([1.0, 0.0]), np.array([1.0, 4.0]), 1, RATE_KNOWN_VAR)
        allocation = solveTopmAllocation([ctx])
        np.testing.assert_allclose(allocation.beta[0], [1 / 3, 2 / 3], atol=1e-5)
        self.assertTrue(classConditionCheck(allocation, [ctx], tol=1e-4).passed)

        allocation.beta[0] = np.array([0.5, 0.5])
        self.assertFalse(classConditionCheck(allocation, [ctx], tol=1e-4).passed)

    def testSymmetricClasses(self):
        ctx = TestTopmAllocation._symmetricContext()
        allocation = solveTopmAllocation([ctx])
        pattern = activePattern(allocation.beta[0], ctx, tol=1e-4)
        self.assertEqual(pattern.tolist(), [[1, 1], [1, 1]])
        report = classConditionCheck(allocation, [ctx], vartheta=[pattern], tol=1e-4)
        self.assertTrue(report.passed)
        self.assertEqual(len(report.classes), 1)

    def testInconsistentPattern(self):
        ctx = TestTopmAllocation._symmetricContext()
        allocation = solveTopmAllocation([ctx])
        with self.assertRaises(ValueError):
            classConditionCheck(allocation, [ctx], vartheta=[np.array([[1, 0], [1, 0]])])

    def testNeedsKnownVariance(self):
        contexts = contextRatesFromDict(Plugin.getTestDataset('counterexample'))
        allocation = fixedGammaAllocation(contexts, 0.1)
        with self.assertRaises(ValueError):
            classConditionCheck(allocation, contexts)


class TestRateTrajectory(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.instance = instanceFromDict(Plugin.getTestDataset('threeByThree'))

    def testUnvisitedContext(self):
        counts = [[2, 1, 1, 1, 1, 1, 0, 0, 0], [3, 3, 3, 3, 3, 3, 3, 3, 3]]
        rows = empiricalRateTrajectory(counts, [7, 27], self.instance, 0.5)
        self.assertEqual(len(rows), 6)
        undefined = [row for row in rows if not row.defined]
        self.assertEqual([(row.checkpoint, row.context) for row in undefined], [(7, 2)])
        self.assertTrue(np.all(np.isnan(undefined[0].values)))
        self.assertTrue(all(row.spread >= 0 for row in rows if row.defined))

    def testGammaBounds(self):
        with self.assertRaises(ValueError):
            empiricalRateTrajectory([[1] * 9], [9], self.instance, 1.0)
