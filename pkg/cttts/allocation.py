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
Static allocation problems. For contexts with a single best design the
problem separates into a common-value balance inside each context
(solveBalanceBest), a one-dimensional search over gamma (optimizeGamma) and
the inverse-rate weighting of contexts (alphaStar). Top-m contexts are
solved as a max-min over the simplex (solveTopmAllocation). The residual
functions check the first-order and balance conditions of a given allocation.
"""
import math, logging
from dataclasses import dataclass, field
from typing import List, NamedTuple

import numpy as np
from scipy import optimize

from .constants import *
from .objects import AllocationVector, SolverError
from .rates import GaussianKnownVarRate, contextRatesFromInstance
from .utils import gridMaximize

logger = logging.getLogger(__name__)


def solveBalanceBest(gammaC, specs):
    """Common value z and competitor ratios for one context at a fixed gamma.

    specs are the rates G_{d*,d'} for the competitors d' in id order. For each z
    the smallest beta(d') with G_{d'}(gamma, beta) >= z is found; z is the Brent root of
    the budget those betas use against 1 - gamma, and the leftover goes to the last competitor.
    """
    if not 0 < gammaC < 1:
        raise ValueError('gamma must lie in (0, 1), got {}'.format(gammaC))
    if not specs:
        raise ValueError('a context needs at least one competitor design')
    budget = 1.0 - gammaC
    if len(specs) == 1:
        return np.array([budget]), float(specs[0].value(gammaC, budget))

    zMax = min(float(spec.value(gammaC, budget)) for spec in specs)
    if not zMax > 0:
        raise SolverError('rates vanish at gamma={}, no common value to balance'.format(gammaC))

    def needed(z):
        return [spec.inverse(gammaC, z, budget) for spec in specs]

    def total(betas):
        return math.fsum(betas) if all(np.isfinite(betas)) else np.inf

    betas = needed(zMax)
    if total(betas) <= budget:
        z = zMax
    else:
        z = optimize.brentq(lambda v: total(needed(v)) - budget, 0.0, zMax, xtol=BRENT_XTOL * zMax)
        betas = needed(z)
        if not total(betas) <= budget + BALANCE_TOL:
            raise SolverError('balance root at z={} does not fit the budget'.format(z))

    betas = np.array(betas, dtype=float)
    betas[-1] += budget - math.fsum(betas)
    return betas, float(z)


def alphaStar(gammaStar):
    """Context ratios proportional to 1/Gamma*_c and the overall rate 1/sum(1/Gamma*_c)."""
    rates = np.asarray(gammaStar, dtype=float)
    if np.any(rates <= 0):
        raise ValueError('every context needs a positive optimal rate')
    inverse = 1.0 / rates
    norm = math.fsum(inverse)
    return inverse / norm, 1.0 / norm


def optimizeGamma(contextRates):
    """Optimal gamma per context (grid then bounded Brent) and the assembled allocation."""
    if any(ctx.m != 1 for ctx in contextRates):
        raise ValueError('optimizeGamma handles single-best contexts only, use solveTopmAllocation')

    gammas, values, betas = [], [], []
    for ctx in contextRates:
        specs = ctx.bestSpecs()
        gamma, _ = gridMaximize(lambda g: solveBalanceBest(g, specs)[1], *GAMMA_BOUNDS, nGrid=GAMMA_GRID,
                                xtol=1e-10)
        gamma = _refineGamma(gamma, specs)
        betaU, z = solveBalanceBest(gamma, specs)
        gammas.append(gamma)
        values.append(z)
        betas.append(_contextBeta(ctx, gamma, betaU))

    alpha, value = alphaStar(values)
    allocation = AllocationVector(alpha=alpha, beta=betas, gamma=np.array(gammas), value=value,
                                  contextValues=np.array(values), preferred=[list(c.preferred) for c in contextRates])
    allocation.residual = kktResidualBest(allocation, contextRates).balanceSpread
    return np.array(gammas), allocation


def fixedGammaAllocation(contextRates, gamma):
    '''Allocation of single-best contexts with gamma held fixed'''
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (len(contextRates),))
    values, betas = [], []
    for ctx, g in zip(contextRates, gamma):
        if ctx.m != 1:
            raise ValueError('a fixed gamma allocation needs single-best contexts')
        betaU, z = solveBalanceBest(float(g), ctx.bestSpecs())
        values.append(z)
        betas.append(_contextBeta(ctx, g, betaU))
    alpha, value = alphaStar(values)
    return AllocationVector(alpha=alpha, beta=betas, gamma=np.array(gamma), value=value,
                            contextValues=np.array(values), preferred=[list(c.preferred) for c in contextRates])


def solveTopmAllocation(contextRates, m=None):
    """Max-min allocation of top-m contexts.

    Each context runs exponentiated-gradient ascent on min over pairs of G from the
    uniform point (step 0.5/sqrt(t), averaged iterates), then the averaged iterate seeds
    an SLSQP solve of the epigraph problem; the better point is kept.
    """
    if m is not None:
        ms = np.broadcast_to(np.asarray(m), (len(contextRates),))
        for ctx, mc in zip(contextRates, ms):
            if ctx.m != int(mc) or not 1 <= mc <= len(ctx.designIds):
                raise ValueError('context top-m size {} does not match m={}'.format(ctx.m, mc))

    betas, values, trajectories = [], [], []
    for ctx in contextRates:
        table = _PairTable(ctx)
        beta, trajectory = _exponentiatedGradient(table)
        beta = _polish(table, beta)
        betas.append(beta)
        values.append(table.objective(beta))
        trajectories.append(trajectory)

    alpha, value = alphaStar(values)
    gamma = np.array([b[ctx.preferred].sum() for b, ctx in zip(betas, contextRates)])
    allocation = AllocationVector(alpha=alpha, beta=betas, gamma=gamma, value=value, contextValues=np.array(values),
                                  preferred=[list(c.preferred) for c in contextRates], trajectory=trajectories)
    allocation.residual = balanceResidualTopm(allocation, contextRates)
    if allocation.residual > TOPM_RESIDUAL_TOL:
        allocation.degraded = True
        allocation.warnings.append('balance residual {:.3g} above {:g}'.format(allocation.residual,
                                                                               TOPM_RESIDUAL_TOL))
        logger.warning('Top-m allocation degraded, balance residual %.3g', allocation.residual)
    return allocation


class KktResidual(NamedTuple):
    firstOrder: np.ndarray
    balanceSpread: float
    kinks: list


def kktResidualBest(allocation, contextRates):
    """Per-context |sum over competitors of dG/dx / dG/dy - 1| and the spread of alpha * G.

    Entries at kinks of G are reported in `kinks` and left out of firstOrder.
    """
    firstOrder, scaled, kinks = [], [], []
    for c, ctx in enumerate(contextRates):
        beta = allocation.beta[c]
        best = ctx.preferred[0]
        x = beta[best]
        if x <= 0 or np.any(beta[ctx.undesired] <= 0):
            raise ValueError('the allocation must be strictly positive')
        ratios = []
        for j, spec in zip(ctx.undesired, ctx.bestSpecs()):
            scaled.append(allocation.alpha[c] * spec.value(x, beta[j]))
            if spec.isKink(x, beta[j]):
                kinks.append((c, ctx.designIds[j]))
                continue
            dx, dy = spec.partials(x, beta[j])
            ratios.append(dx / dy)
        firstOrder.append(abs(math.fsum(ratios) - 1.0) if ratios else np.nan)
    return KktResidual(np.array(firstOrder), _spread(scaled), kinks)


def balanceResidualTopm(allocation, contextRates, m=None):
    """Relative spread of both alpha-scaled minima of the top-m balance condition over all pairs."""
    values = []
    for c, ctx in enumerate(contextRates):
        beta, a = allocation.beta[c], allocation.alpha[c]
        if np.any(beta <= 0):
            raise ValueError('the allocation must be strictly positive')
        grid = _pairMatrix(ctx, beta)
        for p in range(len(ctx.preferred)):
            for u in range(len(ctx.undesired)):
                values.append(a * grid[:, u].min())
                values.append(a * grid[p, :].min())
    return _spread(values)


@dataclass
class ClassConditionReport:
    passed: bool
    classes: List[tuple] = field(default_factory=list)
    classBalance: List[tuple] = field(default_factory=list)
    pairChecks: List[tuple] = field(default_factory=list)


def activePattern(beta, ctx, tol=CLASS_TOL):
    '''Binary |P| x |U| pattern of the pairs whose rate attains the context minimum'''
    grid = _pairMatrix(ctx, beta)
    return (grid <= grid.min() * (1.0 + tol)).astype(int)


def classConditionCheck(allocation, contextRates, m=None, vartheta=None, tol=CLASS_TOL):
    """Equivalence-class conditions of a known-variance top-m allocation (checker only).

    vartheta holds, per context, a binary |P| x |U| matrix marking the binding pairs;
    pairs linked through binding pairs form a class, and each class must balance
    sum over its preferred designs of (beta/sigma)^2 against its other designs.
    """
    report = ClassConditionReport(passed=True)
    for c, ctx in enumerate(contextRates):
        if not all(isinstance(spec, GaussianKnownVarRate) for spec in ctx.rates.values()):
            raise ValueError('the class conditions apply to known-variance Gaussian rates only')
        beta = allocation.beta[c]
        pattern = activePattern(beta, ctx, tol) if vartheta is None else np.asarray(vartheta[c], dtype=int)
        P, U = ctx.preferred, ctx.undesired
        if pattern.shape != (len(P), len(U)) or np.any(pattern.sum(axis=1) == 0) or \
                np.any(pattern.sum(axis=0) == 0):
            raise ValueError('vartheta inconsistent with claimed minima in context {}'.format(c))

        sigma = np.empty(len(ctx.designIds))
        for (i, j), spec in ctx.rates.items():
            sigma[i], sigma[j] = np.sqrt(spec.thetaD[1]), np.sqrt(spec.thetaDp[1])

        for members in _linkedClasses(pattern):
            pSide = [P[p] for p in members[0]]
            uSide = [U[u] for u in members[1]]
            lhs = math.fsum((beta[i] / sigma[i]) ** 2 for i in pSide)
            rhs = math.fsum((beta[j] / sigma[j]) ** 2 for j in uSide)
            ok = abs(lhs - rhs) <= tol * max(lhs, rhs)
            report.classes.append((c, [ctx.designIds[i] for i in pSide], [ctx.designIds[j] for j in uSide]))
            report.classBalance.append((c, lhs, rhs, ok))
            report.passed &= ok

        grid = _pairMatrix(ctx, beta)
        z = grid.min()
        for p in range(len(P)):
            for u in range(len(U)):
                binding = abs(grid[p, u] - z) <= tol * z
                ok = binding if pattern[p, u] else not binding
                report.pairChecks.append((c, ctx.designIds[P[p]], ctx.designIds[U[u]], grid[p, u], ok))
                report.passed &= ok
    report.passed = bool(report.passed)
    return report


@dataclass
class TrajectoryRow:
    checkpoint: int
    context: int
    values: np.ndarray
    spread: float
    defined: bool


def empiricalRateTrajectory(countsTrajectory, checkpoints, instance, gamma, rateFamily=None, contextRates=None):
    """alpha_T(c) * G_d(gamma(c), beta_T(c, d)) per checkpoint and context under the true parameters;
    top-m contexts report the balance minima instead. Unvisited contexts are flagged undefined."""
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (instance.nContexts,))
    if np.any(gamma <= 0) or np.any(gamma >= 1):
        raise ValueError('gamma must lie strictly inside (0, 1)')
    contextRates = contextRates or contextRatesFromInstance(instance, rateFamily)

    rows = []
    for checkpoint, counts in zip(checkpoints, countsTrajectory):
        counts = np.asarray(counts, dtype=float)
        total = counts.sum()
        for c, ctx in enumerate(contextRates):
            sl = instance.contextSlice(c)
            ctxCount = counts[sl].sum()
            if ctxCount == 0:
                rows.append(TrajectoryRow(int(checkpoint), c, np.full(len(ctx.undesired), np.nan), np.nan, False))
                continue
            alphaBar, betaBar = ctxCount / total, counts[sl] / ctxCount
            if ctx.m == 1:
                values = np.array([alphaBar * spec.value(gamma[c], betaBar[j])
                                   for j, spec in zip(ctx.undesired, ctx.bestSpecs())])
            else:
                grid = _pairMatrix(ctx, betaBar)
                values = np.concatenate([alphaBar * grid.min(axis=0), alphaBar * grid.min(axis=1)])
            rows.append(TrajectoryRow(int(checkpoint), c, values, _spread(values), True))
    return rows


# ---------------------------------- Utils functions  -----------------------
def _firstOrderGap(gammaC, specs):
    '''Sum over competitors of dG/dx / dG/dy minus one at the balanced betas; None at a kink'''
    betaU, _ = solveBalanceBest(gammaC, specs)
    ratios = []
    for spec, y in zip(specs, betaU):
        if y <= 0 or spec.isKink(gammaC, y):
            return None
        dx, dy = spec.partials(gammaC, y)
        ratios.append(dx / dy)
    return math.fsum(ratios) - 1.0


def _refineGamma(gamma, specs, width=0.02):
    """Root of the first-order condition near the line-search optimum, kept only if it does not
    lower the balanced value."""
    lo, hi = max(gamma - width, GAMMA_BOUNDS[0]), min(gamma + width, GAMMA_BOUNDS[1])
    try:
        gapLo, gapHi = _firstOrderGap(lo, specs), _firstOrderGap(hi, specs)
        if gapLo is None or gapHi is None or gapLo * gapHi > 0:
            return gamma
        root = optimize.brentq(lambda g: _firstOrderGap(g, specs) or 0.0, lo, hi, xtol=1e-14)
    except (SolverError, ValueError) as e:
        logger.debug('Gamma refinement skipped: %s', e)
        return gamma
    before, after = solveBalanceBest(gamma, specs)[1], solveBalanceBest(root, specs)[1]
    return root if after >= before - 1e-9 * abs(before) else gamma


def _contextBeta(ctx, gamma, betaU):
    beta = np.zeros(len(ctx.designIds))
    beta[ctx.preferred[0]] = gamma
    beta[ctx.undesired] = betaU
    return beta


def _spread(values):
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return np.nan
    mean = values.mean()
    if mean == 0:
        return 0.0 if values.max() == values.min() else np.inf
    return float((values.max() - values.min()) / mean)


def _pairMatrix(ctx, beta):
    grid = np.empty((len(ctx.preferred), len(ctx.undesired)))
    for p, i in enumerate(ctx.preferred):
        for u, j in enumerate(ctx.undesired):
            grid[p, u] = ctx.rates[(i, j)].value(beta[i], beta[j])
    return grid


def _linkedClasses(pattern):
    '''Connected components of the bipartite graph of binding pairs, as (P rows, U columns)'''
    nP, nU = pattern.shape
    parent = list(range(nP + nU))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for p in range(nP):
        for u in range(nU):
            if pattern[p, u]:
                parent[find(p)] = find(nP + u)

    groups = {}
    for node in range(nP + nU):
        groups.setdefault(find(node), []).append(node)
    return [([n for n in nodes if n < nP], [n - nP for n in nodes if n >= nP])
            for _, nodes in sorted(groups.items(), key=lambda item: min(item[1]))]


class _PairTable:
    """Pair rates of one context, vectorised when every pair has a known-variance closed form."""

    def __init__(self, ctx):
        self.ctx = ctx
        self.n = len(ctx.designIds)
        self.pairs = ctx.pairs()
        self.left = np.array([i for i, _ in self.pairs])
        self.right = np.array([j for _, j in self.pairs])
        self.specs = [ctx.rates[pair] for pair in self.pairs]
        self.closedForm = all(isinstance(s, GaussianKnownVarRate) for s in self.specs)
        if self.closedForm:
            self.gap2 = np.array([s.gap2 for s in self.specs])
            self.v1 = np.array([s.thetaD[1] for s in self.specs])
            self.v2 = np.array([s.thetaDp[1] for s in self.specs])

    def values(self, beta):
        x, y = beta[self.left], beta[self.right]
        if self.closedForm:
            with np.errstate(divide='ignore', invalid='ignore'):
                out = self.gap2 / (self.v1 / x + self.v2 / y)
            return np.where((x > 0) & (y > 0), out, 0.0)
        return np.array([s.value(a, b) for s, a, b in zip(self.specs, x, y)], dtype=float)

    def partials(self, beta):
        x, y = beta[self.left], beta[self.right]
        if self.closedForm:
            s = self.v1 / x + self.v2 / y
            return self.gap2 * self.v1 / x ** 2 / s ** 2, self.gap2 * self.v2 / y ** 2 / s ** 2
        dx, dy = zip(*[s.partials(a, b) for s, a, b in zip(self.specs, x, y)])
        return np.array(dx), np.array(dy)

    def objective(self, beta):
        return float(self.values(beta).min())

    def jacobian(self, beta):
        dx, dy = self.partials(beta)
        jac = np.zeros((len(self.pairs), self.n))
        rows = np.arange(len(self.pairs))
        jac[rows, self.left] += dx
        jac[rows, self.right] += dy
        return jac


def _exponentiatedGradient(table, iterations=EG_ITERATIONS, step=EG_STEP):
    beta = np.full(table.n, 1.0 / table.n)
    average = np.zeros(table.n)
    trajectory = []
    for t in range(1, iterations + 1):
        values = table.values(beta)
        active = int(np.argmin(values))
        grad = np.zeros(table.n)
        x, y = beta[table.left[active]], beta[table.right[active]]
        dx, dy = table.specs[active].partials(x, y)
        grad[table.left[active]] += dx
        grad[table.right[active]] += dy
        scale = np.max(np.abs(grad))
        if scale > 0:
            beta = beta * np.exp(step / np.sqrt(t) * grad / scale)
            beta /= beta.sum()
        average += (beta - average) / t
        if t % EG_RECORD_EVERY == 0:
            trajectory.append(table.objective(average))
    return average, trajectory


def _polish(table, beta):
    """Epigraph refinement: max z subject to G_pair(beta) >= z and sum(beta) = 1."""
    start = np.append(beta, table.objective(beta))
    n = table.n
    constraints = [
        {'type': 'ineq', 'fun': lambda v: table.values(v[:n]) - v[n],
         'jac': lambda v: np.hstack([table.jacobian(v[:n]), -np.ones((len(table.pairs), 1))])},
        {'type': 'eq', 'fun': lambda v: np.array([v[:n].sum() - 1.0]),
         'jac': lambda v: np.append(np.ones(n), 0.0)[None, :]},
    ]
    bounds = [(1e-12, 1.0)] * n + [(0.0, None)]
    try:
        res = optimize.minimize(lambda v: -v[n], start, jac=lambda v: np.append(np.zeros(n), -1.0),
                                method='SLSQP', bounds=bounds, constraints=constraints,
                                options={'maxiter': 500, 'ftol': 1e-15})
    except (ValueError, FloatingPointError) as e:
        logger.debug('SLSQP refinement failed: %s', e)
        return beta
    candidate = np.clip(res.x[:n], 0.0, None)
    candidate /= candidate.sum()
    if table.objective(candidate) >= table.objective(beta):
        return candidate
    return beta
