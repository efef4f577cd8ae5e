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
from scipy import optimize

from .constants import *
from .objects import SolverError


def replicationStreams(baseSeed, rep):
    """Independent (simulation, policy, selection) generators for one replication.

    The streams come from SeedSequence(baseSeed, spawn_key=(rep,)), so a replication
    draws the same numbers whether it runs alone, serially or inside a worker pool.
    """
    seq = np.random.SeedSequence(int(baseSeed), spawn_key=(int(rep),))
    return tuple(np.random.default_rng(child) for child in seq.spawn(3))


def topM(values, m):
    '''Indices of the m largest values, ties broken by lowest index. Returns (indices, tied)'''
    values = np.asarray(values)
    order = np.lexsort((np.arange(len(values)), -values))
    tied = m < len(values) and values[order[m - 1]] == values[order[m]]
    return np.sort(order[:m]), bool(tied)


def rankOrder(values):
    return np.lexsort((np.arange(len(values)), -np.asarray(values)))


def smallestAtLeast(fn, z, lo, hi, maxIter=BISECTION_MAXITER):
    """Smallest x in [lo, hi] with fn(x) >= z for a nondecreasing fn.

    Returns inf when even fn(hi) falls short of z.
    """
    if fn(lo) >= z:
        return lo
    if fn(hi) < z:
        return np.inf
    for _ in range(maxIter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fn(mid) >= z:
            hi = mid
        else:
            lo = mid
    return hi


def gridMinimize(fn, lo, hi, nGrid=LINE_SEARCH_GRID, xtol=LINE_SEARCH_TOL, vectorized=False):
    """Global-first 1-D minimisation: coarse grid, then bounded Brent search on the best bracket.

    A vectorized fn gets the whole grid in one call.
    """
    if hi <= lo:
        return lo, fn(lo)
    grid = np.linspace(lo, hi, nGrid)
    values = np.asarray(fn(grid), dtype=float) if vectorized else np.array([fn(x) for x in grid])
    best = int(np.argmin(values))
    a, b = grid[max(best - 1, 0)], grid[min(best + 1, nGrid - 1)]
    res = optimize.minimize_scalar(fn, bounds=(a, b), method='bounded', options={'xatol': xtol})
    if not np.isfinite(res.fun) and not np.isfinite(values[best]):
        raise SolverError('line search found no finite value on [{}, {}]'.format(lo, hi))
    if res.fun <= values[best]:
        return float(res.x), float(res.fun)
    return float(grid[best]), float(values[best])


def gridMaximize(fn, lo, hi, nGrid=GAMMA_GRID, xtol=LINE_SEARCH_TOL):
    x, value = gridMinimize(lambda t: -fn(t), lo, hi, nGrid=nGrid, xtol=xtol)
    return x, -value


def logSpacedCheckpoints(start, stop, n=DEFAULT_N_CHECKPOINTS):
    '''Increasing integer budgets between start and stop, log spaced, stop always included'''
    start, stop = max(int(start), 1), int(stop)
    if start >= stop:
        return [stop]
    points = np.unique(np.round(np.geomspace(start, stop, n)).astype(int))
    points = [int(p) for p in points if start <= p <= stop]
    if points[-1] != stop:
        points.append(stop)
    return points
