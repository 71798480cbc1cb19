"""Dynamic-programming kernels for reparameterization search.

The reparameterization of a closed curve is optimized over monotone lattice
paths from (0, 0) to (n, n) on the discretization grid, with local slopes
restricted to a fixed set of coprime steps.  Edge costs integrate
|q1(t) - q2(gamma(t)) * sqrt(gamma')|^2 with the left-point rule, matching the
quadrature used everywhere else, so the path energy equals the squared distance
of the aligned pair exactly.

All positions here are in grid-index units; callers apply the 2*pi/n scaling.
"""

import numpy as np
from numba import njit

# (di, dj) slope steps; di advances the reference grid, dj the target grid.
SLOPES = np.array(
    [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2), (1, 4), (4, 1), (3, 4), (4, 3)],
    dtype=np.int64,
)

_MAX_STEP = 4


@njit(cache=True)
def _edge_cost(q1, q2ext, a, b, di, dj):
    # cost of the path edge from (a, b) to (a + di, b + dj): left-point sum over
    # the di grid columns it spans, with q2 linearly interpolated.
    slope = dj / di
    root = np.sqrt(slope)
    total = 0.0
    for step in range(di):
        pos = b + step * slope
        f = int(pos)
        w = pos - f
        vx = (1.0 - w) * q2ext[f, 0] + w * q2ext[f + 1, 0]
        vy = (1.0 - w) * q2ext[f, 1] + w * q2ext[f + 1, 1]
        dx = q1[a + step, 0] - root * vx
        dy = q1[a + step, 1] - root * vy
        total += dx * dx + dy * dy
    return total


@njit(cache=True)
def _dp_tables(q1, q2ext):
    n = q1.shape[0]
    cost = np.full((n + 1, n + 1), np.inf)
    choice = np.full((n + 1, n + 1), -1, dtype=np.int64)
    cost[0, 0] = 0.0
    for i in range(1, n + 1):
        # reachability band: slopes lie in [1/4, 4] on both the outgoing and
        # incoming side of the path
        jlo = max(1, (i + 3) // 4, 4 * i - 3 * n)
        jhi = min(n, 4 * i, (3 * n + i) // 4)
        for j in range(jlo, jhi + 1):
            best = np.inf
            pick = -1
            for s in range(SLOPES.shape[0]):
                di = SLOPES[s, 0]
                dj = SLOPES[s, 1]
                a = i - di
                b = j - dj
                if a < 0 or b < 0:
                    continue
                prev = cost[a, b]
                if not np.isfinite(prev):
                    continue
                c = prev + _edge_cost(q1, q2ext, a, b, di, dj)
                if c < best:
                    best = c
                    pick = s
            cost[i, j] = best
            choice[i, j] = pick
    return cost, choice


@njit(cache=True)
def _backtrack(choice, n):
    # recover gamma on the integer grid (n + 1 values, gamma[0] = 0, gamma[n] = n)
    gamma = np.empty(n + 1)
    gamma[n] = n
    i = n
    j = n
    while i > 0:
        s = choice[i, j]
        di = SLOPES[s, 0]
        dj = SLOPES[s, 1]
        a = i - di
        b = j - dj
        slope = dj / di
        for k in range(a, i):
            gamma[k] = b + (k - a) * slope
        i = a
        j = b
    gamma[0] = 0.0
    return gamma


@njit(cache=True)
def dp_reparam(q1, q2):
    """Optimal lattice reparameterization of q2 toward q1 at seed 0.

    Returns (gamma, energy) with gamma in index units on the n+1 grid and
    energy the unscaled sum of squared residuals (multiply by 2*pi/n for the
    L2 energy).
    """
    n = q1.shape[0]
    q2ext = np.empty((n + _MAX_STEP + 1, 2))
    for k in range(n + _MAX_STEP + 1):
        q2ext[k, 0] = q2[k % n, 0]
        q2ext[k, 1] = q2[k % n, 1]
    cost, choice = _dp_tables(q1, q2ext)
    gamma = _backtrack(choice, n)
    return gamma, cost[n, n]


@njit(cache=True)
def coarse_seed_energies(q1, q2, idx, rotate):
    """Identity-gamma DP energy of every cyclic seed on a coarse subgrid.

    idx holds the m subsampling indices into the full grid.  For each seed s the
    target curve is read at (idx + s) mod n.  When ``rotate`` is true the coarse
    pair is first put in optimal rotational alignment (closed-form Procrustes).
    Returns the m-independent DP energies, one per seed s = 0..n-1.
    """
    n = q1.shape[0]
    m = idx.shape[0]
    q1c = np.empty((m, 2))
    for k in range(m):
        q1c[k, 0] = q1[idx[k], 0]
        q1c[k, 1] = q1[idx[k], 1]
    energies = np.empty(n)
    q2c = np.empty((m, 2))
    q2ext = np.empty((m + _MAX_STEP + 1, 2))
    for s in range(n):
        for k in range(m):
            src = (idx[k] + s) % n
            q2c[k, 0] = q2[src, 0]
            q2c[k, 1] = q2[src, 1]
        if rotate:
            a = 0.0
            b = 0.0
            for k in range(m):
                a += q1c[k, 0] * q2c[k, 0] + q1c[k, 1] * q2c[k, 1]
                b += q2c[k, 0] * q1c[k, 1] - q2c[k, 1] * q1c[k, 0]
            theta = np.arctan2(b, a)
            ct = np.cos(theta)
            st = np.sin(theta)
            for k in range(m):
                x = q2c[k, 0]
                y = q2c[k, 1]
                q2c[k, 0] = ct * x - st * y
                q2c[k, 1] = st * x + ct * y
        for k in range(m + _MAX_STEP + 1):
            q2ext[k, 0] = q2c[k % m, 0]
            q2ext[k, 1] = q2c[k % m, 1]
        cost, _ = _dp_tables(q1c, q2ext)
        energies[s] = cost[m, m]
    return energies
