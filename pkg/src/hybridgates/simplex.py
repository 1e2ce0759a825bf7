"""Box-constrained Nelder-Mead minimizer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    nfev: int
    nit: int


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    *,
    step: float | np.ndarray = 0.1,
    max_iter: int = 200,
    xtol: float = 1e-10,
    ftol: float = 1e-14,
    alpha: float = 1.0,
    gamma: float = 2.0,
    rho: float = 0.5,
    sigma: float = 0.5,
) -> SimplexResult:
    """Minimize ``f`` over the box ``[lower, upper]``.

    Trial points are clipped into the box.  The starting point is a vertex of
    the initial simplex, so the returned value never exceeds ``f(x0)``.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x0 = np.clip(np.asarray(x0, dtype=float), lower, upper)
    n = x0.size
    steps = np.broadcast_to(np.asarray(step, dtype=float), (n,))

    def clip(x):
        return np.clip(x, lower, upper)

    pts = [x0]
    for i in range(n):
        x = x0.copy()
        # step away from the nearer wall so the vertex stays distinct
        x[i] = x0[i] + steps[i] if x0[i] + steps[i] <= upper[i] else x0[i] - steps[i]
        pts.append(clip(x))
    simplex = np.array(pts)
    values = np.array([f(p) for p in simplex])
    nfev = n + 1

    nit = 0
    while nit < max_iter:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        spread = np.max(np.abs(simplex[1:] - simplex[0])) if n else 0.0
        # both tolerances must hold, otherwise a level simplex straddling the minimum stops early
        if spread <= xtol and values[-1] - values[0] <= ftol:
            break
        nit += 1

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = clip(centroid + alpha * (centroid - worst))
        fr = f(xr)
        nfev += 1

        if fr < values[0]:
            xe = clip(centroid + gamma * (xr - centroid))
            fe = f(xe)
            nfev += 1
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue

        if fr < values[-1]:
            xc = clip(centroid + rho * (xr - centroid))
        else:
            xc = clip(centroid + rho * (worst - centroid))
        fc = f(xc)
        nfev += 1
        if fc < min(fr, values[-1]):
            simplex[-1], values[-1] = xc, fc
            continue

        best = simplex[0]
        for i in range(1, n + 1):
            simplex[i] = clip(best + sigma * (simplex[i] - best))
            values[i] = f(simplex[i])
        nfev += n

    k = int(np.argmin(values))
    return SimplexResult(simplex[k].copy(), float(values[k]), nfev, nit)
