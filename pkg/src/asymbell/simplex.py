"""Nelder-Mead simplex search run on many starting points at once.

Each simplex evolves independently; batching only amortizes the cost of
evaluating a vectorized objective. Coefficients follow the dimension-adaptive
choice of Gao and Han (2012), as in ``scipy.optimize.minimize(adaptive=True)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class SimplexResult:
    x: np.ndarray          # (R, n) best vertex per start
    fun: np.ndarray        # (R,)
    converged: np.ndarray  # (R,) simplex diameter fell below xatol
    iterations: np.ndarray  # (R,)
    nfev: int


def batched_nelder_mead(fun: Callable[[np.ndarray], np.ndarray], x0, *, step: float = 0.25,
                        xatol: float = 1e-9, maxiter: int = 2000) -> SimplexResult:
    """Minimize ``fun`` from every row of ``x0``.

    ``fun`` maps a (k, n) array of points to k objective values. Stops a
    simplex when its diameter (max-norm distance from the best vertex) is
    below ``xatol`` or after ``maxiter`` iterations.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    R, n = x0.shape
    alpha, gamma = 1.0, 1.0 + 2.0 / n
    rho, sigma = 0.75 - 1.0 / (2 * n), 1.0 - 1.0 / n
    nfev = 0

    def f(pts):
        nonlocal nfev
        nfev += len(pts)
        if len(pts) == 0:
            return np.empty(0)
        return np.asarray(fun(pts), dtype=float)

    sim = np.repeat(x0[:, None, :], n + 1, axis=1)
    sim[:, 1:, :] += step * np.eye(n)
    fs = f(sim.reshape(-1, n)).reshape(R, n + 1)
    active = np.ones(R, dtype=bool)
    converged = np.zeros(R, dtype=bool)
    iterations = np.zeros(R, dtype=int)

    for _ in range(maxiter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        S, F = sim[idx], fs[idx]
        order = np.argsort(F, axis=1, kind="stable")
        S = np.take_along_axis(S, order[:, :, None], axis=1)
        F = np.take_along_axis(F, order, axis=1)
        sim[idx], fs[idx] = S, F

        diam = np.max(np.abs(S[:, 1:] - S[:, :1]), axis=(1, 2))
        done = (diam < xatol) | (iterations[idx] >= maxiter)
        converged[idx[done]] = diam[done] < xatol
        active[idx[done]] = False
        keep = ~done
        if not keep.any():
            break
        idx, S, F = idx[keep], S[keep], F[keep]
        iterations[idx] += 1

        c = S[:, :-1].mean(axis=1)
        xw, fw = S[:, -1], F[:, -1]
        fb, fsw = F[:, 0], F[:, -2]
        xr = c + alpha * (c - xw)
        fr = f(xr)
        new_x, new_f = xr.copy(), fr.copy()
        shrink = np.zeros(len(idx), dtype=bool)

        exp = fr < fb
        if exp.any():
            xe = c[exp] + gamma * (xr[exp] - c[exp])
            fe = f(xe)
            take = fe < fr[exp]
            rows = np.flatnonzero(exp)[take]
            new_x[rows], new_f[rows] = xe[take], fe[take]

        outer = (fr >= fsw) & (fr < fw)
        if outer.any():
            xc = c[outer] + rho * (xr[outer] - c[outer])
            fc = f(xc)
            ok = fc <= fr[outer]
            rows = np.flatnonzero(outer)
            new_x[rows[ok]], new_f[rows[ok]] = xc[ok], fc[ok]
            shrink[rows[~ok]] = True

        inner = fr >= fw
        if inner.any():
            xc = c[inner] + rho * (xw[inner] - c[inner])
            fc = f(xc)
            ok = fc < fw[inner]
            rows = np.flatnonzero(inner)
            new_x[rows[ok]], new_f[rows[ok]] = xc[ok], fc[ok]
            shrink[rows[~ok]] = True

        step_rows = ~shrink
        S[step_rows, -1] = new_x[step_rows]
        F[step_rows, -1] = new_f[step_rows]
        if shrink.any():
            Ss = S[shrink]
            Ss[:, 1:] = Ss[:, :1] + sigma * (Ss[:, 1:] - Ss[:, :1])
            Fs = F[shrink]
            Fs[:, 1:] = f(Ss[:, 1:].reshape(-1, n)).reshape(-1, n)
            S[shrink], F[shrink] = Ss, Fs
        sim[idx], fs[idx] = S, F

    best = np.argmin(fs, axis=1)
    rows = np.arange(R)
    return SimplexResult(sim[rows, best], fs[rows, best], converged, iterations, nfev)
