"""Small-dimension optimizers: Nelder-Mead simplex and safeguarded Newton."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np


class Reason(str, enum.Enum):
    TOLERANCE = "tolerance"
    MAX_ITER = "max_iter"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class OptimResult:
    x: np.ndarray
    objective: float
    iterations: int
    converged: bool
    reason: Reason


@dataclass(frozen=True)
class SimplexOptions:
    step: float = 0.25
    reflect: float = 1.0
    expand: float = 2.0
    contract: float = 0.5
    shrink: float = 0.5
    max_iter: int = 500
    xtol: float = 1e-8
    ftol: float = 1e-12


@dataclass(frozen=True)
class NewtonOptions:
    max_iter: int = 100
    rel_tol: float = 1e-8
    grad_tol: float = 1e-8
    max_halvings: int = 60


def _safe(f, x) -> float:
    v = float(f(x))
    return v if np.isfinite(v) else np.inf


def simplex_minimize(f: Callable[[np.ndarray], float], init, opts: SimplexOptions | None = None
                     ) -> OptimResult:
    """Minimize ``f`` by Nelder-Mead starting from an axis-aligned simplex at ``init``.

    Non-finite objective values are treated as ``+inf``. Terminates when the
    simplex diameter drops below ``xtol``, when the vertex values and the
    value at the simplex centroid agree to within ``ftol``, or after
    ``max_iter`` iterations.
    """
    o = opts or SimplexOptions()
    x0 = np.atleast_1d(np.asarray(init, dtype=float))
    p = x0.size
    f0 = _safe(f, x0)
    if not np.isfinite(f0):
        return OptimResult(x0, float("nan"), 0, False, Reason.DEGENERATE)

    sim = np.empty((p + 1, p))
    sim[0] = x0
    for j in range(p):
        sim[j + 1] = x0
        sim[j + 1, j] += o.step
    fs = np.array([f0] + [_safe(f, v) for v in sim[1:]])

    it = 0
    reason = Reason.MAX_ITER
    while True:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if np.all(np.isfinite(fs)) and fs[-1] - fs[0] <= o.ftol:
            # equal vertex values only mean convergence if the region between them is flat too
            if abs(_safe(f, sim.mean(axis=0)) - fs[0]) <= o.ftol:
                reason = Reason.TOLERANCE
                break
        if np.max(np.linalg.norm(sim[1:] - sim[0], axis=1)) <= o.xtol:
            reason = Reason.TOLERANCE
            break
        if it >= o.max_iter:
            break
        it += 1

        centroid = sim[:-1].mean(axis=0)
        worst = sim[-1]
        xr = centroid + o.reflect * (centroid - worst)
        fr = _safe(f, xr)
        if fr < fs[0]:
            xe = centroid + o.expand * (xr - centroid)
            fe = _safe(f, xe)
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + o.contract * (xr - centroid)
            fc = _safe(f, xc)
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = centroid + o.contract * (worst - centroid)
            fc = _safe(f, xc)
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        sim[1:] = sim[0] + o.shrink * (sim[1:] - sim[0])
        fs[1:] = [_safe(f, v) for v in sim[1:]]

    best = sim[0].copy()
    fbest = float(fs[0])
    if not np.isfinite(fbest):
        return OptimResult(best, float("nan"), it, False, Reason.DEGENERATE)
    return OptimResult(best, fbest, it, reason is Reason.TOLERANCE, reason)


def _ascent_direction(g: np.ndarray, H: np.ndarray) -> np.ndarray:
    try:
        np.linalg.cholesky(-H)
        d = np.linalg.solve(-H, g)
    except np.linalg.LinAlgError:
        return g
    if not np.all(np.isfinite(d)) or d @ g <= 0:
        return g
    return d


def newton_maximize(f, grad, hess, init, opts: NewtonOptions | None = None) -> OptimResult:
    """Maximize ``f`` with Newton steps, falling back to steepest ascent.

    When ``-hess`` is not positive definite the gradient is used as search
    direction. Each step is halved until the objective increases, so
    the returned point is never worse than ``init``.
    """
    o = opts or NewtonOptions()
    x = np.atleast_1d(np.asarray(init, dtype=float)).copy()
    fx = float(f(x))
    if not np.isfinite(fx):
        return OptimResult(x, float("nan"), 0, False, Reason.DEGENERATE)

    for it in range(1, o.max_iter + 1):
        g = np.asarray(grad(x), dtype=float)
        if np.linalg.norm(g) < o.grad_tol:
            return OptimResult(x, fx, it - 1, True, Reason.TOLERANCE)
        d = _ascent_direction(g, np.asarray(hess(x), dtype=float))
        t = 1.0
        for _ in range(o.max_halvings):
            xn = x + t * d
            fn = float(f(xn))
            if np.isfinite(fn) and fn > fx:
                break
            t *= 0.5
        else:
            # no ascent possible along d at machine resolution
            return OptimResult(x, fx, it, np.linalg.norm(g) < 1e-4 * (1 + abs(fx)), Reason.TOLERANCE)
        step = xn - x
        x, fx = xn, fn
        if np.linalg.norm(step) <= o.rel_tol * (1.0 + np.linalg.norm(x)):
            return OptimResult(x, fx, it, True, Reason.TOLERANCE)
    return OptimResult(x, fx, o.max_iter, False, Reason.MAX_ITER)


def check_gradient(f, grad, x, h: float = 1e-5) -> float:
    """Max relative discrepancy between ``grad(x)`` and central differences of ``f``.

    The step for coordinate ``i`` is ``h * (1 + |x_i|)``; the error is scaled
    by ``max(|fd_i|, 1)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    g = np.atleast_1d(np.asarray(grad(x), dtype=float))
    fd = np.empty_like(x)
    for i in range(x.size):
        hi = h * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = hi
        fd[i] = (f(x + e) - f(x - e)) / (2 * hi)
    return float(np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1.0)))


def check_hessian(grad, hess, x, h: float = 1e-5) -> float:
    """Same as :func:`check_gradient`, applied column-wise to ``hess`` via ``grad``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    H = np.asarray(hess(x), dtype=float)
    worst = 0.0
    for i in range(x.size):
        hi = h * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = hi
        col = (np.asarray(grad(x + e)) - np.asarray(grad(x - e))) / (2 * hi)
        worst = max(worst, float(np.max(np.abs(H[:, i] - col) / np.maximum(np.abs(col), 1.0))))
    return worst
