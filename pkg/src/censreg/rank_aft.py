"""Rank-based semiparametric AFT estimation.

Slopes solve the weighted log-rank-type estimating equation

    S_n(b) = n^-1 sum_i delta_i [1 - F_b(e_i)] (Z_i - Zbar(e_i)),

with ``e_i = y_i - Z_i b``, ``F_b`` the KM distribution function of the
residuals and ``Zbar(e)`` the covariate mean over the risk set
``{j : e_j >= e}``. The estimating function carries no information about
the intercept; it is recovered afterwards as the KM mean of the residuals.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .km import km_mean
from .optimize import SimplexOptions, simplex_minimize
from .types import (CensoredDataset, CensorSide, DimensionMismatch, Model, ModelFit,
                    NoEvents, ParamVector, covariate_names)


@dataclass(frozen=True)
class RankScore:
    value: np.ndarray
    norm: float


def residuals(ds: CensoredDataset, slopes) -> np.ndarray:
    b = np.atleast_1d(np.asarray(slopes, dtype=float))
    if b.size != ds.p:
        raise DimensionMismatch(f"expected {ds.p} slopes, got {b.size}")
    return ds.y - ds.Z @ b


def zbar(Z, e, i: int) -> np.ndarray:
    """Mean covariate vector over the risk set of observation ``i``."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z.reshape(-1, 1)
    e = np.asarray(e, dtype=float)
    return Z[e >= e[i]].mean(axis=0)


def _score_value(e: np.ndarray, delta: np.ndarray, Z: np.ndarray) -> np.ndarray:
    n = e.size
    # events before censorings within a tie so the running product telescopes
    order = np.lexsort((1 - delta, e))
    es, ds, Zs = e[order], delta[order], Z[order]
    first = np.searchsorted(es, es, side="left")
    last = np.searchsorted(es, es, side="right") - 1

    at_risk = n - np.arange(n)
    surv = np.cumprod(1.0 - ds / at_risk)
    weight = ds * surv[last]  # 1 - F(e_i), F right-continuous

    tail = np.cumsum(Zs[::-1], axis=0)[::-1]
    zbar_s = tail[first] / (n - first)[:, None]
    return (weight[:, None] * (Zs - zbar_s)).sum(axis=0) / n


def score(ds: CensoredDataset, slopes) -> RankScore:
    if not np.any(ds.delta == 1):
        raise NoEvents("all observations are censored")
    v = _score_value(residuals(ds, slopes), ds.delta, ds.Z)
    return RankScore(v, float(np.linalg.norm(v)))


def _score_norm_fn(ds: CensoredDataset):
    y, delta, Z = ds.y, ds.delta, ds.Z

    def f(b):
        return float(np.linalg.norm(_score_value(y - Z @ b, delta, Z)))

    return f


def _bisect_sign_change(ds: CensoredDataset, b0: float, xtol: float = 1e-10):
    """Locate the sign change of a scalar score; ``None`` if no bracket is found."""
    def s(b):
        return _score_value(ds.y - ds.Z[:, 0] * b, ds.delta, ds.Z)[0]

    s0 = s(b0)
    if s0 == 0.0:
        return b0, 0
    step, lo, hi = 0.25, None, None
    for it in range(60):
        for cand in (b0 - step, b0 + step):
            sc = s(cand)
            if sc == 0.0:
                return cand, it
            if np.sign(sc) != np.sign(s0):
                lo, hi = sorted((b0, cand))
                break
        if lo is not None:
            break
        step *= 2.0
    else:
        return None
    s_lo = s(lo)
    its = 0
    while hi - lo > xtol * (1.0 + abs(lo)):
        mid = 0.5 * (lo + hi)
        sm = s(mid)
        if sm == 0.0:
            return mid, its
        if np.sign(sm) == np.sign(s_lo):
            lo = mid
        else:
            hi = mid
        its += 1
    return 0.5 * (lo + hi), its


def solve_slopes(ds: CensoredDataset, init, opts: SimplexOptions | None = None) -> ModelFit:
    """Minimize ||S_n|| by simplex search with one restart from the best vertex.

    With a single covariate the score is a scalar step function and its sign
    change is located directly by bracketing and bisection; the simplex is
    the fallback when no bracket exists.
    """
    if not np.any(ds.delta == 1):
        raise NoEvents("all observations are censored")
    b0 = np.atleast_1d(np.asarray(init, dtype=float))
    if b0.size != ds.p:
        raise DimensionMismatch(f"expected {ds.p} initial slopes, got {b0.size}")
    f = _score_norm_fn(ds)
    f_init = f(b0)
    root = _bisect_sign_change(ds, float(b0[0])) if ds.p == 1 else None
    if root is not None:
        best_x = np.array([root[0]])
        best_f, iterations = f(best_x), root[1]
    else:
        first = simplex_minimize(f, b0, opts)
        second = simplex_minimize(f, first.x, opts)
        best = second if second.objective <= first.objective else first
        iterations = first.iterations + second.iterations
        if not np.isfinite(best.objective):
            best_x, best_f = b0, f_init
        else:
            best_x, best_f = best.x, best.objective
    tol = max(10.0 / ds.n, 1e-3 * f_init)
    names = covariate_names(ds.p)
    return ModelFit(Model.SEMIPAR_AFT, ParamVector(names, best_x), bool(best_f <= tol),
                    best_f, iterations)


def reconstruct_intercept(ds: CensoredDataset, slopes) -> float:
    return km_mean(residuals(ds, slopes), ds.delta)


def _ls_init(ds: CensoredDataset) -> np.ndarray:
    obs = ds.delta == 1
    X = np.column_stack([np.ones(int(obs.sum())), ds.Z[obs]])
    if X.shape[0] <= X.shape[1] or np.linalg.matrix_rank(X) < X.shape[1]:
        return np.zeros(ds.p)
    coef, *_ = np.linalg.lstsq(X, ds.y[obs], rcond=None)
    return coef[1:]


def fit_semipar_aft(ds: CensoredDataset, opts: SimplexOptions | None = None) -> ModelFit:
    """Slopes from the rank equation, intercept from the KM residual mean."""
    if ds.censor_side is not CensorSide.RIGHT:
        raise ValueError("the rank AFT estimator needs right-censored responses")
    # canonical row order makes the whole search path independent of input order
    ds = ds.take(np.lexsort((*ds.Z.T[::-1], ds.delta, ds.y)))
    slopes = solve_slopes(ds, _ls_init(ds), opts)
    b = np.array(slopes.params.values)
    b0 = reconstruct_intercept(ds, b)
    params = ParamVector(("Intercept",) + slopes.params.names, (b0, *b))
    return ModelFit(Model.SEMIPAR_AFT, params, slopes.converged,
                    slopes.objective_at_solution, slopes.iterations)
