"""Maximum likelihood for the left-censored normal (Tobit) and Weibull AFT models.

Both models are parameterized without constraints: Tobit as
``(gamma_0..gamma_p, log sigma)`` and Weibull as ``(gamma_0..gamma_p, log k)``.
The Weibull likelihood is written on the log-time scale, where
``k (log T - eta)`` is a standard minimum-extreme-value variable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from .optimize import NewtonOptions, newton_maximize
from .types import (CensoredDataset, CensorSide, Model, ModelFit, NoEvents, NonFinite,
                    ParamVector, covariate_names)

_LOG_2PI = np.log(2 * np.pi)
_MAX_EXP = 700.0


@dataclass(frozen=True)
class TobitParams:
    gamma: np.ndarray
    log_sigma: float

    @property
    def sigma(self) -> float:
        return float(np.exp(self.log_sigma))

    def to_vector(self) -> np.ndarray:
        return np.append(self.gamma, self.log_sigma)

    @classmethod
    def from_vector(cls, v) -> "TobitParams":
        v = np.asarray(v, dtype=float)
        return cls(v[:-1], float(v[-1]))


@dataclass(frozen=True)
class WeibullAftParams:
    gamma: np.ndarray
    log_k: float

    @property
    def k(self) -> float:
        return float(np.exp(self.log_k))

    def to_vector(self) -> np.ndarray:
        return np.append(self.gamma, self.log_k)

    @classmethod
    def from_vector(cls, v) -> "WeibullAftParams":
        v = np.asarray(v, dtype=float)
        return cls(v[:-1], float(v[-1]))


def _design(ds: CensoredDataset) -> np.ndarray:
    return np.column_stack([np.ones(ds.n), ds.Z])


def _mills(c: np.ndarray) -> np.ndarray:
    """phi(c) / Phi(c), stable far into the lower tail."""
    return np.exp(-0.5 * c * c - 0.5 * _LOG_2PI - log_ndtr(c))


# --- Tobit --------------------------------------------------------------------

class _Tobit:
    def __init__(self, ds: CensoredDataset):
        if ds.censor_side is not CensorSide.LEFT or ds.bound is None:
            raise ValueError("Tobit needs left-censored data with a bound")
        self.X = _design(ds)
        self.y = ds.y
        self.obs = ds.delta == 1
        self.cen = ~self.obs
        self.D = float(ds.bound)

    def loglik(self, v) -> float:
        g, s = v[:-1], v[-1]
        sigma = np.exp(s)
        mu = self.X @ g
        z = (self.y[self.obs] - mu[self.obs]) / sigma
        c = (self.D - mu[self.cen]) / sigma
        return float(np.sum(-0.5 * z * z - 0.5 * _LOG_2PI - s) + np.sum(log_ndtr(c)))

    def grad(self, v) -> np.ndarray:
        g, s = v[:-1], v[-1]
        sigma = np.exp(s)
        mu = self.X @ g
        Xo, Xc = self.X[self.obs], self.X[self.cen]
        z = (self.y[self.obs] - mu[self.obs]) / sigma
        c = (self.D - mu[self.cen]) / sigma
        lam = _mills(c)
        dg = Xo.T @ z / sigma - Xc.T @ lam / sigma
        ds_ = np.sum(z * z - 1.0) - np.sum(lam * c)
        return np.append(dg, ds_)

    def hess(self, v) -> np.ndarray:
        g, s = v[:-1], v[-1]
        sigma = np.exp(s)
        mu = self.X @ g
        Xo, Xc = self.X[self.obs], self.X[self.cen]
        z = (self.y[self.obs] - mu[self.obs]) / sigma
        c = (self.D - mu[self.cen]) / sigma
        lam = _mills(c)
        a = lam * (c + lam)
        b = lam * (c * (c + lam) - 1.0)
        m = v.size
        H = np.empty((m, m))
        H[:-1, :-1] = -(Xo.T @ Xo) / sigma**2 - (Xc.T * a) @ Xc / sigma**2
        cross = -2.0 * Xo.T @ z / sigma - Xc.T @ b / sigma
        H[:-1, -1] = H[-1, :-1] = cross
        H[-1, -1] = -2.0 * np.sum(z * z) - np.sum(c * b)
        return H


def tobit_loglik(params: TobitParams, ds: CensoredDataset) -> float:
    val = _Tobit(ds).loglik(params.to_vector())
    if not np.isfinite(val):
        raise NonFinite("Tobit log-likelihood is not finite")
    return val


def tobit_grad(params: TobitParams, ds: CensoredDataset) -> np.ndarray:
    return _Tobit(ds).grad(params.to_vector())


def tobit_hess(params: TobitParams, ds: CensoredDataset) -> np.ndarray:
    return _Tobit(ds).hess(params.to_vector())


def _ls_start(X, y) -> tuple[np.ndarray, float]:
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    sd = np.sqrt(np.mean(resid**2))
    return coef, float(np.log(sd)) if sd > 0 else 0.0


def _fit(model: Model, obj, init, names, transform, opts):
    res = newton_maximize(obj.loglik, obj.grad, obj.hess, init, opts)
    est = transform(res.x)
    return ModelFit(model, ParamVector(names, est), res.converged and bool(np.all(np.isfinite(est))),
                    res.objective, res.iterations, res.reason.value)


def fit_tobit(ds: CensoredDataset, opts: NewtonOptions | None = None) -> ModelFit:
    """Tobit MLE; parameters reported as (Intercept, z1..zp, sigma)."""
    obj = _Tobit(ds)
    if obj.obs.sum() < ds.p + 2:
        raise ValueError("too few uncensored rows for a Tobit fit")
    coef, ls = _ls_start(obj.X[obj.obs], obj.y[obj.obs])
    names = ("Intercept",) + covariate_names(ds.p) + ("sigma",)
    return _fit(Model.TOBIT, obj, np.append(coef, ls), names,
                lambda v: np.append(v[:-1], np.exp(v[-1])), opts)


# --- Weibull AFT ----------------------------------------------------------------

class _WeibullAft:
    def __init__(self, ds: CensoredDataset):
        if ds.censor_side is not CensorSide.RIGHT:
            raise ValueError("Weibull AFT needs right-censored log-scale data")
        if not np.any(ds.delta == 1):
            raise NoEvents("all observations are censored")
        self.X = _design(ds)
        self.y = ds.y
        self.d = ds.delta.astype(float)

    def _w(self, v):
        k = np.exp(v[-1])
        w = k * (self.y - self.X @ v[:-1])
        return k, w

    def loglik(self, v) -> float:
        _, w = self._w(v)
        if np.max(w) > _MAX_EXP:
            return -np.inf
        return float(np.sum(self.d * (v[-1] + w)) - np.sum(np.exp(w)))

    def grad(self, v) -> np.ndarray:
        k, w = self._w(v)
        ew = np.exp(np.minimum(w, _MAX_EXP))
        r = self.d - ew
        return np.append(-k * (self.X.T @ r), np.sum(self.d + r * w))

    def hess(self, v) -> np.ndarray:
        k, w = self._w(v)
        ew = np.exp(np.minimum(w, _MAX_EXP))
        r = self.d - ew
        m = v.size
        H = np.empty((m, m))
        H[:-1, :-1] = -(k * k) * (self.X.T * ew) @ self.X
        H[:-1, -1] = H[-1, :-1] = k * (self.X.T @ (w * ew - r))
        H[-1, -1] = np.sum(r * w - ew * w * w)
        return H


def weibull_aft_loglik(params: WeibullAftParams, ds: CensoredDataset) -> float:
    val = _WeibullAft(ds).loglik(params.to_vector())
    if not np.isfinite(val):
        raise NonFinite("Weibull log-likelihood overflowed")
    return val


def weibull_aft_grad(params: WeibullAftParams, ds: CensoredDataset) -> np.ndarray:
    return _WeibullAft(ds).grad(params.to_vector())


def weibull_aft_hess(params: WeibullAftParams, ds: CensoredDataset) -> np.ndarray:
    return _WeibullAft(ds).hess(params.to_vector())


def fit_weibull_aft(ds: CensoredDataset, opts: NewtonOptions | None = None) -> ModelFit:
    """Weibull AFT MLE; parameters reported as (Intercept, z1..zp, shape_k)."""
    obj = _WeibullAft(ds)
    obs = ds.delta == 1
    X = obj.X[obs]
    if X.shape[0] > X.shape[1] and np.linalg.matrix_rank(X) == X.shape[1]:
        coef, _ = _ls_start(X, ds.y[obs])
    else:
        coef = np.zeros(X.shape[1])
        coef[0] = float(np.mean(ds.y))
    names = ("Intercept",) + covariate_names(ds.p) + ("shape_k",)
    return _fit(Model.WEIBULL_AFT, obj, np.append(coef, 0.0), names,
                lambda v: np.append(v[:-1], np.exp(v[-1])), opts)
