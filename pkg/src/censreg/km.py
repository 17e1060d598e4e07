"""Kaplan-Meier product-limit curves and their mean."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import NoEvents


@dataclass(frozen=True, eq=False)
class StepSurvival:
    """Right-continuous KM step function.

    ``surv_after[j]`` is S(t) on ``[jump_times[j], jump_times[j+1])``.
    """

    jump_times: np.ndarray
    surv_after: np.ndarray
    n_at_risk: np.ndarray
    n_events: np.ndarray

    def __call__(self, t):
        """Survival probability at ``t`` (scalar or array)."""
        idx = np.searchsorted(self.jump_times, t, side="right") - 1
        s = np.where(idx >= 0, self.surv_after[np.maximum(idx, 0)], 1.0)
        return s if np.ndim(t) else float(s)


def km_fit(times, delta) -> StepSurvival:
    """Product-limit estimate over the distinct event times.

    Censored observations tied with an event time are counted in that
    event's risk set.
    """
    t = np.asarray(times, dtype=float)
    d = np.asarray(delta)
    if t.shape != d.shape:
        raise ValueError("times and delta differ in length")
    if t.size == 0:
        raise ValueError("need at least one observation")
    if not np.any(d == 1):
        raise NoEvents("all observations are censored")

    ts = np.sort(t)
    jumps = np.unique(t[d == 1])
    at_risk = t.size - np.searchsorted(ts, jumps, side="left")
    events = np.bincount(np.searchsorted(jumps, t[d == 1]), minlength=jumps.size)
    surv = np.cumprod(1.0 - events / at_risk)
    return StepSurvival(jumps, surv, at_risk, events)


def km_eval_cdf(curve: StepSurvival, t: float) -> float:
    """F(t) = 1 - S(t), right-continuous; 0 below the first jump."""
    return 1.0 - curve(t)


def km_mean(times, delta) -> float:
    """Restricted-free KM mean of a sample that may contain negative values.

    The sample is shifted to start at zero, the largest observation is
    treated as an event if censored (Efron), the step curve is integrated
    from zero and the shift is added back.
    """
    t = np.asarray(times, dtype=float)
    d = np.asarray(delta).astype(np.int64)
    if not np.any(d == 1):
        raise NoEvents("all observations are censored")
    m = t.min()
    u = t - m
    d = np.where(u == u.max(), 1, d)
    curve = km_fit(u, d)
    edges = np.concatenate(([0.0], curve.jump_times))
    heights = np.concatenate(([1.0], curve.surv_after[:-1]))
    return float(m + np.sum(np.diff(edges) * heights))
