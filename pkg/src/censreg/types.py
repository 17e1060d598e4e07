"""Shared domain types: censored datasets, parameter vectors, fit results."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class CensoringError(ValueError):
    """Base class for invalid-dataset errors. ``index`` names the offending row."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class DimensionMismatch(CensoringError):
    pass


class InvalidIndicator(CensoringError):
    pass


class BoundViolation(CensoringError):
    pass


class NoEvents(ValueError):
    """Raised when every observation is censored."""


class NonFinite(ArithmeticError):
    pass


class CensorSide(str, enum.Enum):
    RIGHT = "right"
    LEFT = "left"


class Model(str, enum.Enum):
    SEMIPAR_AFT = "semipar_aft"
    TOBIT = "tobit"
    WEIBULL_AFT = "weibull_aft"
    COXPH = "coxph"


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CensoredDataset:
    """Observed responses ``y``, event indicators ``delta`` and covariates ``Z``.

    ``delta[i] == 1`` means the response was observed exactly. For
    right-censored data ``y`` is ``min(T, C)``; for left-censored data it is
    ``max(X, bound)``. Arrays are copied and made read-only on construction.
    Nothing is checked here; call :func:`validate`.
    """

    y: np.ndarray
    delta: np.ndarray
    Z: np.ndarray
    censor_side: CensorSide = CensorSide.RIGHT
    bound: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "y", _frozen(self.y))
        object.__setattr__(self, "delta", _frozen(self.delta, dtype=np.int64))
        Z = np.array(self.Z, dtype=float)
        if Z.ndim == 1:
            Z = Z.reshape(-1, 1)
        object.__setattr__(self, "Z", _frozen(Z))
        object.__setattr__(self, "censor_side", CensorSide(self.censor_side))

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def p(self) -> int:
        return self.Z.shape[1]

    @property
    def n_censored(self) -> int:
        return int(np.sum(self.delta == 0))

    def shifted(self, c: float) -> "CensoredDataset":
        """Same dataset with ``c`` added to every response (and bound)."""
        bound = None if self.bound is None else self.bound + c
        return CensoredDataset(self.y + c, self.delta, self.Z, self.censor_side, bound)

    def take(self, idx) -> "CensoredDataset":
        idx = np.asarray(idx)
        return CensoredDataset(self.y[idx], self.delta[idx], self.Z[idx], self.censor_side, self.bound)


def validate(ds: CensoredDataset) -> None:
    """Raise a :class:`CensoringError` subclass if ``ds`` is malformed."""
    n = len(ds.y)
    if len(ds.delta) != n:
        raise DimensionMismatch(f"delta has length {len(ds.delta)}, expected {n}",
                                index=min(n, len(ds.delta)))
    if ds.Z.ndim != 2 or ds.Z.shape[0] != n:
        raise DimensionMismatch(f"Z has {ds.Z.shape[0]} rows, expected {n}",
                                index=min(n, ds.Z.shape[0]))
    if n < 2:
        raise DimensionMismatch(f"need at least 2 observations, got {n}", index=n)
    bad = np.flatnonzero((ds.delta != 0) & (ds.delta != 1))
    if bad.size:
        i = int(bad[0])
        raise InvalidIndicator(f"delta[{i}] = {ds.delta[i]} is not 0 or 1", index=i)
    if ds.censor_side is CensorSide.LEFT:
        if ds.bound is None:
            raise BoundViolation("left-censored data requires a bound", index=None)
        bad = np.flatnonzero((ds.delta == 0) & (ds.y != ds.bound))
        if bad.size:
            i = int(bad[0])
            raise BoundViolation(
                f"censored y[{i}] = {float(ds.y[i]):g} differs from bound {float(ds.bound):g}", index=i)


@dataclass(frozen=True)
class ParamVector:
    names: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        names = tuple(self.names)
        values = tuple(float(v) for v in self.values)
        if len(names) != len(values):
            raise ValueError("names and values differ in length")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names in {names}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    def __getitem__(self, name: str) -> float:
        return self.values[self.names.index(name)]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def __len__(self):
        return len(self.names)


@dataclass(frozen=True)
class ModelFit:
    model: Model
    params: ParamVector
    converged: bool
    objective_at_solution: float
    iterations: int
    message: str = field(default="", compare=False)

    def __post_init__(self):
        if self.converged and not np.isfinite(self.objective_at_solution):
            raise ValueError("a converged fit must have a finite objective")


def covariate_names(p: int) -> tuple[str, ...]:
    return tuple(f"z{j + 1}" for j in range(p))
