"""Simulated censored datasets for the four simulation designs.

Every design draws covariates ``Z1 ~ Bernoulli(0.5)`` and ``Z2 ~ N(0, 1)``,
then a latent response, then imposes a single data-dependent cutoff taken
as an order statistic of the latent sample. The empirical q-quantile of a
sample of size n is its ``ceil(q n)``-th order statistic.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .types import CensoredDataset, CensorSide, ParamVector

EULER_GAMMA = float(np.euler_gamma)


class DesignKind(str, enum.Enum):
    LOD = "lod"
    WEIBULL = "weibull"
    LOGNORMAL = "lognormal"
    TOBIT = "tobit-normal"

    @property
    def code(self) -> int:
        """Stable integer used in RNG keys, independent of grid order."""
        return list(DesignKind).index(self)


@dataclass(frozen=True)
class DesignSpec:
    kind: DesignKind
    n: int = 200
    censor_frac: float = 0.3
    truth: ParamVector = field(default=None)
    sigma2: float = 0.2
    shape_k: float = 3.0

    def __post_init__(self):
        kind = DesignKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.truth is None:
            object.__setattr__(self, "truth", default_truth(kind))
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0.0 < self.censor_frac < 1.0:
            raise ValueError(f"censor_frac must lie in (0, 1), got {self.censor_frac}")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if self.shape_k <= 0:
            raise ValueError("shape_k must be positive")


def default_truth(kind: DesignKind) -> ParamVector:
    if kind is DesignKind.TOBIT:
        return ParamVector(("Intercept", "z1", "z2"), (1.0, 1.0, 1.0))
    return ParamVector(("Intercept", "z1", "z2"), (-1.0, 0.5, -1.0))


def make_design(kind, n: int = 200, censor_frac: float = 0.3, **kw) -> DesignSpec:
    """DesignSpec with the simulation-study defaults for ``kind``."""
    kind = DesignKind(kind)
    if kind is DesignKind.TOBIT:
        kw.setdefault("sigma2", 1.0)
    return DesignSpec(kind, n, censor_frac, **kw)


def censor_key(frac: float) -> int:
    return int(round(frac * 1_000_000))


def rng_stream(master_seed: int, design: int, censor_level: int, replicate: int
               ) -> np.random.Generator:
    """Independent generator for one (seed, design, censor level, replicate) cell."""
    ss = np.random.SeedSequence(entropy=int(master_seed),
                                spawn_key=(int(design), int(censor_level), int(replicate)))
    return np.random.Generator(np.random.PCG64(ss))


def order_stat_rank(frac: float, n: int) -> int:
    """1-based rank ``ceil(frac * n)``, robust to binary rounding of ``frac``."""
    r = math.ceil(round(frac * n, 9))
    return min(max(r, 1), n)


def gen_covariates(n: int, rng: np.random.Generator) -> np.ndarray:
    z1 = (rng.random(n) < 0.5).astype(float)
    z2 = rng.standard_normal(n)
    return np.column_stack([z1, z2])


def _linear(spec: DesignSpec, Z: np.ndarray) -> np.ndarray:
    b = np.asarray(spec.truth.values)
    return b[0] + Z @ b[1:]


def gen_lod_design(spec: DesignSpec, rng: np.random.Generator) -> CensoredDataset:
    """Normal log-scale model, detection limit on ``exp(-T)``; right-censored on T."""
    _expect(spec, DesignKind.LOD)
    Z, T, X = lod_latent(spec, rng)
    D = np.sort(X)[order_stat_rank(spec.censor_frac, spec.n) - 1]
    detected = X > D
    C = -np.log(D)
    y = np.where(detected, T, C)
    return CensoredDataset(y, detected.astype(int), Z, CensorSide.RIGHT)


def lod_latent(spec: DesignSpec, rng: np.random.Generator):
    """Covariates, latent log response T and positive response exp(-T)."""
    Z = gen_covariates(spec.n, rng)
    T = _linear(spec, Z) + math.sqrt(spec.sigma2) * rng.standard_normal(spec.n)
    return Z, T, np.exp(-T)


def _administrative(T: np.ndarray, Z: np.ndarray, frac: float) -> CensoredDataset:
    C = np.sort(T)[order_stat_rank(1.0 - frac, T.size) - 1]
    event = T <= C
    return CensoredDataset(np.log(np.where(event, T, C)), event.astype(int), Z,
                           CensorSide.RIGHT)


def weibull_times(eta: np.ndarray, k: float, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(eta.size)
    return np.exp(eta) * (-np.log(u)) ** (1.0 / k)


def gen_weibull_design(spec: DesignSpec, rng: np.random.Generator) -> CensoredDataset:
    _expect(spec, DesignKind.WEIBULL)
    Z = gen_covariates(spec.n, rng)
    T = weibull_times(_linear(spec, Z), spec.shape_k, rng)
    return _administrative(T, Z, spec.censor_frac)


def gen_lognormal_design(spec: DesignSpec, rng: np.random.Generator) -> CensoredDataset:
    _expect(spec, DesignKind.LOGNORMAL)
    Z = gen_covariates(spec.n, rng)
    logT = _linear(spec, Z) + math.sqrt(spec.sigma2) * rng.standard_normal(spec.n)
    return _administrative(np.exp(logT), Z, spec.censor_frac)


def gen_tobit_design(spec: DesignSpec, rng: np.random.Generator) -> CensoredDataset:
    _expect(spec, DesignKind.TOBIT)
    Z = gen_covariates(spec.n, rng)
    X = _linear(spec, Z) + math.sqrt(spec.sigma2) * rng.standard_normal(spec.n)
    D = float(np.sort(X)[order_stat_rank(spec.censor_frac, spec.n) - 1])
    detected = X > D
    return CensoredDataset(np.where(detected, X, D), detected.astype(int), Z,
                           CensorSide.LEFT, D)


_GENERATORS = {
    DesignKind.LOD: gen_lod_design,
    DesignKind.WEIBULL: gen_weibull_design,
    DesignKind.LOGNORMAL: gen_lognormal_design,
    DesignKind.TOBIT: gen_tobit_design,
}


def generate(spec: DesignSpec, rng: np.random.Generator) -> CensoredDataset:
    return _GENERATORS[spec.kind](spec, rng)


def expected_censored(spec: DesignSpec) -> int:
    """Exact number of censored rows the design produces (ties have probability zero)."""
    if spec.kind in (DesignKind.LOD, DesignKind.TOBIT):
        return order_stat_rank(spec.censor_frac, spec.n)
    return spec.n - order_stat_rank(1.0 - spec.censor_frac, spec.n)


def _expect(spec: DesignSpec, kind: DesignKind):
    if spec.kind is not kind:
        raise ValueError(f"expected a {kind.value} design, got {spec.kind.value}")
