"""Censored regression under detection limits: rank AFT, Tobit, Weibull AFT, Cox PH."""
from .coxph import cox_logpl, fit_cox, implied_cox_truth
from .datagen import DesignKind, DesignSpec, generate, make_design, rng_stream
from .km import km_eval_cdf, km_fit, km_mean
from .parametric import fit_tobit, fit_weibull_aft, tobit_loglik, weibull_aft_loglik
from .rank_aft import fit_semipar_aft, reconstruct_intercept, score, solve_slopes
from .types import CensoredDataset, CensorSide, Model, ModelFit, ParamVector, validate

__version__ = "0.1.0"
