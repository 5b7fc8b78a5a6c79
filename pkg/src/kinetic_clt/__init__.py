"""Monte Carlo and spectral tools for Kac-type kinetic equations and their stable limits."""

import os as _os

if "NUMBA_THREADING_LAYER" not in _os.environ:
    # try OpenMP before TBB; old TBB builds only emit a warning and are skipped anyway
    from numba import config as _config

    _config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

from .errors import (AlphaMismatch, ConfigError, DegenerateFit, GridMismatch, GridTooSmall, InvalidS,
                     KineticError, NoRoot, PoorDecay)
from .initlaw import (Gaussian, GaussianMixture, InitialLaw, PointMass, Rademacher, StableParams,
                      TwoSidedPareto, constants_from_tails, law_cdf, law_cf, law_from_spec, law_sample,
                      sample_stable, stable_cf)
from .kernel import (CollisionKernel, check_h1, find_alpha, inelastic_kac, inelastic_maxwell, kac,
                     kernel_from_spec, s_moment, sample_lr, wealth)
from .limit import LimitMixture, fixpoint_residual, limit_cf, limit_mixture, moment_finite, sample_m_infty
from .mckean import WeightArray, beta_max, expected_m, expected_m_time, grow_weights, m_stat
from .metrics import DecayFit, cf_sup_distance, empirical_cf, fit_decay, wasserstein_empirical
from .montecarlo import Ensemble, centering_terms, run_ensemble, sample_nu, sample_vt, sample_vt_star
from .rng import RandomStream
from .wild import (CfGrid, Density, density_from_cf, gain_apply, lp_density_distance, wild_evaluate,
                   wild_solve, wild_terms)

__version__ = "0.1.0"
