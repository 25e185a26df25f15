"""MCMC for doubly-intractable posteriors: SAVM, MAVM and the exchange algorithm.

The Gaussian precision model has a known normalizer and serves as an oracle;
the toroidal Ising model draws exact auxiliary variables by monotone CFTP.
"""
from .diagnostics import (EssEstimate, acceptance_rate, effective_sample_size, efficiency,
                          ks_test, min_ess, thin)
from .gaussian import GammaParams, GaussianPrecisionModel, posterior_params
from .ising import (CFTPBudgetError, GridIsingModel, IsingModel, IsingParams,
                    UnsupportedRegimeError, cftp_exact_sample, enumerate_boltzmann,
                    pseudolikelihood_estimate)
from .kernels import BACKEND
from .model import (BridgeSchedule, DomainError, Model, WorkCounters, bridge_log_f,
                    default_beta_schedule, log_z_ratio_estimate)
from .proposals import IndependentGamma, RandomWalk, UniformGrid, posterior_proposal
from .samplers import (ALGORITHMS, AcceptanceRecord, ChainError, ChainTrace, SamplerConfig,
                       UnsupportedModelError, exchange_bridged_step, exchange_step,
                       exact_z_mh_step, mavm_step, run_chain, savm_step)

__version__ = "0.1.0"
