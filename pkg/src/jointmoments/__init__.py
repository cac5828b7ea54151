"""Joint moments of CUE characteristic polynomials and their large-N limit.

Each quantity is reachable by at least two independent routes:

* ``exact``       Barnes G closed forms, finite-N moment assembly, a(s)
* ``quadrature``  tensor quadrature over the Hua-Pickrell eigenvalue density
* ``ensemble``    Metropolis chains and Haar unitaries
* ``kernel``      the limiting Bessel kernel, Nystrom operators, Fredholm determinants
* ``painleve``    sigma-Painleve III' series, ODE continuation and Bessel determinants
"""

from .errors import (
    BranchError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    ExtrapolationError,
    JointMomentsError,
    Method,
    MomentEstimate,
)
from .exact import (
    arithmetic_constant,
    elementary_symmetric_identity,
    even_moment_X,
    log_c_N,
    log_F_limit_s0,
    log_F_N_s0,
    zeta_prediction,
)
from .specfun import barnes_g, bessel_i, bessel_j, log_barnes_g, log_gamma, pearson_iv_cdf, pearson_iv_density
from .quadrature import (
    char_function_N,
    even_moment_X_quadrature,
    hp_expectation,
    joint_moment_quadrature,
    sum_power_expectation,
    theta_grid,
    xi_N,
)
from .ensemble import (
    ChainConfig,
    EigenvalueSample,
    abs_moment_limit,
    cue_sample,
    hp_abs_moment,
    joint_moment_cue,
    joint_moment_mcmc,
    mcmc_sample_hp,
    pearson_diagonal_check,
)
from .kernel import (
    NystromOperator,
    fredholm_char_function,
    kernel_diagonal,
    kernel_eval,
    moment_integrals,
    variance_via_kernel,
)
from .painleve import (
    bessel_det_moment,
    finite_N_residual,
    integrate_sigma,
    moments_from_besseldet,
    moments_from_tau,
    painleve_moment,
    sigma_piii_series,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
