"""nldiff: principal-eigenvalue analysis for nonlocal dispersal operators.

Discretizes operators of the form Lu = integral of J(x,y) u(y) dy - a(x) u
on 1-D domains (intervals, circles, truncated lines), traces the
spectral-radius curve of the auxiliary family A_lambda = Ju/(lambda + a),
certifies the sufficient condition for a principal eigenvalue, solves
spr(A_lambda) = 1 by monotone bisection, and cross-validates against
time-domain decay rates, resolvent positivity and closed-form oracles.
"""

from .errors import NldiffError
from .grid import Circle, Grid, Interval, TruncatedLine, build_grid, refine
from .model import (CatalogModel, DeathRate, Kernel, builtin_catalog,
                    catalog_by_name, constant_kernel, convolution_kernel,
                    rank_one_kernel, validate_model)
from .operators import (DiscreteOperator, apply, assemble_A, assemble_J,
                        assemble_L, l1_operator_norm)
from .spectral import (SprCurve, check_monotone, left_endpoint_limit,
                       rank_one_radius, spectral_radius, spr_curve, upper_bound)
from .eigensolve import (Certificate, ConditionReport, EigenResult,
                         check_condition, drnovsek_bound, prop1_log_bound,
                         prop1_test_function, rayleigh_certificate,
                         solve_principal, weighted_inner_product)
from .dynamics import (RateEstimate, Trajectory, check_maximum_principle,
                       check_resolvent_positive, estimate_rate, integrate,
                       lambda0_from_resolvent)
from .scenarios import run_scenario, run_suite
from .config import ScenarioConfig, load_config

__version__ = "0.1.0"
