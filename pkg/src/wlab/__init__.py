"""Discrete laboratory for weighted maximal inequalities on dyadic windows."""
from .constants import ConstantsConfig, LogValue, c_mnp, script_E, theorem_constants
from .errors import (BadExponent, ConfigError, CoverNotFound, DegenerateFamily,
                     DimensionMismatch, MissingInput, NegativeLevel, UncertifiedFamily,
                     WlabError)
from .grid import DyadicCube, LatticeCube, Window, third_trick_cover
from .lorentz import GridFunction, norm_p1, norm_pinf, norm_triple, rearrangement
from .operators import maximal, multilinear_maximal, n_theta, product_maximal
from .search import ParamFamily, SearchResult, maximize_ratio, sharpness_scan
from .sparse import SparseFamily, cz_sparse_decompose, sparse_operator, verify_sparse
from .verify import (ExperimentSpec, RatioReport, check_counterexample, check_dual_sawyer,
                     check_msawyer, check_multilinear_characterization, check_prodhl,
                     check_sawyer, check_sparse_domination, run_experiment, run_experiments)
from .weights import (ExponentTuple, WeightVector, a1_constant, ap_constant, apr_bracket,
                      apr_double, fujii_wilson, multilinear_apr, rh_constant, rh_inf,
                      smallest_ap_exponent)

__version__ = "0.1.0"
