"""Modified algebraic Bethe ansatz for the XXX spin-1/2 chain with a general
twist: Izergin determinants, Bethe equations, scalar products and a dense
2^N reference implementation."""

from .bethe import BetheSolution, BetheSystem, set_distance, solve_diagonal
from .chain_oracle import ChainOracle, oracle_scalar_product, r_matrix, verify_oracle
from .errors import (CapExceeded, DegenerateTwist, FormUndefined, MabaError, NoConvergence,
                     NotOnShell, PoleAtCoincidence, SingularJacobian)
from .izergin import (conjugate_izergin, modified_izergin, ordinary_izergin,
                      verify_izergin_properties)
from .params import ModelParams, TwistDecomposition, decompose_twist, random_rho1
from .rational import (enumerate_partitions, f, g, h, lambda1, lambda2, omega_matrix,
                       verify_sum_identities)
from .report import CheckRecord, Report
from .scalar_products import ScalarProducts, diagonal_onshell_check

__version__ = "0.1.0"

__all__ = [
    "BetheSolution", "BetheSystem", "CapExceeded", "ChainOracle", "CheckRecord",
    "DegenerateTwist", "FormUndefined", "MabaError", "ModelParams", "NoConvergence",
    "NotOnShell", "PoleAtCoincidence", "Report", "ScalarProducts", "SingularJacobian",
    "TwistDecomposition", "conjugate_izergin", "decompose_twist", "diagonal_onshell_check",
    "enumerate_partitions", "f", "g", "h", "lambda1", "lambda2", "modified_izergin",
    "omega_matrix", "oracle_scalar_product", "ordinary_izergin", "r_matrix", "random_rho1",
    "set_distance", "solve_diagonal", "verify_izergin_properties", "verify_oracle",
    "verify_sum_identities",
]
