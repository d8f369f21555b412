"""Short-recurrence Krylov solvers for 2x2 block partitioned linear systems.

Solves [lam*I, A; B, mu*I][x; y] = [b; c] with rectangular coupling blocks
accessed only through matvec callbacks.  Three short-recurrence methods
(gpbilq_solve with its transfer iterate, and gpqmr_solve) are built on a
simultaneous biorthogonal tridiagonal reduction; gpmr_solve is the
long-recurrence minimum-residual baseline.
"""

from .baselines import (HessenbergProcessState, OracleWorkspace, gpmr_solve,
                        oracle_dense_solve, oracle_lsq, oracle_minnorm)
from .convergence import (BREAKDOWN, CONVERGED, MAXIT, ConvergenceRecord,
                          SolveResult)
from .gpbilq import BiLQState, gpbilq_solve
from .gpqmr import QMRState, gpqmr_solve
from .checks import run_invariant_suite
from .io import (EXPERIMENTS, build_experiment, build_system,
                 read_convergence_csv, read_matrix_market,
                 write_convergence_csv, write_matrix_market)
from .linop import (Operator, PartitionedSystem, apply_partitioned,
                    assemble_dense, residual_norm)
from .reduction import (BreakdownReport, ReductionHistory, ReductionState,
                        build_projected_h, reduction_init, reduction_step)
from .rotations import SingularWindowError

__version__ = "0.1.0"

__all__ = [
    "Operator", "PartitionedSystem", "apply_partitioned", "residual_norm",
    "assemble_dense",
    "reduction_init", "reduction_step", "ReductionState", "ReductionHistory",
    "BreakdownReport", "build_projected_h",
    "gpbilq_solve", "BiLQState", "gpqmr_solve", "QMRState",
    "gpmr_solve", "HessenbergProcessState", "OracleWorkspace",
    "oracle_minnorm", "oracle_lsq", "oracle_dense_solve",
    "SolveResult", "ConvergenceRecord", "CONVERGED", "MAXIT", "BREAKDOWN",
    "read_matrix_market", "write_matrix_market", "build_system",
    "build_experiment", "EXPERIMENTS",
    "write_convergence_csv", "read_convergence_csv",
    "run_invariant_suite", "SingularWindowError",
    "__version__",
]
