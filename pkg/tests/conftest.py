import numpy as np
import pytest

from gpkrylov import Operator, PartitionedSystem

ACCEPTANCE_RESULTS = []


def record_acceptance(criterion: str, passed: bool, detail: str = ""):
    ACCEPTANCE_RESULTS.append((criterion, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        line = f"{status}  {criterion}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


def make_system(m, n, seed, lam=1.0, mu=-0.5, symmetric=False, sparse_ops=False,
                fg_random=False):
    """Seeded dense-backed random system (f=b, g=c unless fg_random)."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    if symmetric:
        assert m == n
        B = A.T.copy()
    else:
        B = rng.standard_normal((n, m))
    if sparse_ops:
        from scipy import sparse
        opA = Operator.from_matrix(sparse.csr_matrix(A))
        opB = Operator.from_matrix(sparse.csr_matrix(B))
    else:
        opA, opB = Operator.from_matrix(A), Operator.from_matrix(B)
    b = rng.standard_normal(m)
    c = rng.standard_normal(n)
    f = rng.standard_normal(m) if fg_random else None
    g = rng.standard_normal(n) if fg_random else None
    return PartitionedSystem(lam, mu, opA, opB, b, c, f, g)


@pytest.fixture
def one_by_one():
    """lam=mu=1, A=[2], B=[3], b=c=1: exact solution (0.2, 0.4)."""
    return PartitionedSystem(1.0, 1.0, Operator.from_matrix([[2.0]]),
                             Operator.from_matrix([[3.0]]), [1.0], [1.0])
