"""Self-contained invariant suite over seeded random systems.

Every check here is also covered by the test suite; this module exists so
the command-line ``check`` subcommand can exercise an installation without
pytest.  Checks compare the sliding-window solvers against dense
brute-force counterparts on one desk-scale system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import oracle_lsq, oracle_minnorm
from .gpbilq import BiLQState, dense_lq_factors
from .gpqmr import QMRState, dense_qr_factors
from .linop import DENSE_GUARD, Operator, PartitionedSystem, residual_norm
from .reduction import BreakdownReport, ReductionHistory, reduction_init

__all__ = ["CheckResult", "run_invariant_suite", "random_system"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_system(size: int, seed, lam: float = 1.0, mu: float = -0.5,
                  symmetric: bool = False) -> PartitionedSystem:
    """Dense random system with unit-scale Gaussian blocks."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((size, size))
    B = A.T.copy() if symmetric else rng.standard_normal((size, size))
    b = rng.standard_normal(size)
    c = rng.standard_normal(size)
    return PartitionedSystem(lam, mu, Operator.from_matrix(A),
                             Operator.from_matrix(B), b, c)


def run_invariant_suite(size: int = 12, seed: int = 7) -> list[CheckResult]:
    """Run all invariants on one seeded system; returns one result each."""
    if 2 * size > DENSE_GUARD:
        raise ValueError(f"size {size} exceeds the dense verification guard")
    results: list[CheckResult] = []

    def check(name, err, tol):
        results.append(CheckResult(name, bool(err <= tol), f"{err:.3e} (tol {tol:g})"))

    sys_ = random_system(size, seed)
    steps = max(2, size // 2)
    red = reduction_init(sys_)
    hist = ReductionHistory(red)
    bilq = BiLQState(sys_, red)
    hist.update(red, bilq.startup())

    A = sys_.A.to_dense()
    B = sys_.B.to_dense()
    b1, d1 = red.beta1, red.delta1

    err_bi = err_rel = err_mn = err_lq = err_estl = err_tr = err_estc = 0.0
    for _ in range(2, steps + 1):
        co = bilq.advance()
        hist.update(red, co)
        k = co.k
        P, Q, U, V = hist.P(k), hist.Q(k), hist.U(k), hist.V(k)
        eye = np.eye(k)
        err_bi = max(err_bi,
                     np.max(np.abs(P.T @ Q - eye)), np.max(np.abs(U.T @ V - eye)))
        scale = np.linalg.norm(A)
        err_rel = max(err_rel,
                      np.linalg.norm(A @ U - hist.Q(k + 1) @ hist.S_rect(k)) / scale,
                      np.linalg.norm(B @ Q - hist.U(k + 1) @ hist.T_rect(k)) / scale)
        H = hist.projected(sys_.lam, sys_.mu, k)
        rhs = np.zeros(2 * k - 2)
        rhs[0], rhs[1] = b1, d1
        z = oracle_minnorm(H[:2 * k - 2, :], rhs)
        sol = hist.W(k) @ z
        err_mn = max(err_mn, np.linalg.norm(np.concatenate([bilq.x, bilq.y]) - sol)
                     / max(1.0, np.linalg.norm(sol)))
        L, Qf = dense_lq_factors(bilq.window)
        err_lq = max(err_lq, np.linalg.norm(L @ Qf - H[:2 * k, :]),
                     np.linalg.norm(Qf @ Qf.T - np.eye(2 * k)))
        est = bilq.estimate_residual_l().est_norm_l
        true = residual_norm(sys_, bilq.x, bilq.y)
        err_estl = max(err_estl, abs(est - true) / max(1.0, true))
        if bilq.attempt_transfer():
            zc = np.linalg.solve(H[:2 * k, :],
                                 np.concatenate([[b1, d1], np.zeros(2 * k - 2)]))
            solc = hist.W(k) @ zc
            err_tr = max(err_tr,
                         np.linalg.norm(np.concatenate([bilq.x_c, bilq.y_c]) - solc)
                         / max(1.0, np.linalg.norm(solc)))
            estc = bilq.estimate_residual_c()
            truec = residual_norm(sys_, bilq.x_c, bilq.y_c)
            err_estc = max(err_estc, abs(estc - truec) / max(1.0, truec))
    check("biorthogonality", err_bi, 1e-8)
    check("reduction relations", err_rel, 1e-10)
    check("minimum-norm iterate vs dense", err_mn, 1e-8)
    check("sliding LQ reconstruction", err_lq, 1e-12)
    check("residual estimate (min-norm iterate)", err_estl, 1e-8)
    check("transfer iterate vs dense", err_tr, 1e-8)
    check("residual estimate (transfer iterate)", err_estc, 1e-8)

    red2 = reduction_init(sys_)
    hist2 = ReductionHistory(red2)
    qmr = QMRState(sys_, red2)
    err_ls = err_qr = 0.0
    quasi_prev = np.inf
    quasi_mono = True
    for _ in range(steps):
        co = qmr.advance()
        hist2.update(red2, co)
        k = co.k
        H = hist2.projected(sys_.lam, sys_.mu, k)
        rhs = np.zeros(2 * k + 2)
        rhs[0], rhs[1] = red2.beta1, red2.delta1
        z = oracle_lsq(H, rhs)
        sol = hist2.W(k) @ z
        err_ls = max(err_ls, np.linalg.norm(np.concatenate([qmr.x, qmr.y]) - sol)
                     / max(1.0, np.linalg.norm(sol)))
        Qh, Rh = dense_qr_factors(qmr.window, k)
        err_qr = max(err_qr,
                     np.linalg.norm(Qh @ np.vstack([Rh, np.zeros((2, 2 * k))]) - H),
                     np.linalg.norm(Qh @ Qh.T - np.eye(2 * k + 2)))
        quasi_mono = quasi_mono and qmr.quasi <= quasi_prev + 1e-12
        quasi_prev = qmr.quasi
    check("least-squares iterate vs dense", err_ls, 1e-8)
    check("sliding QR reconstruction", err_qr, 1e-12)
    results.append(CheckResult("quasi-residual monotonicity", quasi_mono,
                               "nonincreasing" if quasi_mono else "increased"))

    # symmetric coupling collapses the two-sided process to one-sided
    ssys = random_system(size, seed + 1, mu=-1.0, symmetric=True)
    red3 = reduction_init(ssys)
    err_sym = 0.0
    from .reduction import reduction_step
    for _ in range(min(8, size - 1)):
        reduction_step(red3, ssys)
        if red3.breakdown:
            break
        err_sym = max(err_sym, np.max(np.abs(red3.p_cur - red3.q_cur)),
                      np.max(np.abs(red3.u_cur - red3.v_cur)))
    check("symmetric-coupling collapse", err_sym, 1e-10)

    # a forced starting breakdown must surface as a report, not a crash
    m = size
    f = np.zeros(m)
    f[0] = 1.0
    b = np.zeros(m)
    b[1] = 1.0
    rng = np.random.default_rng(seed + 2)
    bd_sys = PartitionedSystem(1.0, 1.0,
                               Operator.from_matrix(rng.standard_normal((m, m))),
                               Operator.from_matrix(rng.standard_normal((m, m))),
                               b, np.ones(m), f=f, g=np.ones(m))
    rep = reduction_init(bd_sys)
    results.append(CheckResult("starting breakdown detection",
                               isinstance(rep, BreakdownReport),
                               repr(rep)))
    return results
