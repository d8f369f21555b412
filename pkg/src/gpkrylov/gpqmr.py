"""GPQMR: quasi-minimum-residual solver for partitioned systems.

The iterate minimizes the projected residual norm over the interleaved
subspace, computed through a sliding QR factorization of the projected
block-tridiagonal matrix.  The upper factor has bandwidth 4; rotations
premultiply, arriving as four-rotation bundles that finalize two rows at a
time.  Direction vectors satisfy a depth-4 back-recurrence, so four retained
pairs plus the two being formed are live at any step.

Entries of the upper factor in columns beyond the current ones depend on
coupling coefficients that only become available one or two reduction steps
later; each bundle is therefore applied in two stages (an early stage that
fixes the rotations, diagonals and right-hand side, and a late stage that
completes the trailing-column entries once the next step's coefficients
exist).  The staging is exact, it only reorders scalar assignments.
"""

from __future__ import annotations

import time

import numpy as np

from .convergence import BREAKDOWN, CONVERGED, MAXIT, ConvergenceRecord, SolveResult
from .linop import PartitionedSystem, residual_norm
from .reduction import BreakdownReport, reduction_init, reduction_step
from .rotations import Band, SingularWindowError, plane_rotation

__all__ = [
    "QRWindow",
    "QMRState",
    "qr_step",
    "rotate_rhs",
    "rotation_block",
    "dense_qr_factors",
    "gpqmr_solve",
]


class QRWindow:
    """Sliding data of the banded QR factorization.

    Band entries are indexed by row: row j holds (rho_j, nu_j, omega_j,
    zeta_j, xi_j) in columns j..j+4.  ``i`` counts bundles whose early stage
    has run; the late stage of bundle i runs at the start of step i+1.
    """

    __slots__ = ("lam", "mu", "i", "rho", "nu", "omega", "zeta", "xi",
                 "rotations", "c_rho_even", "omega_bar", "nu_bar",
                 "omega_check")

    def __init__(self, lam, mu):
        self.lam = float(lam)
        self.mu = float(mu)
        self.i = 0
        self.rho = Band(1)
        self.nu = Band(1)
        self.omega = Band(1)
        self.zeta = Band(1)
        self.xi = Band(1)
        self.rotations: list[tuple] = []
        # pending scalars consumed by the next early/late stage
        self.c_rho_even = 0.0   # rho_bar at even row 2i+2 (from early stage)
        self.omega_bar = 0.0    # omega_bar at row 2i-1 (for late stage)
        self.nu_bar = 0.0       # nu_bar at row 2i (for late stage)
        self.omega_check = 0.0  # partially rotated omega at row 2i


def qr_step(w: QRWindow, alpha_k, theta_k, beta_next, delta_next,
            gamma_next, eta_next) -> None:
    """Advance the factorization by one step of the underlying reduction.

    Completes the previous bundle's trailing columns with the step-k
    diagonal entries and index-k+1 superdiagonal couplings, then runs the
    early stage of the new bundle with the index-k+1 subdiagonal couplings.
    """
    lam, mu = w.lam, w.mu
    if w.i == 0:
        # carries straight from the first diagonal block
        rb1, tb, nb1, zb1 = lam, theta_k, alpha_k, gamma_next
        rb2 = mu
        w.omega_bar = 0.0
        w.nu_bar = eta_next
    else:
        i = w.i
        c1, s1, c2, s2, c3, s3, c4, s4 = w.rotations[i - 1]
        ob, nb, oc = w.omega_bar, w.nu_bar, w.omega_check
        omega_t = c1 * ob + s1 * theta_k
        theta_t = -s1 * ob + c1 * theta_k
        xi_t = s1 * eta_next
        nu_t_far = c1 * eta_next
        omega_odd = c2 * omega_t + s2 * nb      # row 2i-1 final
        nu_h = -s2 * omega_t + c2 * nb
        xi_odd = c2 * xi_t                      # row 2i-1 final
        zeta_h = -s2 * xi_t
        nu_c = c3 * nu_h + s3 * theta_t
        theta_bar = -s3 * nu_h + c3 * theta_t   # theta carry for next bundle
        zeta_c = c3 * zeta_h + s3 * nu_t_far
        nu_bar_far = -s3 * zeta_h + c3 * nu_t_far
        nu_even = c4 * nu_c + s4 * lam          # row 2i final
        rho_bar_odd = -s4 * nu_c + c4 * lam
        omega_even = c4 * oc + s4 * alpha_k     # row 2i final
        nu_bar_odd = -s4 * oc + c4 * alpha_k
        zeta_even = c4 * zeta_c                 # row 2i final
        omega_bar_new = -s4 * zeta_c
        xi_even = s4 * gamma_next               # row 2i final
        zeta_bar_odd = c4 * gamma_next

        w.nu.push(nu_even)
        w.omega.push(omega_odd)
        w.omega.push(omega_even)
        w.zeta.push(zeta_even)
        w.xi.push(xi_odd)
        w.xi.push(xi_even)
        rb1, tb, nb1, zb1 = rho_bar_odd, theta_bar, nu_bar_odd, zeta_bar_odd
        rb2 = w.c_rho_even
        w.omega_bar = omega_bar_new
        w.nu_bar = nu_bar_far

    # early stage of bundle j = i+1 (everything the iterate needs now)
    j = w.i + 1
    c1, s1, rho_t = plane_rotation(rb1, delta_next)
    nu_t = c1 * nb1
    t_j = -s1 * nb1
    zeta_t = c1 * zb1 + s1 * mu
    rho_t_far = -s1 * zb1 + c1 * mu
    c2, s2, rho_odd = plane_rotation(rho_t, tb)
    if rho_odd == 0.0:
        raise SingularWindowError(f"zero pivot at row {2 * j - 1}")
    nu_odd = c2 * nu_t + s2 * rb2
    rho_h = -s2 * nu_t + c2 * rb2
    zeta_odd = c2 * zeta_t
    omega_h = -s2 * zeta_t
    c3, s3, rho_c = plane_rotation(rho_h, t_j)
    omega_c = c3 * omega_h + s3 * rho_t_far
    rho_bar_even = -s3 * omega_h + c3 * rho_t_far
    c4, s4, rho_even = plane_rotation(rho_c, beta_next)
    if rho_even == 0.0:
        raise SingularWindowError(f"zero pivot at row {2 * j}")

    w.rho.push(rho_odd)    # row 2j-1
    w.rho.push(rho_even)   # row 2j
    w.nu.push(nu_odd)      # row 2j-1
    w.zeta.push(zeta_odd)  # row 2j-1
    w.omega_check = omega_c
    w.c_rho_even = rho_bar_even
    w.rotations.append((c1, s1, c2, s2, c3, s3, c4, s4))
    w.i = j


def rotate_rhs(w: QRWindow, carry: tuple[float, float]):
    """Apply the newest bundle to the right-hand-side window.

    Returns (w_odd, w_even, carry_odd, carry_even): the two finalized entries
    for the triangular solve and the carries whose norm is the current
    quasi-residual.
    """
    c1, s1, c2, s2, c3, s3, c4, s4 = w.rotations[-1]
    b1, b2 = carry
    t1 = c1 * b1
    t4 = -s1 * b1
    f1 = c2 * t1 + s2 * b2
    h2 = -s2 * t1 + c2 * b2
    c2v = c3 * h2 + s3 * t4
    b4 = -s3 * h2 + c3 * t4
    f2 = c4 * c2v
    b3 = -s4 * c2v
    return f1, f2, b3, b4


def rotation_block(c1, s1, c2, s2, c3, s3, c4, s4) -> np.ndarray:
    """4x4 block of one row-rotation bundle (rotations premultiply)."""
    r1 = np.array([[c1, 0, 0, s1], [0, 1, 0, 0], [0, 0, 1, 0], [-s1, 0, 0, c1]])
    r2 = np.array([[c2, s2, 0, 0], [-s2, c2, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    r3 = np.array([[1, 0, 0, 0], [0, c3, 0, s3], [0, 0, 1, 0], [0, -s3, 0, c3]])
    r4 = np.array([[1, 0, 0, 0], [0, c4, s4, 0], [0, -s4, c4, 0], [0, 0, 0, 1]])
    return r4 @ r3 @ r2 @ r1


def dense_qr_factors(w: QRWindow, k: int | None = None):
    """(Q_hat, R_hat) with Q_hat (2k+2)x(2k+2) orthogonal and R_hat 2k x 2k.

    All entries of R_hat within its 2k columns are finalized once bundle k's
    early stage has run, so reconstruction of the projected matrix as
    Q_hat @ [R_hat; 0] is exact for any k <= i.
    """
    if k is None:
        k = w.i
    if k > w.i:
        raise ValueError("window has not advanced that far")
    dim = 2 * k + 2
    Qt = np.eye(dim)
    for i in range(1, k + 1):
        block = rotation_block(*w.rotations[i - 1])
        emb = np.eye(dim)
        lo = 2 * i - 2
        emb[lo:lo + 4, lo:lo + 4] = block
        Qt = emb @ Qt
    R = np.zeros((2 * k, 2 * k))
    for r in range(1, 2 * k + 1):
        for name, off in (("rho", 0), ("nu", 1), ("omega", 2), ("zeta", 3), ("xi", 4)):
            col = r + off
            if col > 2 * k:
                continue
            R[r - 1, col - 1] = getattr(w, name)[r]
    return Qt.T, R


class QMRState:
    """Single-owner solver state: reduction window, QR window, a six-slot
    ring of direction pairs, and the rotated right-hand-side carries."""

    def __init__(self, sys: PartitionedSystem, red):
        m, n = sys.m, sys.n
        self.sys = sys
        self.red = red
        self.window = QRWindow(sys.lam, sys.mu)
        self.k = 0
        self.x = np.zeros(m)
        self.y = np.zeros(n)
        self.fx = [np.zeros(m) for _ in range(6)]
        self.fy = [np.zeros(n) for _ in range(6)]
        self.rhs_carry = (red.beta1, red.delta1)
        self.varpi = Band(1)  # finalized rotated right-hand-side entries
        self.quasi = float(np.hypot(red.beta1, red.delta1))
        self.coeffs = None

    def varpi_entry(self, idx: int) -> float:
        return self.varpi[idx]

    def _slot(self, idx):
        return self.fx[idx % 6], self.fy[idx % 6]

    def _col(self, idx):
        """Direction pair at 1-based column idx; zero before the start."""
        if idx < 1:
            m, n = self.sys.m, self.sys.n
            return np.zeros(m), np.zeros(n)
        return self._slot(idx)

    def advance(self):
        """One solver step: reduction, staged bundle, rhs rotation,
        direction back-recurrence, iterate update."""
        coeffs = reduction_step(self.red, self.sys)
        k = coeffs.k
        self.k = k
        w = self.window
        qr_step(w, coeffs.alpha, coeffs.theta, coeffs.beta_next,
                coeffs.delta_next, coeffs.gamma_next, coeffs.eta_next)
        w1, w2, b3, b4 = rotate_rhs(w, self.rhs_carry)
        self.rhs_carry = (b3, b4)
        self.varpi.push(w1)
        self.varpi.push(w2)
        self.quasi = float(np.hypot(b3, b4))

        r1, r2 = 2 * k - 1, 2 * k
        qk, uk = self.red.q_prev, self.red.u_prev
        f5x, f5y = self._col(r1 - 4)
        f4x, f4y = self._col(r1 - 3)
        f3x, f3y = self._col(r1 - 2)
        f2x, f2y = self._col(r1 - 1)
        n1x = (qk - w.xi[r1 - 4] * f5x - w.zeta[r1 - 3] * f4x
               - w.omega[r1 - 2] * f3x - w.nu[r1 - 1] * f2x) / w.rho[r1]
        n1y = (-w.xi[r1 - 4] * f5y - w.zeta[r1 - 3] * f4y
               - w.omega[r1 - 2] * f3y - w.nu[r1 - 1] * f2y) / w.rho[r1]
        n2x = (-w.xi[r2 - 4] * f4x - w.zeta[r2 - 3] * f3x
               - w.omega[r2 - 2] * f2x - w.nu[r2 - 1] * n1x) / w.rho[r2]
        n2y = (uk - w.xi[r2 - 4] * f4y - w.zeta[r2 - 3] * f3y
               - w.omega[r2 - 2] * f2y - w.nu[r2 - 1] * n1y) / w.rho[r2]
        sx1, sy1 = self._slot(r1)
        sx2, sy2 = self._slot(r2)
        np.copyto(sx1, n1x)
        np.copyto(sy1, n1y)
        np.copyto(sx2, n2x)
        np.copyto(sy2, n2y)

        self.x += w1 * sx1 + w2 * sx2
        self.y += w1 * sy1 + w2 * sy2
        self.coeffs = coeffs
        return coeffs


def gpqmr_solve(sys: PartitionedSystem, tol: float = 1e-8,
                maxit: int | None = None, explicit_residual: bool = False,
                breakdown_tol: float | None = None) -> SolveResult:
    """Run GPQMR until the quasi-residual (or true residual) drops below tol.

    The quasi-residual is the projected least-squares residual norm; the true
    residual is bounded by it times the basis norm.  ``explicit_residual``
    evaluates and stops on true residuals instead (two extra operator
    applications per step), mirroring comparison-grade runs.
    """
    if maxit is None:
        maxit = 2 * (sys.m + sys.n)
    t0 = time.perf_counter()
    record = ConvergenceRecord()
    rhs_norm = sys.rhs_norm
    record.append(0, rhs_norm, rhs_norm if explicit_residual else None,
                  elapsed=time.perf_counter() - t0)

    init = (reduction_init(sys) if breakdown_tol is None
            else reduction_init(sys, breakdown_tol))
    if isinstance(init, BreakdownReport):
        record.finalize(BREAKDOWN)
        return SolveResult(np.zeros(sys.m), np.zeros(sys.n), 0, BREAKDOWN,
                           rhs_norm, record, breakdown=init)
    if maxit == 0:
        record.finalize(MAXIT)
        return SolveResult(np.zeros(sys.m), np.zeros(sys.n), 0, MAXIT,
                           rhs_norm, record)

    state = QMRState(sys, init)
    reason = None
    res = rhs_norm
    while reason is None:
        state.advance()
        res = state.quasi
        true_res = None
        if explicit_residual:
            true_res = residual_norm(sys, state.x, state.y)
            res = true_res
        record.append(state.k, state.quasi, true_res,
                      elapsed=time.perf_counter() - t0)
        if res <= tol:
            reason = CONVERGED
        elif state.red.breakdown is not None:
            # finished the in-flight step; nothing further can be built
            if residual_norm(sys, state.x, state.y) <= tol:
                reason = CONVERGED
            else:
                reason = BREAKDOWN
        elif state.k >= maxit:
            reason = MAXIT
    record.finalize(reason)
    return SolveResult(state.x, state.y, state.k, reason, float(res), record,
                       breakdown=state.red.breakdown)
