"""GPBiLQ and GPBiCG: short-recurrence solvers for partitioned systems.

GPBiLQ defines its iterate through the minimum-norm solution of the
underdetermined projected system (first 2k-2 rows of the projected
block-tridiagonal matrix), computed with a sliding LQ factorization whose
orthogonal factor is a product of two-column rotation bundles.  The lower
factor has bandwidth 4; one forward-substitution pair and one four-column
direction update advance the iterate per step.

GPBiCG solves the square projected system instead.  Its iterate need not
exist at every step; when the trailing 2x2 of the LQ factor is nonsingular
it is obtained from the GPBiLQ iterate with one extra rotation and two
axpy updates.

The steady-state loop performs exactly four operator applications per
iteration and reuses a fixed set of nine m-vectors and nine n-vectors
(plus the retired operator results as scratch); no fresh length-m/n arrays
are allocated after startup.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .convergence import BREAKDOWN, CONVERGED, MAXIT, ConvergenceRecord, SolveResult
from .linop import PartitionedSystem, residual_norm
from .reduction import (BreakdownReport, StepCoeffs, reduction_init,
                        reduction_step)
from .rotations import Band, SingularWindowError, plane_rotation

__all__ = [
    "LQWindow",
    "BiLQState",
    "BiLQResidualEstimate",
    "lq_window_init",
    "lq_step",
    "substitute_step",
    "transfer_scalars",
    "rotation_block",
    "dense_lq_factors",
    "dense_gk",
    "gpbilq_solve",
]


class LQWindow:
    """Sliding data of the banded LQ factorization.

    Band entries are indexed by row: row j holds (xi_j, zeta_j, omega_j,
    nu_j, rho_j) in columns j-4..j.  ``i`` counts completed rotation
    bundles; the seven carry scalars describe the not-yet-finalized trailing
    2x2 corner and its two trailing columns.  Rotation cosine/sine quadruples
    are retained per bundle (scalars only) for the residual estimates and for
    dense reconstruction.
    """

    __slots__ = ("lam", "mu", "i", "rho", "nu", "omega", "zeta", "xi",
                 "rotations", "c_rho1", "c_alpha", "c_nu1", "c_rho2",
                 "c_omega", "c_nu2", "c_zeta")

    def __init__(self, lam, mu):
        self.lam = float(lam)
        self.mu = float(mu)
        self.i = 0
        self.rho = Band(1)
        self.nu = Band(2)
        self.omega = Band(3)
        self.zeta = Band(4)
        self.xi = Band(5)
        self.rotations: list[tuple] = []


def lq_window_init(lam, mu, alpha1, theta1, beta2, delta2) -> LQWindow:
    """Seed the carries from the first diagonal block and coupling pair."""
    w = LQWindow(lam, mu)
    w.c_rho1 = float(lam)
    w.c_alpha = float(alpha1)
    w.c_nu1 = float(theta1)
    w.c_rho2 = float(mu)
    w.c_omega = 0.0
    w.c_nu2 = float(beta2)
    w.c_zeta = float(delta2)
    return w


def lq_step(w: LQWindow, gamma_k, eta_k, alpha_k, theta_k,
            beta_next, delta_next) -> None:
    """Apply the next four-rotation bundle, finalizing two band columns.

    Consumes the index-k coupling scalars gamma_k, eta_k, the step-k diagonal
    entries alpha_k, theta_k, and the freshly produced index-k+1 couplings.
    Raises SingularWindowError when a rotation denominator vanishes.
    """
    i = w.i + 1
    lam, mu = w.lam, w.mu
    rb1, ab, nb1, rb2 = w.c_rho1, w.c_alpha, w.c_nu1, w.c_rho2
    ob, nb2, zb = w.c_omega, w.c_nu2, w.c_zeta

    c1, s1, rho_t = plane_rotation(rb1, gamma_k)
    if rho_t == 0.0:
        raise SingularWindowError(f"zero pivot in rotation 1 of bundle {i}")
    nu_t = c1 * nb1
    t_i = -s1 * nb1
    omega_t = c1 * ob + s1 * alpha_k
    alpha_t = -s1 * ob + c1 * alpha_k
    zeta_t = c1 * zb + s1 * mu
    rho_t2 = -s1 * zb + c1 * mu
    xi_t = s1 * beta_next
    nu_t3 = c1 * beta_next

    c2, s2, rho_odd = plane_rotation(rho_t, ab)
    nu_even = c2 * nu_t + s2 * rb2
    rho_h = -s2 * nu_t + c2 * rb2
    omega_odd = c2 * omega_t + s2 * nb2
    nu_h = -s2 * omega_t + c2 * nb2
    zeta_even = c2 * zeta_t
    omega_h = -s2 * zeta_t
    xi_odd = c2 * xi_t
    zeta_h = -s2 * xi_t

    c3, s3, rho_c = plane_rotation(rho_h, t_i)
    if rho_c == 0.0:
        raise SingularWindowError(f"zero pivot in rotation 3 of bundle {i}")
    nu_c = c3 * nu_h + s3 * alpha_t
    alpha_bar = -s3 * nu_h + c3 * alpha_t
    omega_c = c3 * omega_h + s3 * rho_t2
    rho_bar_even = -s3 * omega_h + c3 * rho_t2
    zeta_c = c3 * zeta_h + s3 * nu_t3
    nu_bar2 = -s3 * zeta_h + c3 * nu_t3

    c4, s4, rho_even = plane_rotation(rho_c, eta_k)
    nu_odd = c4 * nu_c + s4 * lam
    rho_bar_odd = -s4 * nu_c + c4 * lam
    omega_even = c4 * omega_c + s4 * theta_k
    nu_bar1 = -s4 * omega_c + c4 * theta_k
    zeta_odd = c4 * zeta_c
    omega_bar = -s4 * zeta_c
    xi_even = s4 * delta_next
    zeta_bar = c4 * delta_next

    w.rho.push(rho_odd)       # row 2i-1
    w.rho.push(rho_even)      # row 2i
    w.nu.push(nu_even)        # row 2i
    w.nu.push(nu_odd)         # row 2i+1
    w.omega.push(omega_odd)   # row 2i+1
    w.omega.push(omega_even)  # row 2i+2
    w.zeta.push(zeta_even)    # row 2i+2
    w.zeta.push(zeta_odd)     # row 2i+3
    w.xi.push(xi_odd)         # row 2i+3
    w.xi.push(xi_even)        # row 2i+4

    w.c_rho1, w.c_alpha, w.c_nu1, w.c_rho2 = rho_bar_odd, alpha_bar, nu_bar1, rho_bar_even
    w.c_omega, w.c_nu2, w.c_zeta = omega_bar, nu_bar2, zeta_bar
    w.rotations.append((c1, s1, c2, s2, c3, s3, c4, s4))
    w.i = i


def rotation_block(c1, s1, c2, s2, c3, s3, c4, s4) -> np.ndarray:
    """Trailing 4x4 of one column-rotation bundle (product of four rotations)."""
    r1 = np.array([[c1, 0, 0, -s1], [0, 1, 0, 0], [0, 0, 1, 0], [s1, 0, 0, c1]])
    r2 = np.array([[c2, -s2, 0, 0], [s2, c2, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    r3 = np.array([[1, 0, 0, 0], [0, c3, 0, -s3], [0, 0, 1, 0], [0, s3, 0, c3]])
    r4 = np.array([[1, 0, 0, 0], [0, c4, -s4, 0], [0, s4, c4, 0], [0, 0, 0, 1]])
    return r1 @ r2 @ r3 @ r4


def _row_rhs(r, beta1, delta1):
    if r == 1:
        return beta1
    if r == 2:
        return delta1
    return 0.0


def substitute_step(w: LQWindow, varpi: Band, beta1, delta1) -> tuple[float, float]:
    """Forward-substitute the next two entries of the banded lower solve.

    Row r resolves as (rhs_r - xi_r w_{r-4} - zeta_r w_{r-3} - omega_r w_{r-2}
    - nu_r w_{r-1}) / rho_r with out-of-range terms zero.
    """
    out = []
    for _ in range(2):
        r = varpi.last_index + 1
        rho_r = w.rho[r]
        if rho_r == 0.0:
            raise SingularWindowError(f"zero diagonal {r} in forward substitution")
        s = (_row_rhs(r, beta1, delta1)
             - w.xi[r] * varpi[r - 4] - w.zeta[r] * varpi[r - 3]
             - w.omega[r] * varpi[r - 2] - w.nu[r] * varpi[r - 1])
        val = s / rho_r
        varpi.push(val)
        out.append(val)
    return out[0], out[1]


def transfer_scalars(w: LQWindow, varpi: Band, beta1, delta1,
                     det_rtol: float = 1e-13):
    """Rotation and substitution scalars for the square-system iterate.

    Returns (c_k, s_k, w_odd, w_even) for the current step k = i+1, or None
    when the trailing 2x2 determinant is negligible (iterate does not exist).
    """
    rb1, ab, nb1, rb2 = w.c_rho1, w.c_alpha, w.c_nu1, w.c_rho2
    det = rb1 * rb2 - ab * nb1
    if abs(det) <= det_rtol * (abs(rb1 * rb2) + abs(ab * nb1)):
        return None
    c_k, s_k, rho_dd1 = plane_rotation(rb1, ab)
    nu_dd = c_k * nb1 + s_k * rb2
    rho_dd2 = -s_k * nb1 + c_k * rb2
    k = w.i + 1
    r1, r2 = 2 * k - 1, 2 * k
    w_odd = (_row_rhs(r1, beta1, delta1)
             - w.xi[r1] * varpi[r1 - 4] - w.zeta[r1] * varpi[r1 - 3]
             - w.omega[r1] * varpi[r1 - 2] - w.nu[r1] * varpi[r1 - 1]) / rho_dd1
    w_even = (_row_rhs(r2, beta1, delta1)
              - w.xi[r2] * varpi[r2 - 4] - w.zeta[r2] * varpi[r2 - 3]
              - w.omega[r2] * varpi[r2 - 2] - nu_dd * w_odd) / rho_dd2
    return c_k, s_k, w_odd, w_even


# -- dense reconstruction (verification support) ----------------------------


def dense_gk(w: LQWindow, k: int | None = None) -> np.ndarray:
    """Accumulated 2k x 2k product of the first k-1 rotation bundles."""
    if k is None:
        k = w.i + 1
    if k > w.i + 1:
        raise ValueError("window has not advanced that far")
    G = np.eye(2 * k)
    for i in range(1, k):
        block = rotation_block(*w.rotations[i - 1])
        lo = 2 * i - 2
        emb = np.eye(2 * k)
        emb[lo:lo + 4, lo:lo + 4] = block
        G = G @ emb
    return G


def dense_lq_factors(w: LQWindow) -> tuple[np.ndarray, np.ndarray]:
    """(L~, Q~) of the square projected matrix at the current step k = i+1.

    L~ is lower banded(4) except for its rotated trailing 2x2 corner and Q~
    is orthogonal; their product reproduces the projected matrix.
    """
    k = w.i + 1
    dim = 2 * k
    c_k, s_k, rho_dd1 = plane_rotation(w.c_rho1, w.c_alpha)
    nu_dd = c_k * w.c_nu1 + s_k * w.c_rho2
    rho_dd2 = -s_k * w.c_nu1 + c_k * w.c_rho2
    L = np.zeros((dim, dim))
    for r in range(1, dim + 1):
        for name, off in (("xi", 4), ("zeta", 3), ("omega", 2), ("nu", 1), ("rho", 0)):
            col = r - off
            if col < 1 or col > dim:
                continue
            if r >= dim - 1 and col >= dim - 1:
                continue  # trailing corner handled below
            band = getattr(w, name)
            if col <= 2 * (k - 1):
                L[r - 1, col - 1] = band[r]
    L[dim - 2, dim - 2] = rho_dd1
    L[dim - 1, dim - 2] = nu_dd
    L[dim - 1, dim - 1] = rho_dd2
    gt = np.eye(dim)
    gt[dim - 2:, dim - 2:] = np.array([[c_k, -s_k], [s_k, c_k]])
    Q = (dense_gk(w, k) @ gt).T
    return L, Q


# -- solver ------------------------------------------------------------------


@dataclass
class BiLQResidualEstimate:
    """Closed-form residual norms recovered from window scalars."""

    vartheta: float
    varrho: float
    chi: float
    varsigma: float
    est_norm_l: float
    chi_t: float | None = None
    varsigma_t: float | None = None
    est_norm_c: float | None = None


class BiLQState:
    """Single-owner solver state: reduction window, LQ window, directions.

    Direction pairs are stored in fixed buffers: (f1x, f1y)/(f2x, f2y) hold
    the two columns consumed by the iterate update and (ft1x, ft1y)/
    (ft2x, ft2y) the two provisional columns carried to the next step.
    """

    def __init__(self, sys: PartitionedSystem, red):
        m, n = sys.m, sys.n
        self.sys = sys
        self.red = red
        self.window = None
        self.varpi = Band(1)
        self.k = 1
        self.x = np.zeros(m)
        self.y = np.zeros(n)
        self.f1x = np.zeros(m)
        self.f2x = np.zeros(m)
        self.ft1x = red.q_cur.copy()
        self.ft2x = np.zeros(m)
        self.f1y = np.zeros(n)
        self.f2y = np.zeros(n)
        self.ft1y = np.zeros(n)
        self.ft2y = red.u_cur.copy()
        self.coeffs: StepCoeffs | None = None
        self.transfer = None      # (c_k, s_k, w_odd, w_even) at current step
        self.x_c = None
        self.y_c = None

    # one lazily created pair of extra buffers for the square-system iterate
    def _ensure_c_buffers(self):
        if self.x_c is None:
            self.x_c = np.zeros(self.sys.m)
            self.y_c = np.zeros(self.sys.n)

    def startup(self) -> StepCoeffs:
        """Run reduction step 1 and seed the LQ carries (solver step k=1)."""
        coeffs = reduction_step(self.red, self.sys)
        self.window = lq_window_init(self.sys.lam, self.sys.mu,
                                     coeffs.alpha, coeffs.theta,
                                     coeffs.beta_next, coeffs.delta_next)
        self.coeffs = coeffs
        return coeffs

    def advance(self) -> StepCoeffs:
        """One full solver step k >= 2: reduction, bundle, substitution,
        direction update, iterate update."""
        red = self.red
        coeffs = reduction_step(red, self.sys)
        self.k = coeffs.k
        lq_step(self.window, coeffs.gamma_k, coeffs.eta_k,
                coeffs.alpha, coeffs.theta,
                coeffs.beta_next, coeffs.delta_next)
        w1, w2 = substitute_step(self.window, self.varpi,
                                 red.beta1, red.delta1)
        self._update_directions()
        self._apply_iterate_update(w1, w2)
        self.coeffs = coeffs
        self.transfer = None
        return coeffs

    def _update_directions(self):
        """Mix the provisional pair with the new basis columns through the
        trailing 4x4 of the latest rotation bundle (all updates in place)."""
        M = rotation_block(*self.window.rotations[-1])
        red = self.red
        s1, s2 = red.scratch_m1, red.scratch_m2
        _mix_columns(self.ft1x, self.ft2x, red.q_prev, M[0], M[1], M[2],
                     self.f1x, self.f2x, s1, s2)
        self.ft1x, red.scratch_m1 = s1, self.ft1x
        self.ft2x, red.scratch_m2 = s2, self.ft2x
        s1, s2 = red.scratch_n1, red.scratch_n2
        _mix_columns(self.ft1y, self.ft2y, red.u_prev, M[0], M[1], M[3],
                     self.f1y, self.f2y, s1, s2)
        self.ft1y, red.scratch_n1 = s1, self.ft1y
        self.ft2y, red.scratch_n2 = s2, self.ft2y

    def _apply_iterate_update(self, w1, w2):
        # the retired provisional buffers act as axpy scratch
        red = self.red
        np.multiply(self.f1x, w1, out=red.scratch_m1)
        self.x += red.scratch_m1
        np.multiply(self.f2x, w2, out=red.scratch_m1)
        self.x += red.scratch_m1
        np.multiply(self.f1y, w1, out=red.scratch_n1)
        self.y += red.scratch_n1
        np.multiply(self.f2y, w2, out=red.scratch_n1)
        self.y += red.scratch_n1

    def attempt_transfer(self, det_rtol: float = 1e-13) -> bool:
        """Compute the square-system iterate at the current step if it exists."""
        t = transfer_scalars(self.window, self.varpi,
                             self.red.beta1, self.red.delta1, det_rtol)
        if t is None:
            self.transfer = None
            return False
        c_k, s_k, w_odd, w_even = t
        a = c_k * w_odd - s_k * w_even
        b = s_k * w_odd + c_k * w_even
        self._ensure_c_buffers()
        red = self.red
        np.multiply(self.ft1x, a, out=self.x_c)
        np.multiply(self.ft2x, b, out=red.scratch_m1)
        self.x_c += red.scratch_m1
        self.x_c += self.x
        np.multiply(self.ft1y, a, out=self.y_c)
        np.multiply(self.ft2y, b, out=red.scratch_n1)
        self.y_c += red.scratch_n1
        self.y_c += self.y
        self.transfer = t
        return True

    # -- residual estimates -------------------------------------------------

    def _z_tail(self):
        """Last four entries of the expanded minimum-norm solution."""
        k = self.k
        w6 = np.array([self.varpi[2 * k - 5], self.varpi[2 * k - 4],
                       self.varpi[2 * k - 3], self.varpi[2 * k - 2], 0.0, 0.0])
        m2 = rotation_block(*self.window.rotations[-1])
        p6 = np.eye(6)
        p6[2:, 2:] = m2
        if k >= 3:
            m1 = np.eye(6)
            m1[:4, :4] = rotation_block(*self.window.rotations[-2])
            p6 = m1 @ p6
        zw = p6 @ w6
        return zw[2], zw[3], zw[4], zw[5]

    def estimate_residual_l(self) -> BiLQResidualEstimate:
        """Residual norm of the current minimum-norm iterate (k >= 2),
        recovered exactly from window scalars and four basis-vector norms."""
        if self.k < 2:
            raise ValueError("residual estimate needs at least one full step")
        co = self.coeffs
        lam, mu = self.sys.lam, self.sys.mu
        z3, z4, z5, z6 = self._z_tail()
        vartheta = co.beta_k * z4 + lam * z5 + co.alpha * z6
        varrho = co.delta_k * z3 + co.theta * z5 + mu * z6
        chi = co.beta_next * z6
        varsigma = co.delta_next * z5
        red = self.red
        qq = float(red.q_prev @ red.q_cur)
        uu = float(red.u_prev @ red.u_cur)
        q_part = (vartheta * red.q_prev_norm) ** 2 \
            + 2.0 * vartheta * chi * qq + (chi * red.q_norm) ** 2
        u_part = (varrho * red.u_prev_norm) ** 2 \
            + 2.0 * varrho * varsigma * uu + (varsigma * red.u_norm) ** 2
        est = float(np.sqrt(max(q_part, 0.0) + max(u_part, 0.0)))
        return BiLQResidualEstimate(vartheta, varrho, chi, varsigma, est)

    def estimate_residual_c(self) -> float:
        """Residual norm of the square-system iterate at the current step."""
        if self.transfer is None:
            raise ValueError("transfer iterate is not defined at this step")
        c_k, s_k, w_odd, w_even = self.transfer
        a = c_k * w_odd - s_k * w_even
        b = s_k * w_odd + c_k * w_even
        if self.k >= 2:
            w4 = np.array([self.varpi[2 * self.k - 3],
                           self.varpi[2 * self.k - 2], a, b])
            m2 = rotation_block(*self.window.rotations[-1])
            z_odd = float(m2[2] @ w4)
            z_even = float(m2[3] @ w4)
        else:
            z_odd, z_even = a, b
        co = self.coeffs
        chi_t = co.beta_next * z_even
        varsigma_t = co.delta_next * z_odd
        red = self.red
        return float(np.hypot(chi_t * red.q_norm, varsigma_t * red.u_norm))


def gpbilq_solve(sys: PartitionedSystem, tol: float = 1e-8,
                 maxit: int | None = None, monitor: str = "l",
                 explicit_residual: bool = False,
                 want_transfer: bool | None = None,
                 breakdown_tol: float | None = None) -> SolveResult:
    """Run the solver until the monitored residual drops below tol.

    Parameters
    ----------
    monitor : {"l", "c"}
        Which iterate drives the stopping test: the always-defined
        minimum-norm iterate ("l") or the square-system iterate ("c",
        skipped at steps where it does not exist).
    explicit_residual : bool
        Evaluate true residuals of the monitored iterate each iteration and
        stop on them (two extra operator applications per step); otherwise
        the exact closed-form estimates are used.
    want_transfer : bool or None
        Compute the square-system iterate each step.  Defaults to True when
        monitoring "c", else False.  On breakdown a final transfer is
        attempted either way, since a lucky breakdown makes it exact.

    Iteration counting follows the reduction index: iteration k=1 is the
    startup step whose minimum-norm iterate is zero.  The record starts with
    a k=0 row holding the initial residual norm.
    """
    if monitor not in ("l", "c"):
        raise ValueError("monitor must be 'l' or 'c'")
    if want_transfer is None:
        want_transfer = monitor == "c"
    if maxit is None:
        maxit = 2 * (sys.m + sys.n)
    t0 = time.perf_counter()
    record = ConvergenceRecord()
    rhs_norm = sys.rhs_norm
    record.append(0, rhs_norm, rhs_norm if explicit_residual else None,
                  elapsed=time.perf_counter() - t0)
    zero_result = SolveResult(np.zeros(sys.m), np.zeros(sys.n), 0, "",
                              rhs_norm, record)
    zero_result.x_l, zero_result.y_l = zero_result.x, zero_result.y

    init = (reduction_init(sys) if breakdown_tol is None
            else reduction_init(sys, breakdown_tol))
    if isinstance(init, BreakdownReport):
        record.finalize(BREAKDOWN)
        zero_result.reason = BREAKDOWN
        zero_result.breakdown = init
        return zero_result
    if maxit == 0:
        record.finalize(MAXIT)
        zero_result.reason = MAXIT
        return zero_result

    state = BiLQState(sys, init)
    reason = None
    res_l = rhs_norm
    res_c = None
    while True:
        if state.k == 1 and state.window is None:
            state.startup()
        else:
            state.advance()
            res_l = state.estimate_residual_l().est_norm_l
        transfer_ok = state.attempt_transfer() if want_transfer else False
        if transfer_ok:
            res_c = state.estimate_residual_c()
        if explicit_residual:
            res_l = residual_norm(sys, state.x, state.y)
            if transfer_ok:
                res_c = residual_norm(sys, state.x_c, state.y_c)
        res_mon = res_l if monitor == "l" else (res_c if transfer_ok else None)
        record.append(state.k,
                      res_mon if res_mon is not None else np.nan,
                      (res_mon if explicit_residual and res_mon is not None else None),
                      transfer_defined=transfer_ok if want_transfer else None,
                      elapsed=time.perf_counter() - t0)
        if res_mon is not None and res_mon <= tol:
            reason = CONVERGED
            break
        if state.red.breakdown is not None:
            reason = BREAKDOWN
            break
        if state.k >= maxit:
            reason = MAXIT
            break

    # A lucky breakdown makes the square-system iterate exact; try it as a
    # last resort even when it was not monitored.
    if reason == BREAKDOWN and state.attempt_transfer():
        res_c = residual_norm(sys, state.x_c, state.y_c)
        if res_c <= tol:
            reason = CONVERGED
    record.finalize(reason)

    x_c = y_c = None
    if state.transfer is not None:
        x_c, y_c = state.x_c, state.y_c
    if monitor == "c" and x_c is not None:
        x, y, final = x_c, y_c, res_c
    elif reason == CONVERGED and monitor == "l" and res_l > tol and x_c is not None:
        x, y, final = x_c, y_c, res_c  # breakdown rescue path
    else:
        x, y, final = state.x, state.y, res_l
    return SolveResult(x, y, state.k, reason, float(final), record,
                       breakdown=state.red.breakdown,
                       x_l=state.x, y_l=state.y, x_c=x_c, y_c=y_c)


def _mix_columns(a1, a2, a3, r1, r2, r3, out1, out2, stage1, stage2):
    """Four-column mix: out/stage columns are combinations of the three live
    source columns with coefficient rows r1, r2, r3 of the rotation block.
    out1 doubles as term scratch until it is written last."""
    np.multiply(a1, r1[2], out=stage1)
    np.multiply(a2, r2[2], out=out1)
    stage1 += out1
    np.multiply(a3, r3[2], out=out1)
    stage1 += out1
    np.multiply(a1, r1[3], out=stage2)
    np.multiply(a2, r2[3], out=out1)
    stage2 += out1
    np.multiply(a3, r3[3], out=out1)
    stage2 += out1
    np.multiply(a1, r1[1], out=out2)
    np.multiply(a2, r2[1], out=out1)
    out2 += out1
    np.multiply(a3, r3[1], out=out1)
    out2 += out1
    # last combination consumes a1 in place
    a1 *= r1[0]
    np.multiply(a2, r2[0], out=out1)
    out1 += a1
    np.multiply(a3, r3[0], out=a1)
    out1 += a1
