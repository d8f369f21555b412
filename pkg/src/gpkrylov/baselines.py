"""GPMR reference solver and the dense oracles used by the property tests.

GPMR here is the long-recurrence baseline: it builds two orthonormal bases
with a simultaneous Hessenberg reduction and minimizes the true residual over
the interleaved subspace via an incrementally updated QR of the projected
matrix.  Full bases are stored; clarity and verifiability are preferred over
the constant-memory bookkeeping of the short-recurrence solvers.
"""

from __future__ import annotations

import time

import numpy as np

from .convergence import BREAKDOWN, CONVERGED, MAXIT, ConvergenceRecord, SolveResult
from .linop import PartitionedSystem, assemble_dense, residual_norm
from .rotations import plane_rotation

__all__ = [
    "HessenbergProcessState",
    "OracleWorkspace",
    "gpmr_solve",
    "oracle_minnorm",
    "oracle_lsq",
    "oracle_dense_solve",
]


class HessenbergProcessState:
    """Simultaneous orthonormal bases V (m-side) and U (n-side).

    One step extends both bases by modified Gram-Schmidt so that
    V^T A U = H and U^T B V = F hold on the accumulated prefix, with H, F
    upper Hessenberg and nonnegative subdiagonals.
    """

    def __init__(self, sys: PartitionedSystem, b0=None, c0=None):
        self.sys = sys
        b0 = sys.b if b0 is None else b0
        c0 = sys.c if c0 is None else c0
        self.beta = float(np.linalg.norm(b0))
        self.gamma = float(np.linalg.norm(c0))
        if self.beta == 0.0 or self.gamma == 0.0:
            raise ValueError("starting vectors must be nonzero")
        self.vs = [b0 / self.beta]
        self.us = [c0 / self.gamma]
        self.h_cols: list[np.ndarray] = []
        self.f_cols: list[np.ndarray] = []
        self.terminated = False

    @property
    def k(self) -> int:
        return len(self.h_cols)

    def step(self) -> bool:
        """Extend both bases by one column; False on lucky termination."""
        if self.terminated:
            raise RuntimeError("process has terminated")
        k = self.k
        w = self.sys.A.apply(self.us[k])
        z = self.sys.B.apply(self.vs[k])
        h = np.zeros(k + 2)
        f = np.zeros(k + 2)
        for i in range(k + 1):
            h[i] = self.vs[i] @ w
            w -= h[i] * self.vs[i]
            f[i] = self.us[i] @ z
            z -= f[i] * self.us[i]
        h[k + 1] = np.linalg.norm(w)
        f[k + 1] = np.linalg.norm(z)
        self.h_cols.append(h)
        self.f_cols.append(f)
        vec_scale = max(1.0, np.max(np.abs(h[:k + 1])), np.max(np.abs(f[:k + 1])))
        if h[k + 1] <= 1e-13 * vec_scale or f[k + 1] <= 1e-13 * vec_scale:
            self.terminated = True
            return False
        self.vs.append(w / h[k + 1])
        self.us.append(z / f[k + 1])
        return True

    def V(self, k: int) -> np.ndarray:
        return np.column_stack(self.vs[:k])

    def U(self, k: int) -> np.ndarray:
        return np.column_stack(self.us[:k])

    def H(self, k: int) -> np.ndarray:
        """(k+1) x k Hessenberg projection of A."""
        out = np.zeros((k + 1, k))
        for j in range(k):
            col = self.h_cols[j]
            out[:min(j + 2, k + 1), j] = col[:min(j + 2, k + 1)]
        return out

    def F(self, k: int) -> np.ndarray:
        out = np.zeros((k + 1, k))
        for j in range(k):
            col = self.f_cols[j]
            out[:min(j + 2, k + 1), j] = col[:min(j + 2, k + 1)]
        return out

    def projected(self, k: int) -> np.ndarray:
        """(2k+2) x 2k interleaved projection of the full block matrix."""
        lam, mu = self.sys.lam, self.sys.mu
        H, F = self.H(k), self.F(k)
        M = np.zeros((2 * k + 2, 2 * k))
        for i in range(k + 1):
            for j in range(k):
                if i == j:
                    M[2 * i, 2 * j] = lam
                    M[2 * i + 1, 2 * j + 1] = mu
                M[2 * i, 2 * j + 1] = H[i, j]
                M[2 * i + 1, 2 * j] = F[i, j]
        return M


class _GrowingQR:
    """Incremental QR of the interleaved projected matrix (GMRES-style).

    Columns arrive two at a time; Givens rotations are stored and replayed on
    each new column, so the minimum projected residual is available every
    step without refactorizing.
    """

    def __init__(self, rhs0: np.ndarray):
        self.r_cols: list[np.ndarray] = []
        self.rots: list[tuple[int, float, float]] = []
        self.g = rhs0.copy()

    def _apply_rots(self, col: np.ndarray) -> np.ndarray:
        for i, c, s in self.rots:
            a, b = col[i], col[i + 1]
            col[i] = c * a + s * b
            col[i + 1] = -s * a + c * b
        return col

    def push_column(self, col: np.ndarray) -> None:
        j = len(self.r_cols)
        col = self._apply_rots(col.copy())
        for i in range(len(col) - 1, j, -1):
            if col[i] == 0.0:
                continue
            c, s, r = plane_rotation(col[i - 1], col[i])
            col[i - 1], col[i] = r, 0.0
            self.rots.append((i - 1, c, s))
            a, b = self.g[i - 1], self.g[i]
            self.g[i - 1] = c * a + s * b
            self.g[i] = -s * a + c * b
        self.r_cols.append(col)

    def grow_rhs(self, extra: int) -> None:
        self.g = np.concatenate([self.g, np.zeros(extra)])

    def residual_norm(self) -> float:
        j = len(self.r_cols)
        return float(np.linalg.norm(self.g[j:]))

    def solve(self) -> np.ndarray:
        j = len(self.r_cols)
        R = np.zeros((j, j))
        for col_idx, col in enumerate(self.r_cols):
            R[:col_idx + 1, col_idx] = col[:col_idx + 1]
        z = np.zeros(j)
        for i in range(j - 1, -1, -1):
            z[i] = (self.g[i] - R[i, i + 1:] @ z[i + 1:]) / R[i, i]
        return z


def gpmr_solve(sys: PartitionedSystem, tol: float = 1e-8, maxit: int | None = None,
               restart: int | None = None, explicit_residual: bool = False,
               ) -> SolveResult:
    """Minimum-residual baseline over the simultaneous orthonormal subspace.

    Parameters
    ----------
    restart : int or None
        Restart cycle length r; None runs unrestarted.  Each restart rebuilds
        the bases from the current residual blocks.
    explicit_residual : bool
        Also evaluate the true residual of the assembled iterate each step
        (one extra pair of operator applications) and stop on it.
    """
    m, n = sys.m, sys.n
    if maxit is None:
        maxit = 2 * (m + n)
    x = np.zeros(m)
    y = np.zeros(n)
    record = ConvergenceRecord()
    t0 = time.perf_counter()
    total_k = 0
    reason = MAXIT if maxit == 0 else None
    res = sys.rhs_norm

    while reason is None:
        b0 = sys.b - (sys.lam * x + sys.A.apply(y))
        c0 = sys.c - (sys.B.apply(x) + sys.mu * y)
        nb0, nc0 = np.linalg.norm(b0), np.linalg.norm(c0)
        if nb0 == 0.0 or nc0 == 0.0:
            # one block already solved exactly; the process cannot restart
            res = float(np.hypot(nb0, nc0))
            reason = CONVERGED if res <= tol else BREAKDOWN
            break
        proc = HessenbergProcessState(sys, b0, c0)
        qr = _GrowingQR(np.array([proc.beta, proc.gamma]))
        cycle_done = False
        while not cycle_done:
            alive = proc.step()
            k = proc.k
            total_k += 1
            qr.grow_rhs(2)
            col_x, col_y = _projected_column_pair(sys, proc, k)
            qr.push_column(col_x)
            qr.push_column(col_y)
            res = qr.residual_norm()
            true_res = None
            if explicit_residual:
                xk, yk = _assemble_iterate(proc, qr, x, y)
                true_res = residual_norm(sys, xk, yk)
                res = true_res
            record.append(total_k, qr.residual_norm(), true_res,
                          elapsed=time.perf_counter() - t0)
            if res <= tol:
                reason = CONVERGED
                cycle_done = True
            elif total_k >= maxit:
                reason = MAXIT
                cycle_done = True
            elif not alive:
                # invariant subspace reached: the projected minimum is final
                reason = CONVERGED if res <= tol else BREAKDOWN
                cycle_done = True
            elif restart is not None and k >= restart:
                cycle_done = True
        x, y = _assemble_iterate(proc, qr, x, y)

    record.finalize(reason)
    final = residual_norm(sys, x, y) if explicit_residual else res
    return SolveResult(x, y, total_k, reason, float(final), record)


def _projected_column_pair(sys, proc, k):
    """Columns 2k-1, 2k of the interleaved projection (only the new pair is
    needed per step; the full matrix is rebuilt only by tests)."""
    col_x = np.zeros(2 * k + 2)
    col_x[2 * k - 2] = sys.lam
    col_x[1::2] = proc.f_cols[k - 1]
    col_y = np.zeros(2 * k + 2)
    col_y[0::2] = proc.h_cols[k - 1]
    col_y[2 * k - 1] = sys.mu
    return col_x, col_y


def _assemble_iterate(proc, qr, x0, y0):
    z = qr.solve()
    k = len(z) // 2
    x = x0 + proc.V(k) @ z[0::2]
    y = y0 + proc.U(k) @ z[1::2]
    return x, y


# -- dense oracles ----------------------------------------------------------


class OracleWorkspace:
    """Dense snapshots of a desk-scale run for brute-force verification."""

    def __init__(self, sys: PartitionedSystem, history):
        self.sys = sys
        self.history = history
        self.K = assemble_dense(sys)

    def W(self, k: int) -> np.ndarray:
        return self.history.W(k)

    def projected(self, k: int) -> np.ndarray:
        return self.history.projected(self.sys.lam, self.sys.mu, k)

    def rhs(self, k: int) -> np.ndarray:
        out = np.zeros(2 * k)
        out[0] = self.history.betas[0]
        out[1] = self.history.deltas[0]
        return out


def oracle_minnorm(H: np.ndarray, rhs: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Minimum-norm solution of a consistent underdetermined system.

    Raises when H is row-rank deficient or the system is inconsistent.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    rhs = np.asarray(rhs, dtype=float)
    z, _, rank, _ = np.linalg.lstsq(H, rhs, rcond=None)
    if rank < H.shape[0]:
        raise ValueError(f"constraint matrix is rank deficient (rank {rank} < {H.shape[0]})")
    gap = np.linalg.norm(H @ z - rhs)
    if gap > rtol * max(1.0, np.linalg.norm(rhs)):
        raise ValueError(f"constraints are inconsistent (residual {gap:.3e})")
    return z


def oracle_lsq(H: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Dense least-squares solution; raises on column-rank deficiency."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    rhs = np.asarray(rhs, dtype=float)
    z, _, rank, _ = np.linalg.lstsq(H, rhs, rcond=None)
    if rank < H.shape[1]:
        raise ValueError(f"matrix is column-rank deficient (rank {rank} < {H.shape[1]})")
    return z


def oracle_dense_solve(sys: PartitionedSystem):
    """Direct dense solution (ground truth for convergence tests)."""
    K = assemble_dense(sys)
    rhs = np.concatenate([sys.b, sys.c])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError("assembled system matrix is singular") from exc
    return sol[:sys.m], sol[sys.m:]
