"""Matrix-free operators and the 2x2 block partitioned system model.

The systems solved by this package have the form::

    [ lam*I   A  ] [x]   [b]
    [   B   mu*I ] [y] = [c]

with rectangular coupling blocks A (m x n) and B (n x m).  lam and/or mu may
be zero.  A and B only enter through their actions and the actions of their
transposes, so they are wrapped as callback operators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

__all__ = [
    "Operator",
    "PartitionedSystem",
    "apply_partitioned",
    "residual_norm",
    "assemble_dense",
    "adjoint_mismatch",
    "DENSE_GUARD",
]

# Largest m+n for which dense assembly is allowed (oracle support only).
DENSE_GUARD = 2000


class Operator:
    """Linear operator defined by matvec callbacks.

    Parameters
    ----------
    nrows, ncols : int
        Shape of the represented matrix.
    apply : callable
        Action ``x -> M @ x`` mapping length-``ncols`` vectors to
        length-``nrows`` vectors.
    apply_transpose : callable
        Action ``y -> M.T @ y``.
    """

    def __init__(self, nrows, ncols, apply, apply_transpose):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self._apply = apply
        self._apply_t = apply_transpose

    @classmethod
    def from_matrix(cls, mat) -> "Operator":
        """Wrap a dense ndarray or scipy sparse matrix (kept by reference)."""
        if sparse.issparse(mat):
            mat = mat.tocsr().astype(float)
            mat_t = mat.T.tocsr()
            return cls(mat.shape[0], mat.shape[1],
                       lambda x: mat @ x, lambda y: mat_t @ y)
        arr = np.asarray(mat, dtype=float)
        if arr.ndim != 2:
            raise ValueError("expected a 2-d matrix")
        return cls(arr.shape[0], arr.shape[1],
                   lambda x: arr @ x, lambda y: arr.T @ y)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def apply(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] != self.ncols:
            raise ValueError(f"operator is {self.nrows}x{self.ncols}, "
                             f"got input of length {x.shape[0]}")
        out = self._apply(x)
        if out.shape[0] != self.nrows:
            raise ValueError("apply callback returned a vector of wrong length")
        return out

    def apply_transpose(self, y: np.ndarray) -> np.ndarray:
        if y.shape[0] != self.nrows:
            raise ValueError(f"operator is {self.nrows}x{self.ncols}, "
                             f"got transpose input of length {y.shape[0]}")
        out = self._apply_t(y)
        if out.shape[0] != self.ncols:
            raise ValueError("apply_transpose callback returned a vector of wrong length")
        return out

    def to_dense(self, guard: int = DENSE_GUARD) -> np.ndarray:
        """Materialize the matrix column by column (desk-scale sizes only)."""
        if max(self.nrows, self.ncols) > guard:
            raise ValueError(f"operator too large to densify ({self.shape})")
        cols = np.zeros((self.nrows, self.ncols))
        e = np.zeros(self.ncols)
        for j in range(self.ncols):
            e[j] = 1.0
            cols[:, j] = self.apply(e)
            e[j] = 0.0
        return cols


def adjoint_mismatch(op: Operator, rng=None, trials: int = 3) -> float:
    """Largest relative gap between <y, A x> and <A^T y, x> on random probes."""
    rng = np.random.default_rng(rng)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(op.ncols)
        y = rng.standard_normal(op.nrows)
        lhs = float(y @ op.apply(x))
        rhs = float(op.apply_transpose(y) @ x)
        scale = max(1.0, abs(lhs), abs(rhs))
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def _as_nonzero_vector(vec, length, name):
    arr = np.ascontiguousarray(vec, dtype=float)
    if arr.shape != (length,):
        raise ValueError(f"{name} must have length {length}, got shape {arr.shape}")
    if not np.any(arr):
        raise ValueError(f"{name} must be nonzero")
    return arr


@dataclass(frozen=True)
class PartitionedSystem:
    """Immutable description of one partitioned system.

    ``f`` and ``g`` are the auxiliary starting vectors of the two-sided
    reduction; they default to ``b`` and ``c``.  All four right-hand-side
    vectors must be nonzero.
    """

    lam: float
    mu: float
    A: Operator
    B: Operator
    b: np.ndarray
    c: np.ndarray
    f: np.ndarray | None = None
    g: np.ndarray | None = None

    def __post_init__(self):
        m, n = self.A.nrows, self.A.ncols
        if self.B.shape != (n, m):
            raise ValueError(f"B must be {n}x{m} to pair with A {m}x{n}, got {self.B.shape}")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "b", _as_nonzero_vector(self.b, m, "b"))
        object.__setattr__(self, "c", _as_nonzero_vector(self.c, n, "c"))
        f = self.b.copy() if self.f is None else _as_nonzero_vector(self.f, m, "f")
        g = self.c.copy() if self.g is None else _as_nonzero_vector(self.g, n, "g")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)

    @property
    def m(self) -> int:
        return self.A.nrows

    @property
    def n(self) -> int:
        return self.A.ncols

    @property
    def rhs_norm(self) -> float:
        return float(np.hypot(np.linalg.norm(self.b), np.linalg.norm(self.c)))


def apply_partitioned(sys: PartitionedSystem, x, y):
    """Return (lam*x + A y, B x + mu*y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (sys.m,) or y.shape != (sys.n,):
        raise ValueError(f"expected x of length {sys.m} and y of length {sys.n}, "
                         f"got {x.shape} and {y.shape}")
    top = sys.A.apply(y)
    top += sys.lam * x
    bot = sys.B.apply(x)
    bot += sys.mu * y
    return top, bot


def residual_norm(sys: PartitionedSystem, x, y) -> float:
    """Euclidean norm of [b; c] - K [x; y] for the assembled block matrix K."""
    top, bot = apply_partitioned(sys, x, y)
    return float(np.hypot(np.linalg.norm(sys.b - top), np.linalg.norm(sys.c - bot)))


def assemble_dense(sys: PartitionedSystem, guard: int = DENSE_GUARD) -> np.ndarray:
    """Explicit (m+n) x (m+n) matrix [lam*I, A; B, mu*I] (oracle support)."""
    m, n = sys.m, sys.n
    if m + n > guard:
        raise ValueError(f"system too large for dense assembly (m+n={m + n} > {guard})")
    K = np.zeros((m + n, m + n))
    K[:m, :m] = sys.lam * np.eye(m)
    K[m:, m:] = sys.mu * np.eye(n)
    K[:m, m:] = sys.A.to_dense(guard)
    K[m:, :m] = sys.B.to_dense(guard)
    return K
