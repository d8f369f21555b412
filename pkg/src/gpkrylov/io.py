"""Matrix Market ingestion, benchmark-system construction, convergence CSV.

Only real-valued matrices are supported.  Files for the named benchmark
systems are not fetched automatically: download them from the SuiteSparse
collection and point ``--matrix-dir`` (or ``matrix_dir``) at the directory
holding the ``.mtx`` files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .convergence import ConvergenceRecord
from .linop import Operator, PartitionedSystem

__all__ = [
    "MatrixMarketError",
    "read_matrix_market",
    "write_matrix_market",
    "EXPERIMENTS",
    "ExperimentSpec",
    "build_system",
    "build_experiment",
    "write_convergence_csv",
    "read_convergence_csv",
]


class MatrixMarketError(ValueError):
    """Malformed or unsupported Matrix Market content."""


def _data_lines(path):
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        header = fh.readline()
        yield header
        for line in fh:
            line = line.strip()
            if line and not line.startswith("%"):
                yield line


def read_matrix_market(path) -> sparse.csr_matrix:
    """Parse a real coordinate or array Matrix Market file into CSR.

    Symmetric and skew-symmetric files are mirrored to full storage;
    duplicate coordinates are summed; indices are converted to 0-based.
    Pattern and complex fields are rejected.
    """
    path = Path(path)
    lines = _data_lines(path)
    header = next(lines).strip().split()
    if len(header) != 5 or header[0] != "%%MatrixMarket":
        raise MatrixMarketError(f"{path}: missing %%MatrixMarket header")
    _, obj, fmt, field, symmetry = (tok.lower() for tok in header)
    if obj != "matrix":
        raise MatrixMarketError(f"{path}: unsupported object '{obj}'")
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"{path}: unsupported format '{fmt}'")
    if field == "complex":
        raise MatrixMarketError(f"{path}: complex matrices are not supported")
    if field == "pattern":
        raise MatrixMarketError(f"{path}: pattern matrices carry no values")
    if field not in ("real", "integer"):
        raise MatrixMarketError(f"{path}: unsupported field '{field}'")
    if symmetry not in ("general", "symmetric", "skew-symmetric"):
        raise MatrixMarketError(f"{path}: unsupported symmetry '{symmetry}'")

    try:
        size = next(lines).split()
    except StopIteration:
        raise MatrixMarketError(f"{path}: missing size line") from None

    if fmt == "array":
        if len(size) != 2:
            raise MatrixMarketError(f"{path}: array size line must have 2 entries")
        if symmetry != "general":
            raise MatrixMarketError(f"{path}: non-general array symmetry unsupported")
        nrows, ncols = int(size[0]), int(size[1])
        data = [float(tok) for line in lines for tok in line.split()]
        if len(data) != nrows * ncols:
            raise MatrixMarketError(f"{path}: expected {nrows * ncols} array values, "
                                    f"found {len(data)}")
        dense = np.asarray(data).reshape((ncols, nrows)).T  # column-major listing
        return sparse.csr_matrix(dense)

    if len(size) != 3:
        raise MatrixMarketError(f"{path}: coordinate size line must have 3 entries")
    nrows, ncols, nnz = int(size[0]), int(size[1]), int(size[2])
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    for idx in range(nnz):
        try:
            parts = next(lines).split()
        except StopIteration:
            raise MatrixMarketError(f"{path}: expected {nnz} entries, found {idx}") from None
        if len(parts) != 3:
            raise MatrixMarketError(f"{path}: bad entry line '{' '.join(parts)}'")
        r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
        if not (1 <= r <= nrows and 1 <= c <= ncols):
            raise MatrixMarketError(f"{path}: index ({r},{c}) out of bounds "
                                    f"for {nrows}x{ncols}")
        rows[idx], cols[idx], vals[idx] = r - 1, c - 1, v
    if symmetry in ("symmetric", "skew-symmetric"):
        off = rows != cols
        sign = -1.0 if symmetry == "skew-symmetric" else 1.0
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, sign * vals[off]]))
    mat = sparse.coo_matrix((vals, (rows, cols)), shape=(nrows, ncols))
    return mat.tocsr()  # duplicate coordinates are summed here


def write_matrix_market(mat, path) -> None:
    """Write a matrix in real general coordinate format (value text %.17g)."""
    coo = sparse.coo_matrix(mat)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r + 1} {c + 1} {v:.17g}\n")


# -- benchmark systems -------------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    """Recipe for one named benchmark system."""

    a_file: str
    b_file: str | None   # None: B = A^T of the single matrix
    transpose_a: bool
    lam: float
    mu: float


EXPERIMENTS = {
    "well1033": ExperimentSpec("well1033", "illc1033", True, 1.0, -0.1),
    "well1850": ExperimentSpec("well1850", "illc1850", True, 1.0, -0.05),
    "lp_osa_07": ExperimentSpec("lp_osa_07", None, False, 1.0, -1.0),
    "lpi_klein3": ExperimentSpec("lpi_klein3", None, False, 1.0, -1.0),
}


def build_system(A, B, lam, mu, f=None, g=None) -> PartitionedSystem:
    """Partitioned system whose exact solution is the vector of ones.

    The right-hand sides are b = lam*1 + A 1 and c = B 1 + mu*1; f and g
    default to b and c.
    """
    opA = A if isinstance(A, Operator) else Operator.from_matrix(A)
    opB = B if isinstance(B, Operator) else Operator.from_matrix(B)
    ones_m = np.ones(opA.nrows)
    ones_n = np.ones(opA.ncols)
    b = lam * ones_m + opA.apply(ones_n)
    c = opB.apply(ones_m) + mu * ones_n
    return PartitionedSystem(lam, mu, opA, opB, b, c, f, g)


def build_experiment(name: str, matrix_dir) -> PartitionedSystem:
    """Assemble one of the named benchmark systems from local .mtx files."""
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment '{name}'; "
                         f"choose from {sorted(EXPERIMENTS)}")
    spec = EXPERIMENTS[name]
    matrix_dir = Path(matrix_dir)
    a_path = matrix_dir / f"{spec.a_file}.mtx"
    if not a_path.exists():
        raise FileNotFoundError(
            f"{a_path} not found; download '{spec.a_file}' from the "
            f"SuiteSparse collection into {matrix_dir}")
    A = read_matrix_market(a_path)
    if spec.transpose_a:
        A = A.T.tocsr()
    if spec.b_file is None:
        B = A.T.tocsr()
    else:
        b_path = matrix_dir / f"{spec.b_file}.mtx"
        if not b_path.exists():
            raise FileNotFoundError(
                f"{b_path} not found; download '{spec.b_file}' from the "
                f"SuiteSparse collection into {matrix_dir}")
        B = read_matrix_market(b_path)
    if B.shape != (A.shape[1], A.shape[0]):
        raise ValueError(f"experiment '{name}': incompatible shapes "
                         f"A {A.shape} vs B {B.shape}")
    return build_system(A, B, spec.lam, spec.mu)


# -- convergence CSV ---------------------------------------------------------

_CSV_HEADER = "k,est_residual,true_residual,transfer_defined,elapsed_s"


def write_convergence_csv(record: ConvergenceRecord, path) -> None:
    """One row per iteration; terminal reason as a trailing comment line."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(_CSV_HEADER + "\n")
        for row in record.rows:
            true_s = "" if row.true_residual is None else f"{row.true_residual:.17g}"
            flag_s = "" if row.transfer_defined is None else str(int(row.transfer_defined))
            fh.write(f"{row.k},{row.est_residual:.17g},{true_s},{flag_s},"
                     f"{row.elapsed:.6g}\n")
        if record.reason is not None:
            fh.write(f"# terminated: {record.reason}\n")


def read_convergence_csv(path) -> ConvergenceRecord:
    """Inverse of write_convergence_csv (used for round-trip checks)."""
    record = ConvergenceRecord()
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != _CSV_HEADER:
            raise ValueError(f"{path}: unexpected header '{header}'")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# terminated:"):
                    record.reason = line.split(":", 1)[1].strip()
                continue
            k_s, est_s, true_s, flag_s, el_s = line.split(",")
            record.append(int(k_s), float(est_s),
                          float(true_s) if true_s else None,
                          bool(int(flag_s)) if flag_s else None,
                          float(el_s))
    return record
