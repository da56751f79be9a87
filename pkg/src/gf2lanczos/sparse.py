"""
Sparse GF(2) matrices in CSR form and the black-box products built on them.

Rows of ``M`` are relations; a left kernel vector ``x`` (``x^T M = 0``) selects
a set of relations whose valuations are all even.  The solver never touches
``M`` directly, only the two half products

    spmv_left:  u^T = v^T M     (n1-row block -> n2-row block)
    spmv_right: v   = M u       (n2-row block -> n1-row block)

and their composition ``A = M M^T``.

Two file formats are supported:

* ASCII coordinate: header ``n1 n2 nnz`` then ``nnz`` lines ``row col``
  (0-based, sorted by row then strictly increasing column).
* Binary CSR: ``b"SMF2"``, three u64 (n1, n2, nnz), ``row_ptr`` as
  u64[n1 + 1], ``col_idx`` as u32[nnz]; all little-endian.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bitblock import DimensionMismatch, VectorBlock
from .rng import TAG_MATRIX, SplitMix64, derive_seed

_SMF2 = struct.Struct("<4sQQQ")
BINARY_SUFFIXES = (".smf2", ".smf", ".bin")
_GEN_CHUNK = 1 << 16


class MatrixFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    n1: int
    n2: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    _transpose: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        object.__setattr__(self, "row_ptr", row_ptr)
        object.__setattr__(self, "col_idx", col_idx)
        validate(self)

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    @classmethod
    def from_dense(cls, dense) -> "SparseMatrix":
        dense = np.asarray(dense, dtype=np.uint8) & 1
        n1, n2 = dense.shape
        rows, cols = np.nonzero(dense)
        row_ptr = np.zeros(n1 + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n1), out=row_ptr[1:])
        return cls(n1, n2, row_ptr, cols)

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(n, n, np.arange(n + 1), np.arange(n))

    @classmethod
    def zero(cls, n1: int, n2: int) -> "SparseMatrix":
        return cls(n1, n2, np.zeros(n1 + 1, dtype=np.int64), np.zeros(0, dtype=np.int64))

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n1, self.n2), dtype=np.uint8)
        rows = np.repeat(np.arange(self.n1), np.diff(self.row_ptr))
        dense[rows, self.col_idx] = 1
        return dense

    def row(self, r: int) -> np.ndarray:
        return self.col_idx[self.row_ptr[r] : self.row_ptr[r + 1]]

    def transpose(self) -> "SparseMatrix":
        if not self._transpose:
            rows = np.repeat(np.arange(self.n1, dtype=np.int64), np.diff(self.row_ptr))
            order = np.argsort(self.col_idx, kind="stable")
            ptr = np.zeros(self.n2 + 1, dtype=np.int64)
            np.cumsum(np.bincount(self.col_idx, minlength=self.n2), out=ptr[1:])
            self._transpose.append(SparseMatrix(self.n2, self.n1, ptr, rows[order]))
        return self._transpose[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.n1 == other.n1
            and self.n2 == other.n2
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
        )


def validate(m: SparseMatrix) -> None:
    row_ptr, col_idx = m.row_ptr, m.col_idx
    if m.n1 < 0 or m.n2 < 0:
        raise MatrixFormatError("negative dimension")
    if row_ptr.shape != (m.n1 + 1,) or row_ptr[0] != 0:
        raise MatrixFormatError("row_ptr must have n1 + 1 entries starting at 0")
    if np.any(np.diff(row_ptr) < 0):
        raise MatrixFormatError("row_ptr is not nondecreasing")
    if row_ptr[-1] != col_idx.size:
        raise MatrixFormatError(f"row_ptr ends at {row_ptr[-1]} but there are {col_idx.size} indices")
    if col_idx.size:
        if col_idx.min() < 0 or col_idx.max() >= m.n2:
            raise MatrixFormatError("column index out of range")
        steps = np.diff(col_idx)
        row_starts = row_ptr[1:-1]
        inside = np.ones(steps.size, dtype=bool)
        # a step that crosses into a new row is allowed to go down
        inside[row_starts[(row_starts > 0) & (row_starts < col_idx.size)] - 1] = False
        if np.any(steps[inside] <= 0):
            raise MatrixFormatError("column indices not strictly increasing within a row")


def _gather_xor(m: SparseMatrix, x: VectorBlock) -> VectorBlock:
    out = np.zeros((m.n1, x.words), dtype=np.uint64)
    if m.nnz:
        gathered = x.data[m.col_idx]
        starts = m.row_ptr[:-1]
        nonempty = starts < m.row_ptr[1:]
        out[nonempty] = np.bitwise_xor.reduceat(gathered, starts[nonempty], axis=0)
    return VectorBlock(out, x.width)


def spmv_left(m: SparseMatrix, v: VectorBlock) -> VectorBlock:
    """``(v^T M)^T``: row ``c`` is the XOR of the rows ``r`` of ``v`` with ``M[r, c] = 1``."""
    if v.rows != m.n1:
        raise DimensionMismatch(f"block has {v.rows} rows, matrix has {m.n1}")
    return _gather_xor(m.transpose(), v)


def spmv_right(m: SparseMatrix, u: VectorBlock) -> VectorBlock:
    """``M u``: row ``r`` is the XOR of the rows of ``u`` indexed by row ``r`` of ``M``."""
    if u.rows != m.n2:
        raise DimensionMismatch(f"block has {u.rows} rows, matrix has {m.n2} columns")
    return _gather_xor(m, u)


class AOperator:
    """The symmetric operator ``A = M M^T`` applied as two half products.

    Counts sparse products in ``spmv_count``; one instance should not be
    shared between threads.
    """

    def __init__(self, m: SparseMatrix):
        self.matrix = m
        self.n = m.n1
        self.spmv_count = 0
        m.transpose()

    def apply(self, v: VectorBlock) -> VectorBlock:
        return apply_A(self, v)

    __call__ = apply


def apply_A(op: AOperator, v: VectorBlock) -> VectorBlock:
    u = spmv_left(op.matrix, v)
    out = spmv_right(op.matrix, u)
    op.spmv_count += 2
    return out


# -- files --------------------------------------------------------------------


def load_matrix(path) -> SparseMatrix:
    raw = Path(path).read_bytes()
    if raw[:4] == b"SMF2":
        return _parse_binary(raw, path)
    return _parse_ascii(raw.decode("ascii"), path)


def _parse_binary(raw: bytes, path) -> SparseMatrix:
    if len(raw) < _SMF2.size:
        raise MatrixFormatError(f"{path}: truncated header")
    _, n1, n2, nnz = _SMF2.unpack_from(raw)
    expected = _SMF2.size + 8 * (n1 + 1) + 4 * nnz
    if len(raw) != expected:
        raise MatrixFormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    off = _SMF2.size
    row_ptr = np.frombuffer(raw, dtype="<u8", count=n1 + 1, offset=off).astype(np.int64)
    col_idx = np.frombuffer(raw, dtype="<u4", count=nnz, offset=off + 8 * (n1 + 1)).astype(np.int64)
    if row_ptr[-1] != nnz:
        raise MatrixFormatError(f"{path}: row_ptr does not end at nnz")
    return SparseMatrix(n1, n2, row_ptr, col_idx)


def _parse_ascii(text: str, path) -> SparseMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise MatrixFormatError(f"{path}: empty file")
    try:
        n1, n2, nnz = (int(t) for t in lines[0].split())
    except ValueError:
        raise MatrixFormatError(f"{path}: malformed header {lines[0]!r}") from None
    if n1 < 0 or n2 < 0 or nnz < 0:
        raise MatrixFormatError(f"{path}: negative value in header")
    if len(lines) - 1 != nnz:
        raise MatrixFormatError(f"{path}: header announces {nnz} entries, found {len(lines) - 1}")
    try:
        entries = np.array([[int(t) for t in ln.split()] for ln in lines[1:]], dtype=np.int64).reshape(nnz, 2)
    except ValueError:
        raise MatrixFormatError(f"{path}: malformed entry line") from None
    rows, cols = entries[:, 0], entries[:, 1]
    if nnz and (rows.min() < 0 or rows.max() >= n1 or cols.min() < 0 or cols.max() >= n2):
        raise MatrixFormatError(f"{path}: index out of range")
    if nnz > 1:
        dr = np.diff(rows)
        if np.any(dr < 0):
            raise MatrixFormatError(f"{path}: rows not sorted")
        same = dr == 0
        dc = np.diff(cols)
        if np.any(dc[same] == 0):
            raise MatrixFormatError(f"{path}: duplicate entry")
        if np.any(dc[same] < 0):
            raise MatrixFormatError(f"{path}: columns not sorted within a row")
    row_ptr = np.zeros(n1 + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n1), out=row_ptr[1:])
    return SparseMatrix(n1, n2, row_ptr, cols)


def save_matrix(path, m: SparseMatrix, fmt: str | None = None) -> None:
    """Write ``m``; ``fmt`` is "ascii" or "binary", else chosen from the file suffix."""
    if fmt is None:
        fmt = "binary" if Path(path).suffix.lower() in BINARY_SUFFIXES else "ascii"
    if fmt == "binary":
        if m.n2 > 1 << 32:
            raise MatrixFormatError("binary format stores u32 column indices")
        with open(path, "wb") as f:
            f.write(_SMF2.pack(b"SMF2", m.n1, m.n2, m.nnz))
            f.write(m.row_ptr.astype("<u8").tobytes())
            f.write(m.col_idx.astype("<u4").tobytes())
    elif fmt == "ascii":
        rows = np.repeat(np.arange(m.n1), np.diff(m.row_ptr))
        with open(path, "w") as f:
            f.write(f"{m.n1} {m.n2} {m.nnz}\n")
            f.writelines(f"{r} {c}\n" for r, c in zip(rows.tolist(), m.col_idx.tolist()))
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")


# -- generation ---------------------------------------------------------------


def gen_random(n1: int, n2: int, row_weight: int, seed: int) -> SparseMatrix:
    """Random matrix with exactly ``row_weight`` distinct columns per row.

    Each row is sampled with Floyd's algorithm; rows are processed in chunks
    of 65536 and, within a chunk, one stream word is drawn per row for each
    of the ``row_weight`` rounds.
    """
    if row_weight > n2:
        raise ValueError(f"row weight {row_weight} exceeds column count {n2}")
    if row_weight < 0:
        raise ValueError("row weight must be nonnegative")
    rng = SplitMix64(derive_seed(seed, TAG_MATRIX))
    cols = np.zeros((n1, row_weight), dtype=np.int64)
    for start in range(0, n1, _GEN_CHUNK):
        chunk = cols[start : start + _GEN_CHUNK]
        rows = chunk.shape[0]
        for k, j in enumerate(range(n2 - row_weight, n2)):
            t = rng.below(np.full(rows, j + 1, dtype=np.uint64)).astype(np.int64)
            seen = (chunk[:, :k] == t[:, None]).any(axis=1)
            chunk[:, k] = np.where(seen, j, t)
    cols.sort(axis=1)
    row_ptr = np.arange(n1 + 1, dtype=np.int64) * row_weight
    return SparseMatrix(n1, n2, row_ptr, cols.reshape(-1))
