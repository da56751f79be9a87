"""
Bit-packed dense GF(2) blocks.

A :class:`VectorBlock` holds ``rows`` vectors of ``width`` bits each, stored as
a ``(rows, width // 64)`` array of ``uint64`` words.  Column ``j`` of the block
is bit ``j % 64`` of word ``j // 64`` (bit 0 is the least significant bit), so
at ``width == 64`` a row is exactly one machine word and a selection mask is a
plain integer.

:class:`SmallMat` is a ``width x width`` matrix in the same packed layout and
:class:`DiagMask` is a diagonal 0/1 matrix kept as a Python integer bit set.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

WORD = 64
_CHUNK_ROWS = 1 << 15


class DimensionMismatch(ValueError):
    pass


def _check_width(width: int) -> int:
    if width <= 0 or width % WORD:
        raise ValueError(f"block width must be a positive multiple of 64, got {width}")
    return width // WORD


def _unpack(data: np.ndarray, width: int) -> np.ndarray:
    """(rows, words) uint64 -> (rows, width) uint8 bit matrix."""
    raw = np.ascontiguousarray(data, dtype="<u8").view(np.uint8)
    return np.unpackbits(raw.reshape(data.shape[0], width // 8), axis=1, bitorder="little")


def _pack(bits: np.ndarray) -> np.ndarray:
    """(rows, width) 0/1 matrix -> (rows, width // 64) uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8) & 1
    rows, width = bits.shape
    packed = np.packbits(bits, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64).reshape(rows, width // WORD)


class VectorBlock:
    """``rows x width`` matrix over GF(2), one packed row per vector entry."""

    __slots__ = ("data", "width")

    def __init__(self, data: np.ndarray, width: int = WORD):
        words = _check_width(width)
        data = np.asarray(data, dtype=np.uint64)
        if data.ndim == 1 and words == 1:
            data = data.reshape(-1, 1)
        if data.ndim != 2 or data.shape[1] != words:
            raise DimensionMismatch(f"data shape {data.shape} does not match width {width}")
        self.data = data
        self.width = width

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def words(self) -> int:
        return self.width // WORD

    @classmethod
    def zeros(cls, rows: int, width: int = WORD) -> "VectorBlock":
        return cls(np.zeros((rows, _check_width(width)), dtype=np.uint64), width)

    @classmethod
    def random(cls, rows: int, width: int, rng) -> "VectorBlock":
        words = _check_width(width)
        return cls(rng.words(rows * words).reshape(rows, words), width)

    @classmethod
    def from_bits(cls, bits) -> "VectorBlock":
        bits = np.asarray(bits, dtype=np.uint8)
        return cls(_pack(bits), bits.shape[1])

    @classmethod
    def from_columns(cls, columns: Sequence[int], rows: int, width: int | None = None) -> "VectorBlock":
        """Build a block whose column ``j`` is the integer bit set ``columns[j]``."""
        if width is None:
            width = max(WORD, -(-len(columns) // WORD) * WORD)
        bits = np.zeros((rows, width), dtype=np.uint8)
        nbytes = (rows + 7) // 8
        for j, col in enumerate(columns):
            raw = np.frombuffer(int(col).to_bytes(nbytes, "little"), dtype=np.uint8)
            bits[:, j] = np.unpackbits(raw, bitorder="little")[:rows]
        return cls.from_bits(bits)

    def to_bits(self) -> np.ndarray:
        return _unpack(self.data, self.width)

    def to_columns(self) -> list[int]:
        """Columns as integer bit sets (bit ``r`` = entry in row ``r``)."""
        bits = self.to_bits()
        packed = np.packbits(bits, axis=0, bitorder="little")
        return [int.from_bytes(packed[:, j].tobytes(), "little") for j in range(self.width)]

    def copy(self) -> "VectorBlock":
        return VectorBlock(self.data.copy(), self.width)

    def is_zero(self) -> bool:
        return not self.data.any()

    def nonzero_columns(self) -> int:
        """Bit set of columns holding at least one 1."""
        acc = np.bitwise_or.reduce(self.data, axis=0) if self.rows else np.zeros(self.words, np.uint64)
        return sum(int(w) << (WORD * k) for k, w in enumerate(acc))

    def __xor__(self, other: "VectorBlock") -> "VectorBlock":
        return block_xor(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorBlock):
            return NotImplemented
        return self.width == other.width and np.array_equal(self.data, other.data)

    def __repr__(self) -> str:
        return f"VectorBlock(rows={self.rows}, width={self.width})"


class SmallMat:
    """Square ``width x width`` GF(2) matrix, rows packed like a VectorBlock."""

    __slots__ = ("data", "width")

    def __init__(self, data: np.ndarray, width: int = WORD):
        words = _check_width(width)
        data = np.asarray(data, dtype=np.uint64)
        if data.ndim == 1 and words == 1:
            data = data.reshape(-1, 1)
        if data.shape != (width, words):
            raise DimensionMismatch(f"data shape {data.shape} is not a {width}x{width} matrix")
        self.data = data
        self.width = width

    @classmethod
    def zeros(cls, width: int = WORD) -> "SmallMat":
        return cls(np.zeros((width, _check_width(width)), dtype=np.uint64), width)

    @classmethod
    def identity(cls, width: int = WORD) -> "SmallMat":
        return cls.from_bits(np.eye(width, dtype=np.uint8))

    @classmethod
    def from_bits(cls, bits) -> "SmallMat":
        bits = np.asarray(bits, dtype=np.uint8)
        return cls(_pack(bits), bits.shape[0])

    @classmethod
    def from_row_ints(cls, rows: Sequence[int], width: int = WORD) -> "SmallMat":
        words = _check_width(width)
        data = np.array(
            [[(r >> (WORD * k)) & 0xFFFFFFFFFFFFFFFF for k in range(words)] for r in rows],
            dtype=np.uint64,
        )
        return cls(data.reshape(width, words), width)

    def row_ints(self) -> list[int]:
        if self.width == WORD:
            return [int(w) for w in self.data[:, 0]]
        return [sum(int(w) << (WORD * k) for k, w in enumerate(row)) for row in self.data]

    def to_bits(self) -> np.ndarray:
        return _unpack(self.data, self.width)

    def is_zero(self) -> bool:
        return not self.data.any()

    def is_symmetric(self) -> bool:
        bits = self.to_bits()
        return np.array_equal(bits, bits.T)

    def copy(self) -> "SmallMat":
        return SmallMat(self.data.copy(), self.width)

    def as_block(self) -> VectorBlock:
        return VectorBlock(self.data, self.width)

    def __xor__(self, other: "SmallMat") -> "SmallMat":
        return small_add(self, other)

    def __matmul__(self, other: "SmallMat") -> "SmallMat":
        return small_mul(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SmallMat):
            return NotImplemented
        return self.width == other.width and np.array_equal(self.data, other.data)

    def __repr__(self) -> str:
        return f"SmallMat(width={self.width})"


@dataclass(frozen=True)
class DiagMask:
    """Diagonal 0/1 matrix; bit ``j`` of ``bits`` set means column ``j`` is selected."""

    bits: int
    width: int = WORD

    def __post_init__(self):
        _check_width(self.width)
        if self.bits < 0 or self.bits >> self.width:
            raise ValueError("mask has bits outside its width")

    @classmethod
    def full(cls, width: int = WORD) -> "DiagMask":
        return cls((1 << width) - 1, width)

    @classmethod
    def empty(cls, width: int = WORD) -> "DiagMask":
        return cls(0, width)

    @classmethod
    def from_indices(cls, indices: Iterable[int], width: int = WORD) -> "DiagMask":
        bits = 0
        for j in indices:
            bits |= 1 << j
        return cls(bits, width)

    def complement(self) -> "DiagMask":
        return DiagMask(self.bits ^ ((1 << self.width) - 1), self.width)

    @property
    def rank(self) -> int:
        return bin(self.bits).count("1")

    def is_zero(self) -> bool:
        return self.bits == 0

    def indices(self) -> list[int]:
        return [j for j in range(self.width) if self.bits >> j & 1]

    def words(self) -> np.ndarray:
        return np.array(
            [(self.bits >> (WORD * k)) & 0xFFFFFFFFFFFFFFFF for k in range(self.width // WORD)],
            dtype=np.uint64,
        )

    def to_small(self) -> SmallMat:
        return SmallMat.from_bits(np.diag([(self.bits >> j) & 1 for j in range(self.width)]).astype(np.uint8))

    def __and__(self, other: "DiagMask") -> "DiagMask":
        return DiagMask(self.bits & other.bits, self.width)

    def __or__(self, other: "DiagMask") -> "DiagMask":
        return DiagMask(self.bits | other.bits, self.width)


def _same_shape(a: VectorBlock, b: VectorBlock) -> None:
    if a.rows != b.rows or a.width != b.width:
        raise DimensionMismatch(f"blocks {a.rows}x{a.width} and {b.rows}x{b.width} differ in shape")


def block_xor(a: VectorBlock, b: VectorBlock) -> VectorBlock:
    _same_shape(a, b)
    return VectorBlock(a.data ^ b.data, a.width)


def inner(a: VectorBlock, b: VectorBlock) -> SmallMat:
    """``a^T b`` as a width x width matrix."""
    _same_shape(a, b)
    width = a.width
    acc = np.zeros((width, width), dtype=np.int64)
    for start in range(0, a.rows, _CHUNK_ROWS):
        sl = slice(start, start + _CHUNK_ROWS)
        abits = _unpack(a.data[sl], width).astype(np.float64)
        bbits = _unpack(b.data[sl], width).astype(np.float64)
        # float64 counts are exact below 2**53 rows per chunk
        acc ^= (abits.T @ bbits).astype(np.int64) & 1
    return SmallMat(_pack(acc.astype(np.uint8)), width)


def _combination_tables(m: SmallMat) -> np.ndarray:
    """XOR tables of shape (width // 8, 256, words) indexed by byte slices."""
    width, words = m.width, m.width // WORD
    rows = m.data.reshape(width // 8, 8, words)
    tables = np.zeros((width // 8, 256, words), dtype=np.uint64)
    for k in range(8):
        size = 1 << k
        tables[:, size : 2 * size] = tables[:, :size] ^ rows[:, k][:, None, :]
    return tables


def mul_block_small(a: VectorBlock, m: SmallMat) -> VectorBlock:
    """``a @ m`` over GF(2): row ``r`` of the result XORs the rows of ``m`` selected by row ``r`` of ``a``."""
    if a.width != m.width:
        raise DimensionMismatch(f"block width {a.width} vs matrix width {m.width}")
    tables = _combination_tables(m)
    slices = np.ascontiguousarray(a.data, dtype="<u8").view(np.uint8).reshape(a.rows, a.width // 8)
    out = np.zeros_like(a.data)
    for s in range(tables.shape[0]):
        out ^= tables[s][slices[:, s]]
    return VectorBlock(out, a.width)


def mask_block(a: VectorBlock, d: DiagMask) -> VectorBlock:
    """``a @ d``: zero the columns of ``a`` not selected by ``d``."""
    if a.width != d.width:
        raise DimensionMismatch(f"block width {a.width} vs mask width {d.width}")
    return VectorBlock(a.data & d.words()[None, :], a.width)


def small_mul(x: SmallMat, y: SmallMat) -> SmallMat:
    if x.width != y.width:
        raise DimensionMismatch(f"widths {x.width} and {y.width} differ")
    return SmallMat(mul_block_small(x.as_block(), y).data, x.width)


def small_add(x: SmallMat, y: SmallMat) -> SmallMat:
    if x.width != y.width:
        raise DimensionMismatch(f"widths {x.width} and {y.width} differ")
    return SmallMat(x.data ^ y.data, x.width)


def small_transpose(x: SmallMat) -> SmallMat:
    return SmallMat(_pack(np.ascontiguousarray(x.to_bits().T)), x.width)


def mask_apply(d: DiagMask, x: SmallMat, side: str = "left") -> SmallMat:
    """``d @ x`` (side="left") or ``x @ d`` (side="right")."""
    if d.width != x.width:
        raise DimensionMismatch(f"mask width {d.width} vs matrix width {x.width}")
    if side == "right":
        return SmallMat(x.data & d.words()[None, :], x.width)
    if side != "left":
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")
    keep = np.array([(d.bits >> j) & 1 for j in range(x.width)], dtype=bool)
    return SmallMat(np.where(keep[:, None], x.data, np.uint64(0)), x.width)


def hstack(blocks: Sequence[VectorBlock]) -> VectorBlock:
    """Concatenate blocks side by side (columns of ``blocks[0]`` first)."""
    rows = blocks[0].rows
    for b in blocks:
        if b.rows != rows:
            raise DimensionMismatch("blocks must share a row count")
    return VectorBlock(np.hstack([b.data for b in blocks]), sum(b.width for b in blocks))


def split(block: VectorBlock, width: int) -> list[VectorBlock]:
    """Inverse of :func:`hstack` for equal-width pieces."""
    words = _check_width(width)
    return [VectorBlock(block.data[:, k : k + words].copy(), width) for k in range(0, block.words, words)]


# -- VBLK file format ---------------------------------------------------------
# 16-byte header: b"VBLK", u32 rows, u32 width, u32 reserved (zero);
# then rows * width / 8 bytes, row-major, little-endian within each row.

_VBLK = struct.Struct("<4sIII")


def save_block(path, block: VectorBlock) -> None:
    with open(path, "wb") as f:
        f.write(_VBLK.pack(b"VBLK", block.rows, block.width, 0))
        f.write(np.ascontiguousarray(block.data, dtype="<u8").tobytes())


def load_block(path) -> VectorBlock:
    raw = Path(path).read_bytes()
    if len(raw) < _VBLK.size:
        raise ValueError(f"{path}: truncated block header")
    magic, rows, width, _ = _VBLK.unpack_from(raw)
    if magic != b"VBLK":
        raise ValueError(f"{path}: bad magic {magic!r}")
    _check_width(width)
    body = raw[_VBLK.size :]
    if len(body) != rows * width // 8:
        raise ValueError(f"{path}: expected {rows * width // 8} data bytes, found {len(body)}")
    data = np.frombuffer(body, dtype="<u8").astype(np.uint64).reshape(rows, width // WORD)
    return VectorBlock(data, width)
