"""
Selection of the orthogonalized columns at each block Lanczos step.

Given the symmetric Gram matrix ``T = v^T A v`` of the current block, pick a
set ``S`` of ``rank(T)`` independent columns.  For a symmetric matrix the
principal submatrix ``T[S, S]`` on any such set is nonsingular, so its inverse
embedded in an otherwise zero matrix is the partial inverse ``winv``.

Columns left out at the previous step are examined first so that they get
selected now whenever they are independent.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bitblock import DiagMask, SmallMat
from . import gf2dense


class PivotFailure(ArithmeticError):
    pass


class PriorityViolation(PivotFailure):
    def __init__(self, missing: DiagMask, rank: int):
        self.missing = missing
        self.rank = rank
        super().__init__(
            f"{missing.rank} column(s) left unselected twice in a row "
            f"(indices {missing.indices()[:8]}{'...' if missing.rank > 8 else ''}); rank {rank}"
        )


class NonSymmetricInput(PivotFailure):
    pass


@dataclass(frozen=True)
class PivotResult:
    d: DiagMask
    winv: SmallMat

    @property
    def rank(self) -> int:
        return self.d.rank


def pivot_order(priority: DiagMask) -> list[int]:
    width = priority.width
    first = [j for j in range(width) if priority.bits >> j & 1]
    rest = [j for j in range(width) if not priority.bits >> j & 1]
    return first + rest


def choose_pivots(vtav: SmallMat, priority: DiagMask | None = None, *, strict: bool = True) -> PivotResult:
    """Selection mask and partial inverse of a symmetric Gram matrix.

    With ``strict`` a :class:`PriorityViolation` is raised when some index of
    ``priority`` cannot be selected, unless the matrix is zero (which is the
    termination signal, returned as an empty mask).
    """
    width = vtav.width
    if priority is None:
        priority = DiagMask.empty(width)
    rows = vtav.row_ints()
    if gf2dense.transpose(rows, width) != rows:
        raise NonSymmetricInput("v^T A v is not symmetric")

    order = pivot_order(priority)
    basis = gf2dense.Basis()
    selected = sorted(j for j in order if basis.add(rows[j]))
    d = DiagMask.from_indices(selected, width)

    if not selected:
        return PivotResult(d, SmallMat.zeros(width))
    missing = priority & d.complement()
    if strict and not missing.is_zero():
        raise PriorityViolation(missing, len(selected))

    # compress T[S, S] to an r x r matrix, invert, scatter back
    r = len(selected)
    sub = []
    for s in selected:
        row = rows[s]
        sub.append(sum(1 << k for k, t in enumerate(selected) if row >> t & 1))
    inv = gf2dense.inverse(sub, r)
    if inv is None:
        # cannot happen for a symmetric input with independent columns S
        raise PivotFailure("principal minor on the selected columns is singular")
    winv_rows = [0] * width
    for k, s in enumerate(selected):
        row = inv[k]
        winv_rows[s] = sum(1 << selected[t] for t in range(r) if row >> t & 1)
    return PivotResult(d, SmallMat.from_row_ints(winv_rows, width))
