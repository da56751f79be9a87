"""
Simulated d x d mesh for the product by ``A = M M^T``.

Worker ``(i, j)`` holds the sub-block of ``M`` at grid position ``(i, j)`` (of
size ``n1/d x n2/d``) and owns

* rows ``[(d*i + j) * n1/d^2, ... + n1/d^2)`` of every n1-row block,
* rows ``[(d*j + i) * n2/d^2, ... + n2/d^2)`` of every n2-row block.

The owned n1 fragments of mesh row ``i`` tile row block ``i`` of ``M``, and
the owned n2 fragments of mesh column ``j`` tile column block ``j``.  One
application of ``A`` is

1. ``u_j <- sum_i M_ij^T v_i``: local product, then all-reduce over mesh
   column ``j``;
2. ``v_i <- sum_j M_ij u_j``: local product, then all-reduce over mesh row
   ``i``.

Each all-reduce is a reduce-scatter (every worker XORs the partial results
for the fragment it owns) followed by an all-gather (every worker of the
group collects all reduced fragments).  Workers are threads; the shared
exchange buffers stand in for messages.  No load balancing is attempted: rows
and columns keep their original order.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bitblock import VectorBlock
from .sparse import SparseMatrix, spmv_left, spmv_right


BARRIERS_PER_ALL_REDUCE = 2


class LayoutMismatch(ValueError):
    pass


def _round_up(n: int, m: int) -> int:
    return -(-n // m) * m


@dataclass(frozen=True)
class MeshLayout:
    d: int
    n1: int
    n2: int
    n1_padded: int
    n2_padded: int

    @property
    def workers(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.d) for j in range(self.d)]

    @property
    def n1_fragment(self) -> int:
        return self.n1_padded // self.d**2

    @property
    def n2_fragment(self) -> int:
        return self.n2_padded // self.d**2

    @property
    def row_block(self) -> int:
        return self.n1_padded // self.d

    @property
    def col_block(self) -> int:
        return self.n2_padded // self.d

    def n1_rows(self, i: int, j: int) -> range:
        x = (self.d * i + j) * self.n1_fragment
        return range(x, x + self.n1_fragment)

    def n2_rows(self, i: int, j: int) -> range:
        x = (self.d * j + i) * self.n2_fragment
        return range(x, x + self.n2_fragment)

    def matrix_block(self, i: int, j: int) -> tuple[range, range]:
        return (
            range(i * self.row_block, (i + 1) * self.row_block),
            range(j * self.col_block, (j + 1) * self.col_block),
        )


def plan_layout(n1: int, n2: int, d: int) -> MeshLayout:
    if d < 1:
        raise ValueError("mesh side must be at least 1")
    q = d * d
    return MeshLayout(d, n1, n2, _round_up(max(n1, 1), q), _round_up(max(n2, 1), q))


@dataclass
class PhaseStats:
    phase: int
    group_rows: int
    width: int
    messages: int
    bits: int
    barriers: int


@dataclass
class CommStats:
    """Communication accounting, one entry per all-reduce phase."""

    phases: list[tuple[int, PhaseStats]] = field(default_factory=list)

    def add(self, step: int, ph: PhaseStats) -> None:
        self.phases.append((step, ph))

    @property
    def total_bits(self) -> int:
        return sum(ph.bits for _, ph in self.phases)

    @property
    def total_messages(self) -> int:
        return sum(ph.messages for _, ph in self.phases)

    def lines(self) -> list[str]:
        return [f"step={s} phase={ph.phase} bits={ph.bits} msgs={ph.messages}" for s, ph in self.phases]

    def to_text(self) -> str:
        return "".join(line + "\n" for line in self.lines())


def _submatrix(m: SparseMatrix, rows: range, cols: range) -> SparseMatrix:
    """Local CSR for ``m[rows, cols]``, with padding rows/columns left empty."""
    r0, r1 = rows.start, min(rows.stop, m.n1)
    counts = np.zeros(len(rows), dtype=np.int64)
    pieces = []
    for k, r in enumerate(range(r0, max(r0, r1))):
        row = m.row(r)
        sel = row[(row >= cols.start) & (row < cols.stop)] - cols.start
        counts[k] = sel.size
        pieces.append(sel)
    row_ptr = np.zeros(len(rows) + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    col_idx = np.concatenate(pieces) if pieces else np.zeros(0, dtype=np.int64)
    return SparseMatrix(len(rows), len(cols), row_ptr, col_idx)


def distribute_matrix(layout: MeshLayout, m: SparseMatrix) -> dict[tuple[int, int], SparseMatrix]:
    if (m.n1, m.n2) != (layout.n1, layout.n2):
        raise LayoutMismatch(f"matrix is {m.n1}x{m.n2}, layout expects {layout.n1}x{layout.n2}")
    return {(i, j): _submatrix(m, *layout.matrix_block(i, j)) for i, j in layout.workers}


def scatter_block(layout: MeshLayout, v: VectorBlock) -> dict[tuple[int, int], VectorBlock]:
    """Give each worker the (zero padded) row block of its mesh row."""
    if v.rows != layout.n1:
        raise LayoutMismatch(f"block has {v.rows} rows, layout expects {layout.n1}")
    padded = np.zeros((layout.n1_padded, v.words), dtype=np.uint64)
    padded[: v.rows] = v.data
    R = layout.row_block
    return {(i, j): VectorBlock(padded[i * R : (i + 1) * R].copy(), v.width) for i, j in layout.workers}


def gather_block(layout: MeshLayout, dist: dict[tuple[int, int], VectorBlock]) -> VectorBlock:
    """Assemble the global block from the fragments each worker owns."""
    width = next(iter(dist.values())).width
    out = np.zeros((layout.n1_padded, width // 64), dtype=np.uint64)
    R = layout.row_block
    for (i, j), local in dist.items():
        rows = layout.n1_rows(i, j)
        out[rows.start : rows.stop] = local.data[rows.start - i * R : rows.stop - i * R]
    return VectorBlock(out[: layout.n1], width)


class _AllReduce:
    """Reduce-scatter then all-gather of packed rows among one group of workers."""

    def __init__(self, size: int):
        self.partials: list[np.ndarray | None] = [None] * size
        self.reduced: list[np.ndarray | None] = [None] * size


def mesh_apply_A(layout: MeshLayout, mdist, vdist, stats: CommStats | None = None, step: int = 0):
    """One product by ``M M^T`` on the mesh; returns the new distributed block and the stats."""
    d = layout.d
    if set(mdist) != set(layout.workers) or set(vdist) != set(layout.workers):
        raise LayoutMismatch("distribution does not cover the mesh")
    width = next(iter(vdist.values())).width
    for (i, j), local in vdist.items():
        if local.rows != layout.row_block or local.width != width:
            raise LayoutMismatch(f"worker {(i, j)} holds a {local.rows}-row block, expected {layout.row_block}")
    stats = stats if stats is not None else CommStats()

    q = d * d
    barrier = threading.Barrier(q)
    cols = [_AllReduce(d) for _ in range(d)]  # mesh column j: members indexed by i
    rows = [_AllReduce(d) for _ in range(d)]  # mesh row i: members indexed by j
    result: dict[tuple[int, int], VectorBlock] = {}

    def all_reduce(group: _AllReduce, me: int, partial: np.ndarray, frag: int) -> np.ndarray:
        group.partials[me] = partial
        barrier.wait()
        lo = me * frag
        acc = group.partials[me][lo : lo + frag].copy()
        for k in range(d):
            if k != me:
                acc ^= group.partials[k][lo : lo + frag]
        group.reduced[me] = acc
        barrier.wait()
        return np.concatenate(group.reduced, axis=0)

    def worker(i: int, j: int) -> None:
        local_m = mdist[(i, j)]
        v_i = vdist[(i, j)]
        # phase 1: partial u for column block j, reduced down mesh column j
        part_u = spmv_left(local_m, v_i).data
        u_j = all_reduce(cols[j], i, part_u, layout.n2_fragment)
        # phase 2: partial v for row block i, reduced along mesh row i
        part_v = spmv_right(local_m, VectorBlock(u_j, width)).data
        v_new = all_reduce(rows[i], j, part_v, layout.n1_fragment)
        result[(i, j)] = VectorBlock(v_new, width)

    if q == 1:
        worker(0, 0)
    else:
        with ThreadPoolExecutor(max_workers=q) as pool:
            for fut in [pool.submit(worker, i, j) for i, j in layout.workers]:
                fut.result()

    for phase, frag, group_rows in ((1, layout.n2_fragment, layout.col_block), (2, layout.n1_fragment, layout.row_block)):
        # every worker sends d - 1 fragments in each half of the all-reduce
        messages = q * 2 * (d - 1)
        stats.add(step, PhaseStats(phase, group_rows, width, messages, messages * frag * width, BARRIERS_PER_ALL_REDUCE))
    return result, stats


class MeshOperator:
    """Black-box ``A = M M^T`` evaluated on a simulated d x d mesh."""

    def __init__(self, m: SparseMatrix, d: int):
        self.matrix = m
        self.layout = plan_layout(m.n1, m.n2, d)
        self.mdist = distribute_matrix(self.layout, m)
        self.stats = CommStats()
        self.applications = 0
        self.spmv_count = 0

    def apply(self, v: VectorBlock) -> VectorBlock:
        dist = scatter_block(self.layout, v)
        out, _ = mesh_apply_A(self.layout, self.mdist, dist, self.stats, self.applications)
        self.applications += 1
        self.spmv_count += 2
        return gather_block(self.layout, out)

    __call__ = apply
