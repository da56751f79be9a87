"""
Block Lanczos over GF(2) with the two-block (v, p) recurrence.

Each step, starting from the block ``v_i`` and the accumulator ``p_i``:

    T  = v_i^T A v_i,   U = v_i^T A^2 v_i        (one application of A)
    d_i, winv_i        = choose_pivots(T, priority = 1 - d_{i-1})
    c                  = winv_i (U d_i + T (1 - d_i))
    v_{i+1}            = A v_i d_i + v_i (1 - d_i) + v_i c + p_i T d_i
    p_{i+1}            = v_i winv_i + p_i (1 - d_i)

and the run stops when ``d_m = 0`` (``v_m^T A v_m = 0``).  Only ``v``, ``p``,
the start block and the solution accumulator are kept; the inner products
``v_0^T v_i`` and ``v_0^T p_i`` needed for the online solution evolve through
the 2n x 2n transition matrix

    S_i = [[(1 - d_i) + c,  winv_i   ],
           [T d_i,          1 - d_i  ]]

(signs vanish in characteristic 2).
"""

from __future__ import annotations

import enum
import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import gf2dense
from .bitblock import (
    DiagMask,
    SmallMat,
    VectorBlock,
    hstack,
    inner,
    mask_apply,
    mask_block,
    mul_block_small,
    small_mul,
    small_transpose,
)
from .pivoting import PivotFailure, PivotResult, choose_pivots
from .rng import TAG_AUDIT, TAG_RHS_FILL, TAG_START_BLOCK, SplitMix64, derive_seed
from .sparse import AOperator, SparseMatrix, spmv_left

logger = logging.getLogger(__name__)

RANK_DEFECT = 0.764
SHADOW_MAX_ROWS = 512


class Status(enum.Enum):
    SUCCESS = "Success"
    PIVOT_FAILURE = "PivotFailure"
    ITERATION_CAP_EXCEEDED = "IterationCapExceeded"
    EMPTY_KERNEL = "EmptyKernel"


class VerificationError(AssertionError):
    pass


class ResidualNotInSpan(RuntimeError):
    """``A x - v_0`` has a component outside the Krylov space; indicates a bug."""


class IterationCapExceeded(RuntimeError):
    pass


def expected_iterations(N: int, n: int) -> int:
    if n <= 1:
        raise ValueError("block width must exceed 1")
    return math.ceil(N / (n - RANK_DEFECT))


def default_max_iters(N: int, n: int) -> int:
    return expected_iterations(N, n) + max(32, N // (10 * n))


@dataclass
class SolverConfig:
    width: int = 64
    verify_level: int = 0
    max_iters: int | None = None
    # abort when a column skipped at the previous step cannot be selected
    strict_priority: bool = False
    audit_checkpoints: int = 4

    def __post_init__(self):
        if self.width <= 0 or self.width % 64:
            raise ValueError("width must be a positive multiple of 64")
        if self.verify_level not in (0, 1, 2):
            raise ValueError("verify_level must be 0, 1 or 2")


@dataclass
class StepOutput:
    d: DiagMask
    winv: SmallMat
    vtav: SmallMat
    vtaav: SmallMat
    terminated: bool


@dataclass
class StepRecord:
    iter: int
    rank: int
    priority_misses: int
    seconds: float


class CountingOperator:
    """Wraps a black-box ``A`` and counts sparse products (two per application)."""

    def __init__(self, apply: Callable[[VectorBlock], VectorBlock], spmv_per_apply: int = 2):
        self._apply = apply
        self.spmv_per_apply = spmv_per_apply
        self.applications = 0

    @property
    def spmv_count(self) -> int:
        return self.applications * self.spmv_per_apply

    def __call__(self, v: VectorBlock) -> VectorBlock:
        self.applications += 1
        return self._apply(v)


def _as_operator(A) -> CountingOperator:
    if isinstance(A, CountingOperator):
        return A
    if isinstance(A, AOperator):
        return CountingOperator(A.apply)
    if hasattr(A, "apply"):
        return CountingOperator(A.apply)
    return CountingOperator(A)


class IterationState:
    """Everything carried from one step to the next."""

    def __init__(self, v0: VectorBlock, config: SolverConfig, seed: int = 0):
        n = v0.width
        self.config = config
        self.v0 = v0
        self.v = v0.copy()
        self.p = VectorBlock.zeros(v0.rows, n)
        self.x = VectorBlock.zeros(v0.rows, n)
        self.d_prev = DiagMask.full(n)
        self.iter = 0
        self.acc_vv = inner(v0, v0)
        self.acc_vp = SmallMat.zeros(n)
        # columns of v_0 not yet inside <w_0, ..., w_{i-1}>; while nonempty,
        # v_0^T A v_i d_i may be nonzero and must be added to the accumulator
        self.pending = DiagMask.full(n)
        self.last_Av: VectorBlock | None = None
        self.terminated = False
        self.telemetry: list[StepRecord] = []
        self.audit = _Audit(v0.rows, config, seed) if config.verify_level >= 2 else None

    @property
    def rows(self) -> int:
        return self.v.rows

    @property
    def width(self) -> int:
        return self.v.width


def transition_matrix(d: DiagMask, winv: SmallMat, vtav: SmallMat, c: SmallMat) -> list[int]:
    """The 2n x 2n transition matrix as row bit sets (left half = v part)."""
    n = d.width
    nd = d.complement()
    top_left = (c ^ nd.to_small()).row_ints()
    top_right = winv.row_ints()
    bottom_left = mask_apply(d, vtav, "right").row_ints()
    bottom_right = nd.to_small().row_ints()
    return [top_left[r] | top_right[r] << n for r in range(n)] + [
        bottom_left[r] | bottom_right[r] << n for r in range(n)
    ]


def _check_pivot_contract(piv: PivotResult, vtav: SmallMat) -> None:
    d, winv = piv.d, piv.winv
    dm = d.to_small()
    if mask_apply(d, mask_apply(d, winv, "right"), "left") != winv:
        raise VerificationError("winv has entries outside the selected rows/columns")
    if not winv.is_symmetric():
        raise VerificationError("winv is not symmetric")
    if small_mul(small_mul(winv, vtav), dm) != dm:
        raise VerificationError("winv (v^T A v) d != d")
    if small_mul(small_mul(dm, vtav), winv) != dm:
        raise VerificationError("d (v^T A v) winv != d")
    minor = mask_apply(d, mask_apply(d, vtav, "right"), "left")
    if gf2dense.rank(minor.row_ints()) != d.rank:
        raise VerificationError("principal minor on the selected columns is singular")


def step(state: IterationState, A) -> StepOutput:
    """Advance ``state`` by one block Lanczos step (one application of ``A``)."""
    if state.terminated:
        raise RuntimeError("iteration already terminated")
    t0 = time.perf_counter()
    cfg = state.config
    v, p = state.v, state.p
    n = v.width

    Av = A(v)
    if Av.rows != v.rows or Av.width != n:
        raise ValueError("operator returned a block of the wrong shape")
    vtav = inner(v, Av)
    vtaav = inner(Av, Av)
    if cfg.verify_level >= 1 and not (vtav.is_symmetric() and vtaav.is_symmetric()):
        raise VerificationError("Gram matrices are not symmetric; is the operator symmetric?")

    priority = state.d_prev.complement()
    piv = choose_pivots(vtav, priority, strict=cfg.strict_priority)
    d, winv = piv.d, piv.winv
    misses = (priority & d.complement()).rank if not d.is_zero() else 0

    if state.audit is not None:
        state.audit.check_orthogonality(state.iter, Av)

    if d.is_zero():
        state.terminated = True
        state.last_Av = Av
        state.telemetry.append(StepRecord(state.iter, 0, 0, time.perf_counter() - t0))
        state.iter += 1
        return StepOutput(d, winv, vtav, vtaav, True)

    if cfg.verify_level >= 1:
        _check_pivot_contract(piv, vtav)

    nd = d.complement()
    c = small_mul(winv, mask_apply(d, vtaav, "right") ^ mask_apply(nd, vtav, "right"))
    vtav_d = mask_apply(d, vtav, "right")

    # x += v_i winv_i v_i^T v_0
    state.x = state.x ^ mul_block_small(v, small_mul(winv, small_transpose(state.acc_vv)))

    v_next = mask_block(Av, d) ^ mask_block(v, nd) ^ mul_block_small(v, c) ^ mul_block_small(p, vtav_d)
    p_next = mul_block_small(v, winv) ^ mask_block(p, nd)

    if state.audit is not None:
        state.audit.check_step(state, Av, d, winv, vtav, c, p)

    # (v0^T v | v0^T p) <- (v0^T v | v0^T p) S_i  + (v0^T A v_i d_i | 0),
    # the last term vanishing once every column of v_0 has been selected
    acc_vv, acc_vp = state.acc_vv, state.acc_vp
    new_vv = small_mul(acc_vv, c ^ nd.to_small()) ^ small_mul(acc_vp, vtav_d)
    new_vp = small_mul(acc_vv, winv) ^ mask_apply(nd, acc_vp, "right")
    if not state.pending.is_zero():
        new_vv = new_vv ^ mask_apply(d, inner(state.v0, Av), "right")
        state.pending = state.pending & nd
    state.acc_vv, state.acc_vp = new_vv, new_vp

    if state.audit is not None:
        state.audit.check_accumulators(state, v_next, p_next)

    state.v, state.p = v_next, p_next
    state.d_prev = d
    state.telemetry.append(StepRecord(state.iter, d.rank, misses, time.perf_counter() - t0))
    state.iter += 1
    return StepOutput(d, winv, vtav, vtaav, False)


def run(state: IterationState, A, max_iters: int) -> None:
    """Iterate until termination; raises IterationCapExceeded past ``max_iters`` steps."""
    while not state.terminated:
        if state.iter >= max_iters:
            raise IterationCapExceeded(f"no termination after {state.iter} steps")
        step(state, A)
        if state.iter % 50 == 0:
            logger.info("step %d: rank %d", state.iter - 1, state.telemetry[-1].rank)


class _Audit:
    """Expensive invariant checks for verification level 2."""

    def __init__(self, rows: int, config: SolverConfig, seed: int):
        self.window: deque[tuple[int, VectorBlock]] = deque(maxlen=3)
        self.checkpoints: list[tuple[int, VectorBlock]] = []
        self.max_checkpoints = config.audit_checkpoints
        self.rng = SplitMix64(derive_seed(seed, TAG_AUDIT))
        self.seen = 0
        self.shadow = rows <= SHADOW_MAX_ROWS
        self.history: list[tuple[VectorBlock, VectorBlock, SmallMat]] = []

    def retained(self) -> list[VectorBlock]:
        if self.shadow:
            return [w for w, _, _ in self.history]
        return [w for _, w in list(self.window) + self.checkpoints]

    def check_orthogonality(self, i: int, Av: VectorBlock) -> None:
        # condition (5): w_j^T A v_i = 0 for retained j < i
        for j, w in list(self.window) + self.checkpoints:
            if not inner(w, Av).is_zero():
                raise VerificationError(f"w_{j}^T A v_{i} != 0")

    def check_step(self, state: IterationState, Av, d, winv, vtav, c, p) -> None:
        i = state.iter
        n = d.width
        S = transition_matrix(d, winv, vtav, c)
        if gf2dense.rank(S) != 2 * n:
            raise VerificationError(f"transition matrix singular at step {i}")

        w = mask_block(state.v, d)
        Aw = mask_block(Av, d)
        if self.shadow:
            # full-history sum_{j<i} w_j c_{i+1,j} against p_i (v^T A v) d
            t = Aw ^ mask_block(state.v, d.complement())
            full = VectorBlock.zeros(state.rows, n)
            for wj, Awj, winvj in self.history:
                full = full ^ mul_block_small(wj, small_mul(winvj, inner(Awj, t)))
            if full != mul_block_small(p, mask_apply(d, vtav, "right")):
                raise VerificationError(f"short recurrence disagrees with full history at step {i}")
            self.history.append((w, Aw, winv))

        # retire the oldest window entry into the random checkpoint pool
        if len(self.window) == self.window.maxlen:
            old = self.window[0]
            self.seen += 1
            if len(self.checkpoints) < self.max_checkpoints:
                self.checkpoints.append(old)
            else:
                k = int(self.rng.below(np.array([self.seen]))[0])
                if k < self.max_checkpoints:
                    self.checkpoints[k] = old
        self.window.append((i, w))

    def check_termination(self, state: IterationState, residual: VectorBlock) -> None:
        """``A x - v_0`` is orthogonal to every w_j and lies in <w_0..w_{m-1}, v_m>.

        It need not lie in <v_m> alone: when the A-form on the Krylov space
        has a radical (spanned by v_m), v_m is usually not orthogonal to the
        w_j and the residual keeps a component along them.
        """
        for w in self.retained():
            if not inner(w, residual).is_zero():
                raise VerificationError("A x - v_0 is not orthogonal to some w_j")
        if self.shadow:
            cols = [c for w in self.retained() for c in w.to_columns()] + state.v.to_columns()
            if gf2dense.rank(cols + residual.to_columns()) != gf2dense.rank(cols):
                raise ResidualNotInSpan("A x - v_0 lies outside the Krylov space")

    def check_accumulators(self, state: IterationState, v_next, p_next) -> None:
        if inner(state.v0, v_next) != state.acc_vv or inner(state.v0, p_next) != state.acc_vp:
            raise VerificationError(f"inner-product accumulators drifted at step {state.iter}")


# -- solution extraction -------------------------------------------------------


@dataclass
class SolveReport:
    status: Status
    solutions: VectorBlock
    count: int
    iterations: int
    total_spmv: int
    seed: int
    setup_spmv: int = 0
    extraction_spmv: int = 0
    message: str = ""
    column_ok: list[bool] = field(default_factory=list)
    telemetry: list[StepRecord] = field(default_factory=list)

    @property
    def ranks(self) -> list[int]:
        return [r.rank for r in self.telemetry]

    def to_text(self) -> str:
        lines = [
            f"status={self.status.value}",
            f"iterations={self.iterations}",
            f"spmv={self.total_spmv}",
            f"solutions={self.count}",
            f"seed={self.seed}",
            f"setup_spmv={self.setup_spmv}",
            f"extraction_spmv={self.extraction_spmv}",
        ]
        if self.column_ok:
            lines.append("columns=" + ",".join("1" if ok else "0" for ok in self.column_ok))
        if self.message:
            lines.append(f"message={self.message}")
        return "\n".join(lines) + "\n"


def _solutions_block(columns: list[int], rows: int, width: int) -> VectorBlock:
    width = max(width, -(-len(columns) // 64) * 64)
    return VectorBlock.from_columns(columns, rows, width)


def _failure(status, state, op, seed, width, rows, setup, msg) -> SolveReport:
    logger.warning("%s: %s", status.value, msg)
    iters = state.iter if state is not None else 0
    return SolveReport(
        status,
        VectorBlock.zeros(rows, width),
        0,
        iters,
        op.spmv_count - setup,
        seed,
        setup_spmv=setup,
        message=msg,
        telemetry=state.telemetry if state is not None else [],
    )


def solve_left_nullspace(M: SparseMatrix, seed: int = 0, config: SolverConfig | None = None, operator=None) -> SolveReport:
    """Find independent ``x`` with ``x^T M = 0`` using ``A = M M^T``.

    ``operator`` may replace the serial ``A`` (for instance a mesh operator);
    it must compute the same products.
    """
    config = config or SolverConfig()
    n = config.width
    if M.n1 == 0:
        raise ValueError("matrix has no rows")
    op = _as_operator(operator if operator is not None else AOperator(M))
    max_iters = config.max_iters or default_max_iters(M.n1, n)

    y = VectorBlock.random(M.n1, n, SplitMix64(derive_seed(seed, TAG_START_BLOCK)))
    v0 = op(y)
    setup = op.spmv_count
    state = IterationState(v0, config, seed)
    try:
        run(state, op, max_iters)
    except PivotFailure as exc:
        return _failure(Status.PIVOT_FAILURE, state, op, seed, n, M.n1, setup, str(exc))
    except IterationCapExceeded as exc:
        return _failure(Status.ITERATION_CAP_EXCEEDED, state, op, seed, n, M.n1, setup, str(exc))
    iter_spmv = op.spmv_count - setup

    if state.audit is not None:
        state.audit.check_termination(state, op(state.x) ^ state.v0)

    # A (x - y) = A x - v_0 lies in <v_m>; combine with v_m and keep what M^T kills
    Z = hstack([state.x ^ y, state.v])
    MtZ = spmv_left(M, Z)
    extraction = 1
    combos = gf2dense.kernel(MtZ.to_columns())
    zcols = Z.to_columns()
    basis = gf2dense.Basis()
    solutions = []
    for combo in combos:
        col = gf2dense.combine(zcols, combo)
        if col and basis.add(col):
            solutions.append(col)

    block = _solutions_block(solutions, M.n1, n)
    if solutions:
        check = spmv_left(M, block)
        extraction += 1
        if not check.is_zero():
            raise VerificationError("extracted column fails x^T M = 0")
    status = Status.SUCCESS if solutions else Status.EMPTY_KERNEL
    logger.info("%d steps, %d solutions", state.iter, len(solutions))
    return SolveReport(
        status,
        block,
        len(solutions),
        state.iter,
        iter_spmv,
        seed,
        setup_spmv=setup,
        extraction_spmv=extraction,
        telemetry=state.telemetry,
    )


def solve_inhomogeneous(A, b: VectorBlock, k: int | None = None, seed: int = 0, config: SolverConfig | None = None) -> SolveReport:
    """Solve ``A u_j = b_j`` for the first ``k`` columns of ``b``.

    The start block is ``b`` completed with random columns.  At termination
    ``E = A x - v_0`` and ``F = A v_m`` are formed and each column is solved
    as ``u_j = x e_j + v_m s_j`` with ``F s_j = E e_j``.  Columns for which no
    ``s_j`` exists (``E e_j`` outside ``<A v_m>``) are reported unsolved in
    ``column_ok``; this is the expected outcome only when ``A`` is singular.
    """
    config = config or SolverConfig(width=b.width)
    n = config.width
    if b.width != n:
        raise ValueError(f"right-hand side width {b.width} differs from block width {n}")
    k = n if k is None else k
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}]")
    op = _as_operator(A)
    rows = b.rows

    fill = VectorBlock.random(rows, n, SplitMix64(derive_seed(seed, TAG_RHS_FILL)))
    keep = DiagMask((1 << k) - 1, n)
    v0 = mask_block(b, keep) ^ mask_block(fill, keep.complement())
    state = IterationState(v0, config, seed)
    max_iters = config.max_iters or default_max_iters(rows, n)
    try:
        run(state, op, max_iters)
    except PivotFailure as exc:
        return _failure(Status.PIVOT_FAILURE, state, op, seed, n, rows, 0, str(exc))
    except IterationCapExceeded as exc:
        return _failure(Status.ITERATION_CAP_EXCEEDED, state, op, seed, n, rows, 0, str(exc))
    iter_spmv = op.spmv_count

    E = op(state.x) ^ v0
    if state.audit is not None:
        state.audit.check_termination(state, E)
    F = state.last_Av
    vm_cols = state.v.to_columns()
    e_cols = E.to_columns()
    f_span = gf2dense.Basis()
    for col in F.to_columns():
        f_span.add(col)
    x_cols = state.x.to_columns()
    out_cols, column_ok = [], []
    for j in range(k):
        s = f_span.express(e_cols[j])
        if s is None:
            out_cols.append(0)
            column_ok.append(False)
            continue
        out_cols.append(x_cols[j] ^ gf2dense.combine(vm_cols, s))
        column_ok.append(True)

    block = VectorBlock.from_columns(out_cols + [0] * (n - k), rows, n)
    check = op(block) ^ mask_block(b, keep)
    extraction = 2 * op.spmv_per_apply
    bad = mask_block(check, DiagMask(sum(1 << j for j, ok in enumerate(column_ok) if ok), n))
    if not bad.is_zero():
        raise VerificationError("a reported solution column fails A u = b")
    solved = sum(column_ok)
    if solved < k:
        logger.warning("%d of %d right-hand sides unsolved", k - solved, k)
    status = Status.SUCCESS if solved or k == 0 else Status.EMPTY_KERNEL
    return SolveReport(
        status,
        block,
        solved,
        state.iter,
        iter_spmv,
        seed,
        extraction_spmv=extraction,
        column_ok=column_ok,
        telemetry=state.telemetry,
    )


def check_left_kernel(M: SparseMatrix, block: VectorBlock) -> tuple[int, list[tuple[int, str]]]:
    """Check the columns of a solutions block against ``x^T M = 0``.

    Trailing all-zero columns are treated as padding up to the word width.
    Returns the number of checked columns and a list of ``(column, reason)``
    failures.
    """
    if block.rows != M.n1:
        raise ValueError(f"solutions have {block.rows} rows, matrix has {M.n1}")
    used = block.nonzero_columns().bit_length()
    product = spmv_left(M, block).nonzero_columns()
    failures = []
    basis = gf2dense.Basis()
    for j, col in enumerate(block.to_columns()[:used]):
        if not col:
            failures.append((j, "zero column"))
        elif product >> j & 1:
            failures.append((j, "x^T M != 0"))
        elif not basis.add(col):
            failures.append((j, "dependent on earlier columns"))
    return used, failures
