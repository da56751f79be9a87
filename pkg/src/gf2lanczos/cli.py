"""
Command line interface.

    gf2lanczos gen N1 N2 WEIGHT --seed S --out m.txt
    gf2lanczos solve --matrix m.txt --out sol.vblk [--report r.txt] [--mesh D]
    gf2lanczos verify --matrix m.txt --solutions sol.vblk
    gf2lanczos stats-rankdefect --width 64 --trials 100000
    gf2lanczos bench --matrix m.txt --mesh 2 --reps 3
    gf2lanczos scalar-demo --size 100 --trials 100

Reports are ``key=value`` lines on stdout.  Exit codes: 0 success,
1 verification failure, 2 empty kernel, 3 pivot failure, 4 iteration cap
exceeded, 5 I/O or format error, 64 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import blanczos
from .bitblock import load_block, save_block
from .blanczos import SolverConfig, Status
from .mesh import MeshOperator
from .sparse import MatrixFormatError, gen_random, load_matrix, save_matrix

logger = logging.getLogger("gf2lanczos")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 64
EXIT_IO = 5
EXIT_CODES = {
    Status.SUCCESS: 0,
    Status.EMPTY_KERNEL: 2,
    Status.PIVOT_FAILURE: 3,
    Status.ITERATION_CAP_EXCEEDED: 4,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _width(text: str) -> int:
    n = int(text)
    if n <= 0 or n % 64:
        raise argparse.ArgumentTypeError("block width must be a positive multiple of 64")
    return n


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def _emit(text: str, path: str | None) -> None:
    sys.stdout.write(text)
    if path:
        Path(path).write_text(text)


def cmd_gen(args) -> int:
    m = gen_random(args.n1, args.n2, args.weight, args.seed)
    save_matrix(args.out, m, args.format)
    _emit(f"n1={m.n1}\nn2={m.n2}\nnnz={m.nnz}\nseed={args.seed}\nout={args.out}\n", None)
    return EXIT_OK


def _config(args) -> SolverConfig:
    return SolverConfig(
        width=args.width,
        verify_level=args.verify_level,
        max_iters=args.max_iters,
        strict_priority=args.strict_priority,
    )


def _operator(m, d: int):
    return MeshOperator(m, d) if d > 1 else None


def cmd_solve(args) -> int:
    m = load_matrix(args.matrix)
    op = _operator(m, args.mesh)
    report = blanczos.solve_left_nullspace(m, args.seed, _config(args), operator=op)
    if args.out:
        save_block(args.out, report.solutions)
    _emit(report.to_text(), args.report)
    if op is not None and args.comm_out:
        Path(args.comm_out).write_text(op.stats.to_text())
    if args.plot:
        from .plotting import plot_step_ranks

        plot_step_ranks([report], args.width, args.plot)
    return EXIT_CODES[report.status]


def cmd_verify(args) -> int:
    m = load_matrix(args.matrix)
    block = load_block(args.solutions)
    if block.rows != m.n1:
        print(f"error: solutions have {block.rows} rows, matrix has {m.n1}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    used, failures = blanczos.check_left_kernel(m, block)
    lines = [f"columns={used}", f"failures={len(failures)}"]
    lines += [f"failed_column={j} reason={reason}" for j, reason in failures]
    if used == 0:
        lines.append("failed_column=0 reason=no solutions")
    _emit("\n".join(lines) + "\n", None)
    return EXIT_OK if used and not failures else EXIT_VERIFY_FAILED


def cmd_stats_rankdefect(args) -> int:
    from .stats import rank_defect

    result = rank_defect(args.width, args.trials, args.seed)
    _emit(result.to_text(), args.report)
    if args.plot:
        from .plotting import plot_rank_defect

        plot_rank_defect(result, args.plot)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    m = load_matrix(args.matrix)
    rows, reports, status = [], [], Status.SUCCESS
    lines = [f"n1={m.n1}", f"n2={m.n2}", f"nnz={m.nnz}", f"width={args.width}", f"mesh={args.mesh}"]
    op = None
    for rep in range(args.reps):
        op = _operator(m, args.mesh)
        seed = args.seed + rep
        t0 = time.perf_counter()
        report = blanczos.solve_left_nullspace(m, seed, _config(args), operator=op)
        elapsed = time.perf_counter() - t0
        if report.total_spmv != 2 * report.iterations:
            raise AssertionError(f"spmv count {report.total_spmv} != 2 x {report.iterations} iterations")
        row = {
            "rep": rep,
            "seed": seed,
            "status": report.status.value,
            "iterations": report.iterations,
            "spmv": report.total_spmv,
            "solutions": report.count,
            "seconds": elapsed,
            "sec_per_iter": elapsed / max(report.iterations, 1),
        }
        if op is not None:
            row["comm_bits"] = op.stats.total_bits
            row["comm_msgs"] = op.stats.total_messages
        rows.append(row)
        reports.append(report)
        if report.status is not Status.SUCCESS:
            status = report.status
        lines.append(" ".join(f"{k}={v:.6f}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    lines.append("spmv_check=ok")
    if op is not None and args.comm_out:
        Path(args.comm_out).write_text(op.stats.to_text())
    _emit("\n".join(lines) + "\n", args.report)
    if args.plot:
        from .plotting import plot_bench, plot_step_ranks

        plot_bench(rows, args.plot)
        plot_step_ranks(reports, args.width, Path(args.plot).with_name(Path(args.plot).stem + "_ranks.png"))
    return EXIT_CODES[status]


def cmd_scalar_demo(args) -> int:
    from .scalar_lanczos import breakdown_demo

    st = breakdown_demo(args.size, args.trials, args.seed, args.prime)
    steps = [s for s in st.breakdown_steps if s is not None]
    text = (
        f"p={st.p}\nN={st.N}\ntrials={st.trials}\nbreakdowns={st.breakdowns}\n"
        f"before_step_10={st.fraction_before(10):.4f}\n"
        f"mean_breakdown_step={(sum(steps) / len(steps)) if steps else float('nan'):.3f}\n"
    )
    _emit(text, args.report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gf2lanczos", description="Block Lanczos solver for sparse GF(2) systems")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a random sparse matrix")
    p.add_argument("n1", type=int)
    p.add_argument("n2", type=int)
    p.add_argument("weight", type=int, help="nonzeros per row (62 for RSA-512-like rows)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("ascii", "binary"), default=None)
    p.set_defaults(func=cmd_gen)

    def solver_flags(p):
        p.add_argument("--matrix", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--width", type=_width, default=64)
        p.add_argument("--mesh", type=_positive, default=1)
        p.add_argument("--verify-level", type=int, choices=(0, 1, 2), default=0)
        p.add_argument("--max-iters", type=_positive, default=None)
        p.add_argument("--strict-priority", action="store_true", help="abort when a skipped column cannot be selected")
        p.add_argument("--report", default=None, help="also write the report to this file")
        p.add_argument("--comm-out", default=None, help="write per-step communication lines (mesh > 1)")
        p.add_argument("--plot", default=None, help="write a PNG figure")

    p = sub.add_parser("solve", help="find left kernel vectors x^T M = 0")
    solver_flags(p)
    p.add_argument("--out", default=None, help="solutions block file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a solutions block against a matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--solutions", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stats-rankdefect", help="mean rank defect of random symmetric matrices")
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--trials", type=_positive, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None)
    p.add_argument("--plot", default=None)
    p.set_defaults(func=cmd_stats_rankdefect)

    p = sub.add_parser("bench", help="time repeated solves and check the product count")
    solver_flags(p)
    p.add_argument("--reps", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("scalar-demo", help="breakdown statistics of scalar Lanczos")
    p.add_argument("--size", type=_positive, default=100)
    p.add_argument("--trials", type=_positive, default=100)
    p.add_argument("--prime", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_scalar_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gf2lanczos: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, MatrixFormatError, ValueError) as exc:
        print(f"gf2lanczos: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
