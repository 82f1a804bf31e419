"""``blockinv`` command-line tool.

Exit codes: 0 success, 2 numerical failure (singular tile), 3 I/O or file
format failure, 4 bad arguments.
"""

import argparse
import sys

from . import bench, io
from .cost import CostParams, levelsum, lu_cost_closed, spin_cost_closed
from .exceptions import BlockInvError, FormatError, InsufficientData, SingularTile
from .executor import ExecConfig

EXIT_OK = 0
EXIT_NUMERIC = 2
EXIT_IO = 3
EXIT_ARGS = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _str_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 bits, got {text}")
    return v


def _cores(requested):
    return ExecConfig.from_env(requested).cores


def build_parser():
    p = _Parser(prog="blockinv", description="Block-recursive matrix inversion benchmarks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a random test matrix")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--block-size", type=int, required=True)
    g.add_argument("--seed", type=_u64, default=0)
    g.add_argument("--kind", choices=bench.KINDS, default="spd")
    g.add_argument("--out", required=True)

    i = sub.add_parser("invert", help="invert a matrix file")
    i.add_argument("--in", dest="inp", required=True)
    i.add_argument("--algorithm", choices=sorted(bench.ALGORITHMS), default="spin")
    i.add_argument("--block-size", type=int, required=True)
    i.add_argument("--cores", type=int, default=1)
    i.add_argument("--out")
    i.add_argument("--report")

    s = sub.add_parser("sweep", help="time algorithms over partition sizes")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--algorithms", type=_str_list, default=["spin", "lu"])
    s.add_argument("--b", type=_int_list, default=[2, 4, 8, 16, 32])
    s.add_argument("--cores", type=int, default=1)
    s.add_argument("--repeats", type=int, default=3)
    s.add_argument("--seed", type=_u64, default=0)
    s.add_argument("--kind", choices=bench.KINDS, default="spd")
    s.add_argument("--out")

    m = sub.add_parser("model", help="print the cost-model breakdown")
    m.add_argument("--algorithm", choices=sorted(bench.ALGORITHMS), default="spin")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--b", type=int, required=True)
    m.add_argument("--cores", type=int, default=1)
    m.add_argument("--level", type=int, default=0, help="level index for the closed form")

    c = sub.add_parser("compare", help="fit the model to a sweep CSV")
    c.add_argument("--sweep", required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--cores", type=int, default=1)
    c.add_argument("--algorithm", choices=sorted(bench.ALGORITHMS), default="spin")
    c.add_argument("--out")

    sc = sub.add_parser("scale", help="wall clock against core count")
    sc.add_argument("--in", dest="inp", required=True)
    sc.add_argument("--algorithm", choices=sorted(bench.ALGORITHMS), default="spin")
    sc.add_argument("--cores", type=_int_list, default=[1, 2, 4, 8])
    sc.add_argument("--repeats", type=int, default=3)
    sc.add_argument("--block-size", type=int)
    sc.add_argument("--out")
    return p


def _emit(out, header, rows):
    bench.write_csv(out if out else sys.stdout, header, rows)


def _cmd_gen(a):
    spec = bench.GenSpec(a.n, a.block_size, a.seed, a.kind)
    io.save(a.out, bench.gen(spec))


def _cmd_invert(a):
    rec = bench.run_invert(a.inp, a.algorithm, a.block_size, _cores(a.cores), out=a.out, report=a.report)
    if a.report is None:
        _emit(None, bench.SWEEP_HEADER, [rec.row()])


def _cmd_sweep(a):
    recs = bench.sweep(a.n, a.algorithms, a.b, _cores(a.cores), a.repeats, seed=a.seed, kind=a.kind)
    _emit(a.out, bench.SWEEP_HEADER, [r.row() for r in recs])


def _cmd_model(a):
    params = CostParams(a.n, a.b, _cores(a.cores))
    rows = [("levelsum", k, v) for k, v in levelsum(a.algorithm, params).as_dict().items()]
    if a.b >= 2:
        closed = spin_cost_closed if a.algorithm == "spin" else lu_cost_closed
        rows.append(("closed", "total", closed(params, a.level)))
    _emit(None, ["method", "term", "value"], rows)


def _cmd_compare(a):
    try:
        recs = bench.read_sweep(a.sweep)
    except (ValueError, TypeError) as exc:
        raise FormatError(f"malformed sweep CSV {a.sweep}: {exc}") from exc
    cmp_ = bench.compare_model(recs, a.n, _cores(a.cores), a.algorithm)
    _emit(a.out, bench.COMPARE_HEADER, cmp_.csv_rows())
    print(
        f"constant_ms_per_unit={cmp_.constant!r} measured_argmin={cmp_.measured_argmin} "
        f"predicted_argmin={cmp_.predicted_argmin} argmin_agree={cmp_.argmin_agree} "
        f"sign_agreement={cmp_.sign_agreement:.2f}",
        file=sys.stderr,
    )


def _cmd_scale(a):
    mat = io.load(a.inp)
    if a.block_size is not None:
        mat = bench._repartition(mat, a.block_size)
    # the core list is the swept variable, so SPIN_CORES does not apply here
    rows = bench.scalability(mat, a.algorithm, a.cores, a.repeats)
    _emit(a.out, bench.SCALE_HEADER, rows)


_COMMANDS = {
    "gen": _cmd_gen,
    "invert": _cmd_invert,
    "sweep": _cmd_sweep,
    "model": _cmd_model,
    "compare": _cmd_compare,
    "scale": _cmd_scale,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except SingularTile as exc:
        print(f"blockinv: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FormatError, InsufficientData, OSError) as exc:
        print(f"blockinv: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BlockInvError, ValueError) as exc:
        print(f"blockinv: invalid arguments: {exc}", file=sys.stderr)
        return EXIT_ARGS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
