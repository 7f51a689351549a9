"""Command line driver and benchmark harness.

    fp-certify run <file>       certified roundoff bound for one program
    fp-certify gen-ex n nSum deg  emit a member of the generated family
    fp-certify bench [dir]      bound a suite and print a comparison table

Every method runs the same pipeline: instrument -> decompose -> bound the
linear part -> absolute bound eps*B + |h|.  Methods differ only in how
the linear-part bound B is produced: "bernstein" (tensor enclosure),
"krivine" (LP relaxation), or "interval" (one interval sweep per s_j,
the baseline both engines should beat).

Timings exclude parsing and are averaged over --runs repetitions
(bench defaults to 5; repetition stops early once another run would
risk the timeout).  When a timeout is set, each (program, method) cell
runs in its own process; exceeding the limit yields a TIMEOUT row and
a crashed worker an ERROR row.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import multiprocessing
import queue as queue_mod
import sys
import time
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .bernstein import linear_bound
from .expr import Add, Mul, ProgramSpec, Variable, parse_program, program_text
from .krivine import KSRelaxation, bound_linear_part, default_order
from .lpsolve import write_lp_text
from .poly import quadratic_range
from .rounding import PRECISIONS, RoundingConfig, decompose, instrument

METHODS = ("bernstein", "krivine", "interval")

# The packaged programs, in reporting order.
PACKAGED_SUITE = (
    "rigidbody1",
    "rigidbody2",
    "kepler0",
    "kepler1",
    "kepler2",
    "sinetaylor",
    "sineorder3",
    "sqroot",
    "himmilbeau",
    "schwefel",
    "magnetism",
    "caprasse",
)

# (n, nSum, deg) arguments of the generated programs, in reporting order.
GENERATED_SUITE = (
    (2, 5, 2),
    (2, 10, 2),
    (2, 15, 2),
    (2, 20, 2),
    (2, 2, 5),
    (2, 2, 10),
    (5, 2, 2),
    (10, 2, 2),
)


def generate_ex(n: int, n_sum: int, deg: int) -> ProgramSpec:
    """Sum of nSum+1 copies of (x_1+..+x_n)^deg over [-1,1]^n.

    Built as a dag: one shared inner sum, one shared left-chain power,
    and an outer left-chain sum re-adding that single product.  The
    summand is the same every time on purpose; the repetition scales the
    error-variable count without changing the polynomial.  The name
    orders the parameters as ex-{n}-{deg}-{nSum}.
    """
    if min(n, n_sum, deg) < 1:
        raise ValueError("the ex family needs n, nSum, deg >= 1")
    inner: Variable | Add = Variable(0)
    for i in range(1, n):
        inner = Add(inner, Variable(i))
    prod = inner
    for _ in range(deg - 1):
        prod = Mul(prod, inner)
    body = prod
    for _ in range(n_sum):
        body = Add(body, prod)
    inputs = tuple((f"x{i + 1}", Fraction(-1), Fraction(1)) for i in range(n))
    return ProgramSpec(name=f"ex-{n}-{deg}-{n_sum}", inputs=inputs, body=body)


def packaged_program(name: str) -> ProgramSpec:
    text = resources.files("fpcertify").joinpath(f"benchmarks/{name}.fp").read_text()
    return parse_program(text, name)


# -- outward decimal rendering ---------------------------------------------------


def _exp10(value: Fraction) -> int:
    """The integer e with 10^e <= value < 10^(e+1), exactly."""
    e = len(str(value.numerator)) - len(str(value.denominator))
    while Fraction(10) ** e > value:
        e -= 1
    while Fraction(10) ** (e + 1) <= value:
        e += 1
    return e


def decimal_upper(value: Fraction, digits: int = 3) -> str:
    """Decimal text >= value: round the last significant digit up.

    Reported bounds stay sound in print: the rendered number is never
    below the exact rational it stands for.
    """
    value = Fraction(value)
    if value < 0:
        raise ValueError("decimal_upper renders nonnegative bounds")
    if value == 0:
        return "0"
    e = _exp10(value)
    scale = Fraction(10) ** (e - digits + 1)
    mant = -((-value) // scale)  # ceil(value / scale)
    if mant == 10**digits:
        mant //= 10
        e += 1
    text = str(mant)
    if 0 <= e <= 5:
        if e >= digits - 1:
            return text + "0" * (e - digits + 1)
        whole, frac = text[: e + 1], text[e + 1 :].rstrip("0")
        return whole + "." + frac if frac else whole
    if -4 <= e < 0:
        return "0." + "0" * (-e - 1) + text.rstrip("0")
    frac = text[1:].rstrip("0")
    mantissa = text[0] + "." + frac if frac else text[0]
    return f"{mantissa}e{e}"


# -- results ---------------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkResult:
    """One (program, method) cell of a report."""

    name: str
    n: int
    m: int
    d: int
    method: str
    status: str = "ok"  # ok | timeout | error
    bound_l_scaled: Fraction | None = None  # B >= sup |l'| over the unit domain
    h_bound: Fraction | None = None  # magnitude of the remainder enclosure
    absolute_bound: Fraction | None = None  # eps * B + h_bound
    sharp: bool | None = None  # bernstein only: B is the exact sup
    lp_size: tuple[int, int] | None = None  # krivine only: (cols, rows)
    wall_time: float | None = None  # seconds, averaged over runs
    runs: int = 1
    detail: str = ""

    def to_dict(self) -> dict:
        def frac(v: Fraction | None) -> str | None:
            return None if v is None else f"{v.numerator}/{v.denominator}"

        return {
            "name": self.name,
            "n": self.n,
            "m": self.m,
            "d": self.d,
            "method": self.method,
            "status": self.status,
            "bound_l_scaled": frac(self.bound_l_scaled),
            "h_bound": frac(self.h_bound),
            "absolute_bound": frac(self.absolute_bound),
            "absolute_bound_decimal": (
                None if self.absolute_bound is None else decimal_upper(self.absolute_bound)
            ),
            "sharp": self.sharp,
            "lp_size": list(self.lp_size) if self.lp_size else None,
            "wall_time": self.wall_time,
            "runs": self.runs,
            "detail": self.detail,
        }

    @staticmethod
    def from_dict(data: dict) -> "BenchmarkResult":
        def frac(v: str | None) -> Fraction | None:
            return None if v is None else Fraction(v)

        return BenchmarkResult(
            name=data["name"],
            n=data["n"],
            m=data["m"],
            d=data["d"],
            method=data["method"],
            status=data["status"],
            bound_l_scaled=frac(data["bound_l_scaled"]),
            h_bound=frac(data["h_bound"]),
            absolute_bound=frac(data["absolute_bound"]),
            sharp=data["sharp"],
            lp_size=tuple(data["lp_size"]) if data["lp_size"] else None,
            wall_time=data["wall_time"],
            runs=data["runs"],
            detail=data["detail"],
        )


def interval_linear_bound(decomposition) -> Fraction:
    """Baseline B: sum over j of an interval bound on |s_j|.

    Works in the original coordinates.  Quadratics get their exact range
    (so the baseline is not a strawman); higher degrees one term-wise
    interval sweep.
    """
    box = decomposition.instrumented.program.box()
    total = Fraction(0)
    for sj in decomposition.s_original:
        if sj.total_degree() <= 2:
            rng = quadratic_range(sj, box)
        else:
            rng = sj.interval_eval(box)
        total += rng.mag()
    return total


def certify_once(
    program: ProgramSpec,
    config: RoundingConfig,
    method: str,
    degree_increment: int = 0,
    order_increment: int = 0,
    lp_mode: str = "auto",
    export_lp: str | None = None,
) -> BenchmarkResult:
    """One timed pipeline pass for one method (parsing already done)."""
    start = time.perf_counter()
    dec = decompose(instrument(program, config))
    sharp: bool | None = None
    lp_size: tuple[int, int] | None = None
    if dec.m == 0:
        bound = Fraction(0)
        sharp = True
    elif method == "bernstein":
        lb = linear_bound(dec.s, degree_increment=degree_increment)
        bound, sharp = lb.bound, lb.sharp
    elif method == "krivine":
        kb = bound_linear_part(dec.s, order_increment=order_increment, mode=lp_mode)
        bound, lp_size = kb.bound, (kb.ncols, kb.nrows)
    elif method == "interval":
        bound = interval_linear_bound(dec)
    else:
        raise ValueError(f"unknown method {method!r}")
    absolute = dec.absolute_bound(bound)
    wall = time.perf_counter() - start

    if export_lp is not None and method == "krivine" and dec.m:
        order = default_order(dec.s) + order_increment
        relax = KSRelaxation(dec.s, order)
        lp = relax.standard_form("lower")
        title = f"{program.name} order-{order} lower"
        Path(export_lp).write_text(write_lp_text(lp, title=title))

    return BenchmarkResult(
        name=program.name,
        n=dec.n,
        m=dec.m,
        d=dec.instrumented.exact.total_degree() + 1,
        method=method,
        bound_l_scaled=bound,
        h_bound=dec.h_bound.mag(),
        absolute_bound=absolute,
        sharp=sharp,
        lp_size=lp_size,
        wall_time=wall,
    )


def certify_program(
    program: ProgramSpec,
    config: RoundingConfig,
    method: str,
    runs: int = 1,
    budget: float | None = None,
    **options,
) -> BenchmarkResult:
    """Average certify_once over up to `runs` repetitions.

    The bound is identical across runs (everything is deterministic);
    only the wall time is averaged.  Repetition stops early when another
    run would risk exceeding half the budget.
    """
    total = 0.0
    result: BenchmarkResult | None = None
    done = 0
    for r in range(max(runs, 1)):
        one = certify_once(program, config, method, **options)
        options.pop("export_lp", None)  # write the artifact once
        total += one.wall_time
        done += 1
        result = one
        if budget is not None and budget > 0 and total + one.wall_time > budget / 2:
            break
    assert result is not None
    return dataclasses.replace(result, wall_time=total / done, runs=done)


# -- per-cell processes ----------------------------------------------------------


def _task_program(task: dict) -> ProgramSpec:
    if task["kind"] == "gen":
        return generate_ex(*task["args"])
    return parse_program(task["text"], task["name"])


def _task_config(task: dict) -> RoundingConfig:
    config = PRECISIONS[task["precision"]]
    if task["all_constants"]:
        config = dataclasses.replace(config, exact_constants=False)
    if task["free_negation"]:
        config = dataclasses.replace(config, free_negation=True)
    return config


def _run_task(task: dict) -> BenchmarkResult:
    return certify_program(
        _task_program(task),
        _task_config(task),
        task["method"],
        runs=task["runs"],
        budget=task["timeout"],
        degree_increment=task["degree_increment"],
        order_increment=task["order_increment"],
        lp_mode=task["lp_mode"],
        export_lp=task.get("export_lp"),
    )


def _cell_worker(task: dict, channel: multiprocessing.Queue):
    try:
        channel.put(("ok", _run_task(task).to_dict()))
    except Exception as exc:  # noqa: BLE001 - reported as an ERROR row
        channel.put(("error", f"{type(exc).__name__}: {exc}"))


def _meta_result(task: dict, status: str, detail: str, wall: float | None) -> BenchmarkResult:
    try:
        program = _task_program(task)
        inst = instrument(program, _task_config(task))
        name, n, m, d = program.name, inst.n, inst.m, inst.exact.total_degree() + 1
    except Exception:  # noqa: BLE001 - the cell may have failed before parsing
        name = task.get("name") or "-".join(str(a) for a in task.get("args", ())) or "cell"
        n = m = d = 0
    return BenchmarkResult(
        name=name,
        n=n,
        m=m,
        d=d,
        method=task["method"],
        status=status,
        wall_time=wall,
        detail=detail,
    )


def run_cells(tasks: list[dict], timeout: float, parallel: int = 1) -> list[BenchmarkResult]:
    """Run each (program, method) task, isolating cells when a timeout is set."""
    results: list[BenchmarkResult | None] = [None] * len(tasks)
    if timeout <= 0:
        for i, task in enumerate(tasks):
            try:
                results[i] = _run_task(task)
            except Exception as exc:  # noqa: BLE001
                results[i] = _meta_result(task, "error", f"{type(exc).__name__}: {exc}", None)
        return results  # type: ignore[return-value]

    pending = deque(enumerate(tasks))
    active: dict[int, tuple] = {}
    while pending or active:
        while pending and len(active) < max(parallel, 1):
            i, task = pending.popleft()
            channel: multiprocessing.Queue = multiprocessing.Queue()
            proc = multiprocessing.Process(target=_cell_worker, args=(task, channel))
            proc.start()
            active[i] = (proc, channel, time.monotonic() + timeout, task)
        time.sleep(0.02)
        for i in list(active):
            proc, channel, deadline, task = active[i]
            if not proc.is_alive():
                proc.join()
                try:
                    kind, payload = channel.get(timeout=2.0)
                except queue_mod.Empty:
                    kind, payload = "error", f"worker died (exit code {proc.exitcode})"
                if kind == "ok":
                    results[i] = BenchmarkResult.from_dict(payload)
                else:
                    results[i] = _meta_result(task, "error", payload, None)
                del active[i]
            elif time.monotonic() > deadline:
                proc.terminate()
                proc.join()
                results[i] = _meta_result(task, "timeout", f"exceeded {timeout:g} s", timeout)
                del active[i]
    return results  # type: ignore[return-value]


# -- reports ---------------------------------------------------------------------


def report_markdown(results: list[BenchmarkResult]) -> str:
    header = (
        "| program | n | m | d | method | l' bound | h bound | absolute bound "
        "| sharp | LP cols x rows | time (s) |"
    )
    lines = [header, "|" + "---|" * 11]
    for r in results:
        if r.status != "ok":
            cell = r.status.upper()
            bound_l = h = absolute = cell
            sharp = lp = ""
        else:
            bound_l = decimal_upper(r.bound_l_scaled)
            h = decimal_upper(r.h_bound)
            absolute = decimal_upper(r.absolute_bound)
            sharp = "" if r.sharp is None else ("yes" if r.sharp else "no")
            lp = f"{r.lp_size[0]} x {r.lp_size[1]}" if r.lp_size else ""
        wall = "" if r.wall_time is None else f"{r.wall_time:.4g}"
        lines.append(
            f"| {r.name} | {r.n} | {r.m} | {r.d} | {r.method} "
            f"| {bound_l} | {h} | {absolute} | {sharp} | {lp} | {wall} |"
        )
    return "\n".join(lines) + "\n"


def results_to_json(results: list[BenchmarkResult]) -> str:
    return json.dumps({"results": [r.to_dict() for r in results]}, indent=2) + "\n"


def results_from_json(text: str) -> list[BenchmarkResult]:
    return [BenchmarkResult.from_dict(d) for d in json.loads(text)["results"]]


# -- command line ----------------------------------------------------------------


def _add_common_flags(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--method",
        choices=[*METHODS, "all"],
        default="all",
        help="bounding engine for the linear part (default: all)",
    )
    parser.add_argument(
        "--precision",
        choices=sorted(PRECISIONS),
        default="binary64",
        help="rounding model (default: binary64)",
    )
    parser.add_argument(
        "--degree-increment",
        type=int,
        default=0,
        metavar="R",
        help="raise the Bernstein degree R above the default multi-degree",
    )
    parser.add_argument(
        "--order-increment",
        type=int,
        default=0,
        metavar="R",
        help="raise the relaxation order R above the degree of l'",
    )
    lp = parser.add_mutually_exclusive_group()
    lp.add_argument(
        "--exact-lp",
        action="store_true",
        help="force the exact rational simplex for every LP",
    )
    lp.add_argument(
        "--float-lp",
        action="store_true",
        help="force HiGHS plus certification for every LP",
    )
    parser.add_argument(
        "--all-constants",
        action="store_true",
        help="round every constant, representable or not",
    )
    parser.add_argument(
        "--free-negation",
        action="store_true",
        help="treat sign flips as exact",
    )
    parser.add_argument(
        "--timeout",
        type=float,
        default=300.0,
        metavar="S",
        help="per-cell time limit in seconds; 0 disables isolation (default: 300)",
    )
    parser.add_argument("--json", metavar="PATH", help="also write results as JSON")


def _tasks_for(args, programs: list[dict]) -> list[dict]:
    methods = list(METHODS) if args.method == "all" else [args.method]
    lp_mode = "exact" if args.exact_lp else "float" if args.float_lp else "auto"
    tasks = []
    for prog in programs:
        for method in methods:
            task = dict(prog)
            task.update(
                method=method,
                precision=args.precision,
                degree_increment=args.degree_increment,
                order_increment=args.order_increment,
                lp_mode=lp_mode,
                all_constants=args.all_constants,
                free_negation=args.free_negation,
                runs=getattr(args, "runs", 1),
                timeout=args.timeout,
            )
            if method == "krivine" and getattr(args, "export_lp", None):
                task["export_lp"] = args.export_lp
            tasks.append(task)
    return tasks


def _finish(results: list[BenchmarkResult], json_path: str | None) -> int:
    sys.stdout.write(report_markdown(results))
    if json_path:
        Path(json_path).write_text(results_to_json(results))
    return 1 if any(r.status == "error" for r in results) else 0


def _cmd_run(args) -> int:
    path = Path(args.file)
    program_task = {"kind": "text", "name": path.stem, "text": path.read_text()}
    tasks = _tasks_for(args, [program_task])
    results = run_cells(tasks, args.timeout)
    return _finish(results, args.json)


def _cmd_gen_ex(args) -> int:
    program = generate_ex(args.n, args.nSum, args.deg)
    text = program_text(program)
    out = args.output or f"{program.name}.fp"
    if out == "-":
        sys.stdout.write(text)
        return 0
    Path(out).write_text(text)
    print(f"{program.name} -> {out}")
    print(
        "note: the text form repeats the shared product, so reparsing it "
        "uses more rounding variables than the generated dag"
    )
    return 0


def _cmd_bench(args) -> int:
    programs: list[dict] = []
    if args.dir is not None:
        for path in sorted(Path(args.dir).glob("*.fp")):
            programs.append({"kind": "text", "name": path.stem, "text": path.read_text()})
        if not programs:
            print(f"no .fp programs under {args.dir}", file=sys.stderr)
            return 1
    else:
        for name in PACKAGED_SUITE:
            programs.append(
                {
                    "kind": "text",
                    "name": name,
                    "text": resources.files("fpcertify")
                    .joinpath(f"benchmarks/{name}.fp")
                    .read_text(),
                }
            )
        for spec_args in GENERATED_SUITE:
            programs.append({"kind": "gen", "args": list(spec_args)})
    tasks = _tasks_for(args, programs)
    results = run_cells(tasks, args.timeout, args.parallel)
    return _finish(results, args.json)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fp-certify",
        description="certified upper bounds on polynomial roundoff error",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="certify one program file")
    run_p.add_argument("file", help="program file (vars declaration plus expression)")
    _add_common_flags(run_p)
    run_p.add_argument("--export-lp", metavar="PATH", help="write the lower LP in text form")
    run_p.add_argument("--runs", type=int, default=1, help="timing repetitions (default: 1)")
    run_p.set_defaults(handler=_cmd_run)

    gen_p = sub.add_parser("gen-ex", help="emit a generated benchmark program")
    gen_p.add_argument("n", type=int, help="number of input variables")
    gen_p.add_argument("nSum", type=int, help="number of repeated additions")
    gen_p.add_argument("deg", type=int, help="power of the inner sum")
    gen_p.add_argument("--output", metavar="PATH", help="output file, or - for stdout")
    gen_p.set_defaults(handler=_cmd_gen_ex)

    bench_p = sub.add_parser("bench", help="run a suite of programs")
    bench_p.add_argument(
        "dir",
        nargs="?",
        help="directory of .fp files (default: the builtin 20-program suite)",
    )
    _add_common_flags(bench_p)
    bench_p.add_argument("--runs", type=int, default=5, help="timing repetitions (default: 5)")
    bench_p.add_argument(
        "--parallel",
        type=int,
        default=1,
        metavar="N",
        help="cells to run concurrently (default: 1)",
    )
    bench_p.set_defaults(handler=_cmd_bench)

    args = parser.parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
