"""Benchmark pipeline: generators, reporting, cell isolation, CLI."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpcertify import (
    analyze,
    generate_ex,
    instrument,
    interval_linear_bound,
    linear_bound,
    packaged_program,
    parse_program,
    program_text,
)
from fpcertify.bench import (
    GENERATED_SUITE,
    PACKAGED_SUITE,
    BenchmarkResult,
    certify_once,
    certify_program,
    decimal_upper,
    main,
    report_markdown,
    results_from_json,
    results_to_json,
    run_cells,
)


def test_generated_suite_error_counts_and_names():
    # inputs + inner-sum adds + chained products + outer additions
    for n, n_sum, deg in GENERATED_SUITE:
        prog = generate_ex(n, n_sum, deg)
        assert prog.name == f"ex-{n}-{deg}-{n_sum}"
        expected_m = n + (n - 1) + (deg - 1) + n_sum
        assert instrument(prog).m == expected_m


def test_generate_ex_polynomial_value():
    # sum of (n_sum + 1) copies of (x1 + ... + xn)^deg
    prog = generate_ex(2, 3, 2)
    p = prog.exact_polynomial()
    linear = p.coefficient((1, 1))
    assert linear == 2 * 4  # 4 copies of (x1+x2)^2 contribute 2 x1 x2 each
    assert p.coefficient((2, 0)) == 4
    assert prog.inputs[0][1] == -1 and prog.inputs[0][2] == 1


def test_generate_ex_validates_arguments():
    with pytest.raises(ValueError):
        generate_ex(0, 2, 2)
    with pytest.raises(ValueError):
        generate_ex(2, 0, 2)
    with pytest.raises(ValueError):
        generate_ex(2, 2, 0)


def test_generated_text_reparse_loses_sharing_but_not_value():
    prog = generate_ex(2, 2, 3)
    reparsed = parse_program(program_text(prog), prog.name)
    assert reparsed.exact_polynomial() == prog.exact_polynomial()
    assert instrument(reparsed).m > instrument(prog).m


def test_decimal_upper_known_values():
    assert decimal_upper(Fraction(533, 10**15)) == "5.33e-13"
    assert decimal_upper(Fraction(1, 3)) == "0.334"
    assert decimal_upper(Fraction(1, 4)) == "0.25"
    assert decimal_upper(Fraction(2)) == "2"
    assert decimal_upper(Fraction(999999, 1000)) == "1000"
    assert decimal_upper(Fraction(123456)) == "124000"
    assert decimal_upper(Fraction(1234567)) == "1.24e6"
    assert decimal_upper(Fraction(0)) == "0"
    assert decimal_upper(Fraction(1, 10**20)) == "1e-20"
    with pytest.raises(ValueError):
        decimal_upper(Fraction(-1))


@settings(max_examples=200, deadline=None)
@given(
    st.fractions(
        min_value=Fraction(1, 10**12), max_value=Fraction(10**12), max_denominator=10**18
    ),
    st.integers(min_value=1, max_value=5),
)
def test_decimal_upper_is_an_upper_bound_with_bounded_slack(value, digits):
    rendered = Fraction(decimal_upper(value, digits))
    assert rendered >= value
    assert rendered <= value * (1 + Fraction(10) ** (1 - digits))


def test_benchmark_result_round_trips_exactly():
    result = BenchmarkResult(
        name="t",
        n=2,
        m=5,
        d=3,
        method="krivine",
        bound_l_scaled=Fraction(22, 7),
        h_bound=Fraction(1, 2**60),
        absolute_bound=Fraction(355, 113) / 2**50,
        sharp=None,
        lp_size=(106, 22),
        wall_time=0.125,
        runs=3,
    )
    assert BenchmarkResult.from_dict(result.to_dict()) == result
    timeout_row = BenchmarkResult(
        name="t", n=1, m=1, d=2, method="bernstein", status="timeout", detail="x"
    )
    assert BenchmarkResult.from_dict(timeout_row.to_dict()) == timeout_row
    assert results_from_json(results_to_json([result, timeout_row])) == [
        result,
        timeout_row,
    ]


def test_report_markdown_shape():
    from fpcertify import BINARY64

    ok = certify_once(
        parse_program("vars x in [0, 1]; x*x - x", "overview"), BINARY64, "bernstein"
    )
    rows = [ok, BenchmarkResult(name="slow", n=1, m=1, d=2, method="krivine", status="timeout")]
    text = report_markdown(rows)
    lines = text.strip().splitlines()
    assert lines[0].startswith("| program ")
    assert len(lines) == 2 + len(rows)
    assert "overview" in lines[2]
    assert "TIMEOUT" in lines[3]


def test_certify_once_per_method():
    prog = parse_program("vars x in [0, 1]; x*x - x", "overview")
    from fpcertify import BINARY64

    bern = certify_once(prog, BINARY64, "bernstein")
    kriv = certify_once(prog, BINARY64, "krivine")
    base = certify_once(prog, BINARY64, "interval")
    assert bern.m == kriv.m == base.m == 3
    assert bern.bound_l_scaled == 2 and bern.sharp
    assert kriv.bound_l_scaled == 2
    assert kriv.lp_size == (106, 22)
    assert base.bound_l_scaled == Fraction(9, 4)
    assert bern.absolute_bound <= base.absolute_bound
    with pytest.raises(ValueError):
        certify_once(prog, BINARY64, "secant")


def test_certify_program_averages_and_respects_budget():
    prog = parse_program("vars x in [0, 1]; x*x - x", "overview")
    from fpcertify import BINARY64

    result = certify_program(prog, BINARY64, "bernstein", runs=3)
    assert result.runs == 3
    fast = certify_program(prog, BINARY64, "bernstein", runs=50, budget=1e-9)
    assert fast.runs == 1  # budget stops repetition right away


def test_interval_baseline_never_beats_the_engines():
    for name in ("rigidbody1", "sqroot", "himmilbeau"):
        dec = analyze(packaged_program(name))
        assert interval_linear_bound(dec) >= linear_bound(dec.s).bound


def test_packaged_programs_parse_with_expected_error_counts():
    # counts follow this model's one-variable-per-operation rule
    expected = {
        "rigidbody1": 10,
        "rigidbody2": 14,
        "kepler0": 21,
        "kepler1": 28,
        "kepler2": 42,
        "sinetaylor": 22,
        "sineorder3": 8,
        "sqroot": 15,
        "himmilbeau": 11,
        "schwefel": 15,
        "magnetism": 27,
        "caprasse": 35,
    }
    assert set(expected) == set(PACKAGED_SUITE)
    for name, m in expected.items():
        assert instrument(packaged_program(name)).m == m, name


def test_packaged_program_unknown_name():
    with pytest.raises(Exception):
        packaged_program("no_such_benchmark")


def test_run_cells_inline_collects_errors():
    base = {
        "precision": "binary64",
        "degree_increment": 0,
        "order_increment": 0,
        "lp_mode": "auto",
        "all_constants": False,
        "free_negation": False,
        "runs": 1,
        "timeout": 0.0,
    }
    good = dict(base, kind="text", name="ok", text="vars x in [0,1]; x*x - x", method="bernstein")
    bad = dict(base, kind="text", name="bad", text="vars x in [0,1]; y", method="bernstein")
    results = run_cells([good, bad], timeout=0.0)
    assert results[0].status == "ok" and results[0].bound_l_scaled == 2
    assert results[1].status == "error"
    assert "ParseError" in results[1].detail


def test_run_cells_subprocess_timeout_row():
    base = {
        "precision": "binary64",
        "degree_increment": 0,
        "order_increment": 0,
        "lp_mode": "float",
        "all_constants": False,
        "free_negation": False,
        "runs": 1,
        "timeout": 0.3,
    }
    slow = dict(base, kind="gen", args=(2, 2, 10), name="", method="krivine")
    quick = dict(base, kind="text", name="q", text="vars x in [0,1]; x", method="bernstein")
    results = run_cells([slow, quick], timeout=0.3, parallel=2)
    assert results[0].status == "timeout"
    assert results[0].m == 2 + 1 + 9 + 2
    assert results[1].status == "ok"


def test_cli_run_and_gen_ex(tmp_path, capsys):
    source = tmp_path / "tiny.fp"
    source.write_text("vars x in [0, 1];\nx*x - x\n")
    code = main(["run", str(source), "--method", "bernstein", "--timeout", "0"])
    out = capsys.readouterr().out
    assert code == 0
    assert "| tiny " in out and "| bernstein |" in out

    code = main(["gen-ex", "2", "2", "5", "--output", "-"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith("vars x1 in [-1, 1]")

    target = tmp_path / "g.fp"
    code = main(["gen-ex", "2", "5", "2", "--output", str(target)])
    capsys.readouterr()
    assert code == 0
    assert target.read_text().startswith("vars x1 in [-1, 1]")
    reparsed = parse_program(target.read_text(), "g")
    assert reparsed.n == 2


def test_cli_json_output(tmp_path, capsys):
    source = tmp_path / "tiny.fp"
    source.write_text("vars x in [0, 1];\nx*x - x\n")
    json_path = tmp_path / "out.json"
    code = main(
        [
            "run",
            str(source),
            "--method",
            "interval",
            "--timeout",
            "0",
            "--json",
            str(json_path),
        ]
    )
    capsys.readouterr()
    assert code == 0
    results = results_from_json(json_path.read_text())
    assert len(results) == 1
    assert results[0].method == "interval"
    assert results[0].bound_l_scaled == Fraction(9, 4)


def test_cli_error_row_sets_exit_code(tmp_path, capsys):
    source = tmp_path / "broken.fp"
    source.write_text("vars x in [0, 1];\nx + y\n")
    code = main(["run", str(source), "--method", "bernstein", "--timeout", "0"])
    out = capsys.readouterr().out
    assert code == 1
    assert "ERROR" in out
