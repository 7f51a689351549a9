"""Rounding instrumentation: error variables, factored form, decomposition."""

import random
from fractions import Fraction

import pytest

from fpcertify import (
    BINARY32,
    BINARY64,
    Add,
    Mul,
    ProgramSpec,
    RoundingConfig,
    Variable,
    analyze,
    instrument,
    parse_program,
    representable,
)
from fpcertify.rounding import decompose

from conftest import random_point, random_program


def test_representable_dyadics():
    bits = 53
    assert representable(Fraction(1), bits)
    assert representable(Fraction(1, 2), bits)
    assert representable(Fraction(-3, 8), bits)
    assert representable(Fraction(0), bits)
    assert representable(Fraction(2**60), bits)  # power of two times exact odd part
    assert not representable(Fraction(1, 3), bits)
    assert not representable(Fraction(1, 10), bits)
    assert not representable(Fraction(2**53 + 1), bits)
    assert representable(Fraction(2**53 + 2), bits)
    # float32 has fewer significand bits
    assert representable(Fraction(16777216), 24)
    assert not representable(Fraction(16777217), 24)


def test_configs():
    assert BINARY64.epsilon == Fraction(1, 2**53)
    assert BINARY32.epsilon == Fraction(1, 2**24)
    assert "binary64" in BINARY64.describe()


def test_error_variable_counting():
    # one per distinct input, one per operation node
    cases = {
        "x*x - x": 3,  # input, mul, sub
        "x + 0.5": 2,  # representable constant rounds exactly
        "x + 0.1": 3,  # non-representable constant gets a variable
        "x * x * x": 3,
        "x^3": 3,  # same chain as writing the product out
        "-x": 2,  # negation rounds by default
        "2 * x + 1": 3,
    }
    for text, m in cases.items():
        prog = parse_program(f"vars x in [0, 1]; {text}")
        assert instrument(prog).m == m, text


def test_error_variable_counting_flags():
    prog = parse_program("vars x in [0, 1]; x + 0.5")
    config = RoundingConfig(BINARY64.epsilon, 53, "binary64", exact_constants=False)
    assert instrument(prog, config).m == 3

    prog = parse_program("vars x in [0, 1]; -x")
    config = RoundingConfig(BINARY64.epsilon, 53, "binary64", free_negation=True)
    assert instrument(prog, config).m == 1


def test_shared_subtrees_are_instrumented_once():
    x = Variable(0)
    square = Mul(x, x)
    shared = ProgramSpec(
        "shared", (("x", Fraction(0), Fraction(1)),), Add(square, square)
    )
    unshared = ProgramSpec(
        "unshared", (("x", Fraction(0), Fraction(1)),), Add(Mul(x, x), Mul(x, x))
    )
    assert instrument(shared).m == 3
    assert instrument(unshared).m == 4
    # the two programs compute the same polynomial all the same
    assert instrument(shared).exact == instrument(unshared).exact


def test_repeated_input_reads_share_one_error_variable():
    prog = parse_program("vars x in [0, 1]; x * x")
    inst = instrument(prog)
    assert inst.m == 2
    kinds = [kind for kind, _ in inst.provenance]
    assert kinds == ["input", "op"]


def test_provenance_of_overview_program():
    inst = instrument(parse_program("vars x in [0, 1]; x*x - x"))
    assert inst.provenance == (("input", "x"), ("op", "mul"), ("op", "sub"))


def test_factored_evaluate_matches_expansion():
    rng = random.Random(71)
    for i in range(15):
        prog = random_program(rng, f"fe{i}", max_n=2, max_degree=3, max_terms=4)
        inst = instrument(prog)
        expanded = inst.factored.expand(inst.m)
        box = prog.box()
        for _ in range(8):
            pt = random_point(rng, box, denominator=16)
            errors = [
                Fraction(rng.randint(-5, 5), 1000) for _ in range(inst.m)
            ]
            assert inst.factored.evaluate(pt, errors) == expanded.evaluate(
                list(pt) + errors
            )


def test_factored_at_zero_is_the_exact_polynomial():
    rng = random.Random(73)
    for i in range(10):
        prog = random_program(rng, f"z{i}", max_n=2, max_degree=3, max_terms=5)
        inst = instrument(prog)
        assert inst.factored.at_zero() == inst.exact
        assert inst.exact == prog.exact_polynomial()


def test_decomposition_unit_and_original_coordinates_agree():
    rng = random.Random(79)
    for i in range(10):
        prog = random_program(rng, f"co{i}", max_n=2, max_degree=3, max_terms=5)
        dec = analyze(prog)
        box = prog.box()
        maps = [(iv.lo, iv.hi - iv.lo) for iv in box]
        for sj_unit, sj_orig in zip(dec.s, dec.s_original):
            assert sj_unit == sj_orig.affine_substitute(maps)


def test_remainder_interval_contains_sampled_remainders():
    rng = random.Random(83)
    eps = BINARY64.epsilon
    for i in range(10):
        prog = random_program(rng, f"re{i}", max_n=2, max_degree=3, max_terms=5)
        dec = analyze(prog)
        inst = dec.instrumented
        box = prog.box()
        for _ in range(20):
            pt = random_point(rng, box, denominator=16)
            errors = [
                eps * Fraction(rng.randint(-64, 64), 64) for _ in range(inst.m)
            ]
            fhat = inst.factored.evaluate(pt, errors)
            f = inst.exact.evaluate(pt)
            linear = sum(
                (sj.evaluate(pt) * e for sj, e in zip(dec.s_original, errors)),
                Fraction(0),
            )
            assert dec.h_bound.contains(fhat - f - linear)


def test_both_remainder_routes_are_sound():
    rng = random.Random(89)
    eps = BINARY64.epsilon
    prog = random_program(rng, "routes", max_n=2, max_degree=3, max_terms=4)
    inst = instrument(prog)
    dec_expanded = decompose(inst)
    dec_factored = decompose(inst, expansion_limit=0)
    assert dec_expanded.remainder_method == "expanded"
    assert dec_factored.remainder_method == "factored"
    assert dec_expanded.s == dec_factored.s
    box = prog.box()
    for _ in range(25):
        pt = random_point(rng, box, denominator=16)
        errors = [eps * Fraction(rng.randint(-64, 64), 64) for _ in range(inst.m)]
        remainder = (
            inst.factored.evaluate(pt, errors)
            - inst.exact.evaluate(pt)
            - sum(
                (sj.evaluate(pt) * e for sj, e in zip(dec_expanded.s_original, errors)),
                Fraction(0),
            )
        )
        assert dec_expanded.h_bound.contains(remainder)
        assert dec_factored.h_bound.contains(remainder)


def test_absolute_bound_formula():
    dec = analyze(parse_program("vars x in [0, 1]; x*x - x"))
    eps = dec.epsilon
    b = Fraction(2)
    assert dec.absolute_bound(b) == eps * b + dec.h_bound.mag()


def test_constant_only_program_has_no_error_variables():
    dec = analyze(parse_program("vars x in [0, 1]; 0.5 + 0.25"))
    assert dec.m == 1  # the addition still rounds
    dec = analyze(parse_program("vars x in [0, 1]; 0.5"))
    assert dec.m == 0
    assert dec.absolute_bound(Fraction(0)) == 0


def test_binary32_bound_is_wider():
    prog = parse_program("vars x in [0, 1]; x*x - x")
    wide = analyze(prog, BINARY32)
    narrow = analyze(prog, BINARY64)
    assert wide.absolute_bound(Fraction(2)) > narrow.absolute_bound(Fraction(2))
