"""Program grammar, expression trees, and exact literal handling."""

import random
from fractions import Fraction

import pytest

from fpcertify import Add, Constant, Mul, Neg, ParseError, Sub, Variable
from fpcertify import parse_expression, parse_program, pretty, program_text
from fpcertify.expr import flatten, postorder, structurally_equal

from conftest import random_program


def eval_node(node, point):
    """Independent recursive evaluator used as the flattening oracle."""
    if isinstance(node, Constant):
        return node.value
    if isinstance(node, Variable):
        return point[node.index]
    if isinstance(node, Neg):
        return -eval_node(node.operand, point)
    if isinstance(node, Add):
        return eval_node(node.left, point) + eval_node(node.right, point)
    if isinstance(node, Sub):
        return eval_node(node.left, point) - eval_node(node.right, point)
    if isinstance(node, Mul):
        return eval_node(node.left, point) * eval_node(node.right, point)
    raise TypeError(type(node).__name__)


def test_parse_program_overview():
    prog = parse_program("vars x in [0, 1]; x*x - x", "overview")
    assert prog.name == "overview"
    assert prog.n == 1
    assert prog.var_names() == ["x"]
    assert prog.box()[0].lo == 0 and prog.box()[0].hi == 1
    x = Variable(0)
    assert structurally_equal(prog.body, Sub(Mul(x, x), x))


def test_parse_multiple_variables_and_comments():
    src = """# leading comment
    vars x1 in [-1, 1],  # first input
         x2 in [1/2, 3/2];
    x1 * x2 + 2  # trailing comment
    """
    prog = parse_program(src)
    assert prog.n == 2
    assert prog.inputs[1][1] == Fraction(1, 2)
    assert prog.inputs[1][2] == Fraction(3, 2)


def test_literals_are_exact():
    names = ["x"]
    cases = {
        "0.1": Fraction(1, 10),
        "1e-2": Fraction(1, 100),
        "1.5e3": Fraction(1500),
        "2.5E-1": Fraction(1, 4),
        "3/7": Fraction(3, 7),
        "-0.25": Fraction(-1, 4),
    }
    for text, want in cases.items():
        node = parse_expression(text, names)
        assert isinstance(node, Constant) and node.value == want, text


def test_leading_minus_on_a_literal_folds_into_it():
    node = parse_expression("-2*x", ["x"])
    assert isinstance(node, Mul)
    assert isinstance(node.left, Constant) and node.left.value == -2
    # but negation of a variable stays an operation
    node = parse_expression("-x", ["x"])
    assert isinstance(node, Neg)


def test_precedence_and_associativity():
    x, y, z = Variable(0), Variable(1), Variable(2)
    names = ["x", "y", "z"]
    assert structurally_equal(parse_expression("x + y * z", names), Add(x, Mul(y, z)))
    assert structurally_equal(parse_expression("x - y - z", names), Sub(Sub(x, y), z))
    assert structurally_equal(parse_expression("(x + y) * z", names), Mul(Add(x, y), z))


def test_power_desugars_to_left_chain_sharing_one_base():
    node = parse_expression("x^3", ["x"])
    assert isinstance(node, Mul) and isinstance(node.left, Mul)
    assert node.left.left is node.left.right  # same base object
    assert node.right is node.left.left
    assert isinstance(parse_expression("x^1", ["x"]), Variable)
    one = parse_expression("x^0", ["x"])
    assert isinstance(one, Constant) and one.value == 1


def test_power_binds_tighter_than_neg_and_mul():
    node = parse_expression("-x^2", ["x"])
    assert isinstance(node, Neg) and isinstance(node.operand, Mul)
    node = parse_expression("2*x^2", ["x"])
    assert isinstance(node, Mul) and isinstance(node.left, Constant)


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as err:
        parse_program("vars x in [0, 1]; x +")
    assert err.value.line >= 1 and err.value.col >= 1

    with pytest.raises(ParseError, match="undeclared variable"):
        parse_program("vars x in [0, 1]; y")
    with pytest.raises(ParseError, match="duplicate variable"):
        parse_program("vars x in [0, 1], x in [0, 1]; x")
    with pytest.raises(ParseError, match="empty range"):
        parse_program("vars x in [1, 0]; x")
    with pytest.raises(ParseError, match="zero denominator"):
        parse_program("vars x in [0, 1]; x * 1/0")
    with pytest.raises(ParseError, match="exponent"):
        parse_program("vars x in [0, 1]; x^0.5")
    with pytest.raises(ParseError, match="trailing"):
        parse_program("vars x in [0, 1]; x x")


def test_postorder_visits_shared_nodes_once():
    x = Variable(0)
    square = Mul(x, x)
    root = Add(square, square)
    nodes = list(postorder(root))
    assert len(nodes) == 3
    assert len({id(n) for n in nodes}) == 3
    assert nodes[-1] is root


def test_flatten_matches_recursive_evaluation():
    rng = random.Random(59)
    for i in range(25):
        prog = random_program(rng, f"flat{i}")
        p = flatten(prog.body, prog.n)
        for _ in range(10):
            pt = [
                lo + (hi - lo) * Fraction(rng.randint(0, 16), 16)
                for _, lo, hi in prog.inputs
            ]
            assert p.evaluate(pt) == eval_node(prog.body, pt)


def test_exact_polynomial_of_overview_program():
    prog = parse_program("vars x in [0, 1]; x*x - x")
    p = prog.exact_polynomial()
    assert p.coefficient((2,)) == 1 and p.coefficient((1,)) == -1
    assert p.total_degree() == 2


def test_pretty_round_trips():
    rng = random.Random(61)
    for i in range(25):
        prog = random_program(rng, f"pp{i}")
        text = pretty(prog.body, prog.var_names())
        again = parse_expression(text, prog.var_names())
        assert structurally_equal(again, prog.body)


def test_program_text_round_trips():
    rng = random.Random(67)
    for i in range(10):
        prog = random_program(rng, f"pt{i}")
        again = parse_program(program_text(prog), prog.name)
        assert again.inputs == prog.inputs
        assert structurally_equal(again.body, prog.body)
