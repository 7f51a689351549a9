"""Shared generators and independent oracles.

Everything here recomputes expected values from first principles (basis
definitions, brute-force enumeration, direct evaluation) so the tests do
not reuse the package's own formulas as their oracle.
"""

import itertools
import math
import random
from fractions import Fraction

from fpcertify import NONNEG, Interval, Polynomial, StandardFormLP, parse_program

# One line per acceptance criterion, filled in by tests/test_acceptance.py and
# echoed after the run so the verdicts survive pytest's output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.line(line)


def random_fraction(rng, num=8, den=6):
    return Fraction(rng.randint(-num, num), rng.randint(1, den))


def random_polynomial(rng, nvars, max_degree, max_terms, allow_zero=True):
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        exp = [0] * nvars
        # min of two draws biases toward low degree; the cap stays reachable
        for _ in range(min(rng.randint(0, max_degree), rng.randint(0, max_degree))):
            exp[rng.randrange(nvars)] += 1
        c = random_fraction(rng)
        key = tuple(exp)
        terms[key] = terms.get(key, Fraction(0)) + c
    p = Polynomial(nvars, {e: c for e, c in terms.items() if c})
    if p.is_zero and not allow_zero:
        return Polynomial.variable(nvars, 0)
    return p


def random_box(rng, n):
    box = []
    for _ in range(n):
        lo = random_fraction(rng, 6, 4)
        width = abs(random_fraction(rng, 4, 4)) + Fraction(1, 4)
        box.append(Interval(lo, lo + width))
    return box


def random_program(rng, name, max_n=3, max_degree=4, max_terms=8):
    """A random polynomial program in monomial form with a random box."""
    n = rng.randint(1, max_n)
    p = random_polynomial(rng, n, max_degree, max_terms)
    names = [f"x{i + 1}" for i in range(n)]
    box = random_box(rng, n)
    decls = ", ".join(f"{nm} in [{iv.lo}, {iv.hi}]" for nm, iv in zip(names, box))
    return parse_program(f"vars {decls};\n{p.to_text(names)}", name)


def random_point(rng, box, denominator=64):
    return [
        iv.lo + (iv.hi - iv.lo) * Fraction(rng.randint(0, denominator), denominator)
        for iv in box
    ]


# -- oracles for sup |sum_j s_j(u) t_j| over [0,1]^n x [-1,1]^m ------------------


def abs_sum(s, point):
    return sum((abs(p.evaluate(point)) for p in s), Fraction(0))


def vertex_sign_max(s):
    """Exact maximum over box vertices and sign vectors."""
    n = s[0].nvars
    best = Fraction(0)
    for vertex in itertools.product((Fraction(0), Fraction(1)), repeat=n):
        value = abs_sum(s, vertex)
        if value > best:
            best = value
    return best


def grid_max(s, per_axis=41):
    n = s[0].nvars
    axis = [Fraction(i, per_axis - 1) for i in range(per_axis)]
    best = Fraction(0)
    for point in itertools.product(axis, repeat=n):
        value = abs_sum(s, point)
        if value > best:
            best = value
    return best


# -- Bernstein basis evaluation --------------------------------------------------


def bernstein_form_value(tensor, point):
    """Evaluate sum_alpha b_alpha * B_alpha(point) from the basis definition."""
    total = Fraction(0)
    for alpha in tensor.alphas():
        b = tensor.coefficient(alpha)
        if not b:
            continue
        weight = Fraction(1)
        for a, k, u in zip(alpha, tensor.degree, point):
            weight *= math.comb(k, a) * u**a * (1 - u) ** (k - a)
        total += b * weight
    return total


# -- exact linear algebra and LP enumeration -------------------------------------


def solve_square(matrix, rhs):
    """Gaussian elimination over Fractions; None when singular."""
    n = len(rhs)
    a = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col]), None)
        if pivot is None:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return [a[i][n] for i in range(n)]


def independent_rows(lp):
    """Indices of a maximal linearly independent subset of the rows."""
    pivots = []
    kept = []
    for i in range(lp.nrows):
        row = [lp.rows[i].get(j, Fraction(0)) for j in range(lp.ncols)]
        for col, reduced in pivots:
            if row[col]:
                factor = row[col]
                row = [a - factor * b for a, b in zip(row, reduced)]
        lead = next((c for c, v in enumerate(row) if v), None)
        if lead is None:
            continue
        inv = 1 / row[lead]
        pivots.append((lead, [v * inv for v in row]))
        kept.append(i)
    return kept


def enumerate_lp_optimum(lp):
    """Best basic feasible objective by enumerating all column bases.

    Only for tiny all-nonnegative LPs; an optimal vertex always exists
    when the LP is feasible and bounded, so this is a complete oracle.
    Dependent rows are dropped first (a consistent system loses nothing),
    otherwise every basis matrix would be singular.
    """
    rows = independent_rows(lp)
    m = len(rows)
    best = None
    for basis in itertools.combinations(range(lp.ncols), m):
        matrix = [[lp.rows[i].get(j, Fraction(0)) for j in basis] for i in rows]
        x_b = solve_square(matrix, [lp.b[i] for i in rows])
        if x_b is None or any(v < 0 for v in x_b):
            continue
        value = sum((lp.c[j] * v for j, v in zip(basis, x_b)), Fraction(0))
        if best is None:
            best = value
        elif lp.maximize and value > best:
            best = value
        elif not lp.maximize and value < best:
            best = value
    return best


def random_feasible_lp(rng, max_rows=12, max_cols=40, density=0.35):
    """Equality-form LP that is feasible and bounded by construction.

    A random nonnegative point is chosen first and the right-hand side is
    derived from it; a full sum row keeps the feasible set bounded.
    """
    nrows = rng.randint(1, max_rows)
    ncols = rng.randint(nrows + 1, max(nrows + 2, max_cols))
    x0 = [
        Fraction(rng.randint(0, 6), rng.randint(1, 3)) if rng.random() < 0.7 else Fraction(0)
        for _ in range(ncols)
    ]
    rows = []
    for _ in range(nrows - 1):
        row = {}
        for j in range(ncols):
            if rng.random() < density:
                v = random_fraction(rng, 5, 3)
                if v:
                    row[j] = v
        rows.append(row)
    rows.append({j: Fraction(1) for j in range(ncols)})
    b = [sum((coeff * x0[j] for j, coeff in row.items()), Fraction(0)) for row in rows]
    c = [random_fraction(rng, 4, 3) for _ in range(ncols)]
    return StandardFormLP(
        ncols, rows, b, c, [NONNEG] * ncols, maximize=bool(rng.getrandbits(1))
    )
