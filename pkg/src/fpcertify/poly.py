"""Sparse multivariate polynomials over the rationals, plus rational intervals.

Everything downstream (the rounding model, both bounding engines, the
certification step) works with exact arithmetic, so polynomials here map
exponent tuples to ``Fraction`` coefficients and never touch floats.  Terms
are kept in a dict; any function that needs a deterministic order sorts by
the graded-lexicographic key (total degree first, then the exponent tuple).

The module also provides the interval arithmetic used for enclosure checks:
closed intervals with rational endpoints, term-wise interval evaluation of a
polynomial over a box, and an exact range computation for quadratics (the
one case where critical points are rational and can be enumerated).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Exponent = tuple[int, ...]

# Guard against pathological inputs: per-variable degrees must stay well below
# anything the engines could process anyway.
MAX_EXPONENT = 1 << 16


def grlex_key(exponent: Exponent) -> tuple[int, Exponent]:
    """Graded-lexicographic sort key: total degree first, then lex order."""
    return (sum(exponent), exponent)


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"expected a rational value, got {type(value).__name__}")


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", _to_fraction(self.lo))
        object.__setattr__(self, "hi", _to_fraction(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval: [{self.lo}, {self.hi}]")

    @staticmethod
    def point(value) -> "Interval":
        v = _to_fraction(value)
        return Interval(v, v)

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other: "Interval") -> "Interval":
        return self + (-other)

    def __mul__(self, other: "Interval") -> "Interval":
        products = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Interval(min(products), max(products))

    def scale(self, c) -> "Interval":
        c = _to_fraction(c)
        if c >= 0:
            return Interval(self.lo * c, self.hi * c)
        return Interval(self.hi * c, self.lo * c)

    def int_pow(self, k: int) -> "Interval":
        """Exact k-th power of the interval (image of x**k, not repeated mul)."""
        if k < 0:
            raise ValueError("negative powers not supported")
        if k == 0:
            return Interval.point(1)
        if k % 2 == 1 or self.lo >= 0:
            return Interval(self.lo**k, self.hi**k)
        if self.hi <= 0:
            return Interval(self.hi**k, self.lo**k)
        return Interval(Fraction(0), max(self.lo**k, self.hi**k))

    def mag(self) -> Fraction:
        """max |v| over the interval."""
        return max(abs(self.lo), abs(self.hi))

    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, value) -> bool:
        v = _to_fraction(value)
        return self.lo <= v <= self.hi

    def encloses(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


class Polynomial:
    """Immutable sparse polynomial: dict from exponent tuple to coefficient."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Exponent, Fraction] | None = None):
        if nvars < 0:
            raise ValueError("nvars must be nonnegative")
        clean: dict[Exponent, Fraction] = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(exp)
            if len(exp) != nvars:
                raise ValueError(f"exponent {exp} has length {len(exp)}, expected {nvars}")
            if any(e < 0 or e >= MAX_EXPONENT for e in exp):
                raise ValueError(f"exponent out of range in {exp}")
            coeff = _to_fraction(coeff)
            if coeff != 0:
                clean[exp] = coeff
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(nvars: int) -> "Polynomial":
        return Polynomial(nvars, {})

    @staticmethod
    def constant(nvars: int, value) -> "Polynomial":
        return Polynomial(nvars, {(0,) * nvars: _to_fraction(value)})

    @staticmethod
    def variable(nvars: int, index: int) -> "Polynomial":
        if not 0 <= index < nvars:
            raise ValueError(f"variable index {index} out of range for {nvars} vars")
        exp = tuple(1 if i == index else 0 for i in range(nvars))
        return Polynomial(nvars, {exp: Fraction(1)})

    @staticmethod
    def monomial(nvars: int, exponent: Exponent, coeff) -> "Polynomial":
        return Polynomial(nvars, {tuple(exponent): _to_fraction(coeff)})

    # -- ring operations ---------------------------------------------------

    def _check_compatible(self, other: "Polynomial"):
        if self.nvars != other.nvars:
            raise ValueError("polynomials over different variable counts")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_compatible(other)
        terms = dict(self.terms)
        for exp, c in other.terms.items():
            terms[exp] = terms.get(exp, Fraction(0)) + c
        return Polynomial(self.nvars, terms)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        self._check_compatible(other)
        terms = dict(self.terms)
        for exp, c in other.terms.items():
            terms[exp] = terms.get(exp, Fraction(0)) - c
        return Polynomial(self.nvars, terms)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        self._check_compatible(other)
        terms: dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                terms[exp] = terms.get(exp, Fraction(0)) + c1 * c2
        return Polynomial(self.nvars, terms)

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative powers not supported")
        result = Polynomial.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    def scale(self, c) -> "Polynomial":
        c = _to_fraction(c)
        if c == 0:
            return Polynomial.zero(self.nvars)
        return Polynomial(self.nvars, {e: c * v for e, v in self.terms.items()})

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __bool__(self) -> bool:
        return bool(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    # -- structure ---------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        return sorted(self.terms.items(), key=lambda item: grlex_key(item[0]))

    def multi_degree(self) -> Exponent:
        """Componentwise maximum exponent (all zeros for the zero polynomial)."""
        degs = [0] * self.nvars
        for exp in self.terms:
            for i, e in enumerate(exp):
                if e > degs[i]:
                    degs[i] = e
        return tuple(degs)

    def total_degree(self) -> int:
        return max((sum(exp) for exp in self.terms), default=0)

    def coefficient(self, exponent: Exponent) -> Fraction:
        return self.terms.get(tuple(exponent), Fraction(0))

    # -- evaluation and substitution ----------------------------------------

    def evaluate(self, point: Sequence) -> Fraction:
        if len(point) != self.nvars:
            raise ValueError("point dimension mismatch")
        values = [_to_fraction(v) for v in point]
        total = Fraction(0)
        for exp, coeff in self.terms.items():
            term = coeff
            for v, e in zip(values, exp):
                if e:
                    term *= v**e
            total += term
        return total

    def substitute(self, assignments: Mapping[int, Fraction]) -> "Polynomial":
        """Fix some variables to rational values; keeps the variable count."""
        terms: dict[Exponent, Fraction] = {}
        for exp, coeff in self.terms.items():
            factor = coeff
            new_exp = list(exp)
            for idx, value in assignments.items():
                e = exp[idx]
                if e:
                    factor *= _to_fraction(value) ** e
                new_exp[idx] = 0
            if factor == 0:
                continue
            key = tuple(new_exp)
            terms[key] = terms.get(key, Fraction(0)) + factor
        return Polynomial(self.nvars, terms)

    def affine_substitute(self, maps: Sequence[tuple[Fraction, Fraction]]) -> "Polynomial":
        """Substitute x_i = offset_i + slope_i * u_i for every variable.

        Exact: each term is expanded with the binomial theorem.  Passing
        (0, 1) for a variable leaves it untouched.
        """
        if len(maps) != self.nvars:
            raise ValueError("need one (offset, slope) pair per variable")
        maps = [(_to_fraction(o), _to_fraction(s)) for o, s in maps]
        result: dict[Exponent, Fraction] = {}
        for exp, coeff in self.terms.items():
            # partial[exponent-prefix] accumulates the expansion variable by variable
            partial: dict[Exponent, Fraction] = {(): coeff}
            for i, e in enumerate(exp):
                offset, slope = maps[i]
                expanded: dict[Exponent, Fraction] = {}
                if e == 0:
                    choices = [(0, Fraction(1))]
                else:
                    choices = [
                        (j, Fraction(math.comb(e, j)) * offset ** (e - j) * slope**j)
                        for j in range(e + 1)
                    ]
                for prefix, pc in partial.items():
                    for j, w in choices:
                        if w == 0:
                            continue
                        key = prefix + (j,)
                        expanded[key] = expanded.get(key, Fraction(0)) + pc * w
                partial = expanded
            for key, value in partial.items():
                result[key] = result.get(key, Fraction(0)) + value
        return Polynomial(self.nvars, result)

    def embed(self, nvars: int, positions: Sequence[int]) -> "Polynomial":
        """Re-index into a larger variable space; positions[i] is the new slot."""
        if len(positions) != self.nvars:
            raise ValueError("need one position per variable")
        terms: dict[Exponent, Fraction] = {}
        for exp, coeff in self.terms.items():
            new_exp = [0] * nvars
            for pos, e in zip(positions, exp):
                new_exp[pos] += e
            terms[tuple(new_exp)] = terms.get(tuple(new_exp), Fraction(0)) + coeff
        return Polynomial(nvars, terms)

    # -- intervals -----------------------------------------------------------

    def interval_eval(self, box: Sequence[Interval]) -> Interval:
        """Term-wise interval evaluation over a box.

        Sound for every point of the box; exact per monomial (per-variable
        powers use the true image of x**k) but correlations between terms
        are lost, as usual for interval arithmetic.
        """
        if len(box) != self.nvars:
            raise ValueError("box dimension mismatch")
        total = Interval.point(0)
        for exp, coeff in self.terms.items():
            term = Interval.point(coeff)
            for iv, e in zip(box, exp):
                if e:
                    term = term * iv.int_pow(e)
            total = total + term
        return total

    # -- printing ------------------------------------------------------------

    def to_text(self, var_names: Sequence[str] | None = None) -> str:
        """Canonical text form in ascending graded-lex order."""
        if self.is_zero:
            return "0"
        if var_names is None:
            var_names = [f"x{i + 1}" for i in range(self.nvars)]
        pieces: list[str] = []
        for exp, coeff in self.sorted_terms():
            factors = [
                var_names[i] if e == 1 else f"{var_names[i]}^{e}"
                for i, e in enumerate(exp)
                if e
            ]
            mag = abs(coeff)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(mag)] + factors)
            if not pieces:
                pieces.append(body if coeff > 0 else f"-{body}")
            else:
                pieces.append(f"+ {body}" if coeff > 0 else f"- {body}")
        return " ".join(pieces)

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {self.to_text()!r})"


def split_linear_tail(
    p: Polynomial, head: int, tail: int
) -> tuple[list[Polynomial], Polynomial]:
    """Split p(x, e) into its e-linear part and the e-degree >= 2 remainder.

    The first ``head`` variables are x, the last ``tail`` are e.  Returns
    (s, h) with s[j] a polynomial over x such that
    p = sum_j s[j] * e_j + h  and every term of h has e-degree >= 2.
    Terms free of e are an error: the caller must have subtracted the
    e-independent part beforehand.
    """
    if p.nvars != head + tail:
        raise ValueError("variable count mismatch")
    s_terms: list[dict[Exponent, Fraction]] = [{} for _ in range(tail)]
    h_terms: dict[Exponent, Fraction] = {}
    for exp, coeff in p.terms.items():
        e_part = exp[head:]
        e_degree = sum(e_part)
        if e_degree == 0:
            raise ValueError(f"term {exp} has no rounding variables; subtract the exact part first")
        if e_degree == 1:
            j = next(i for i, e in enumerate(e_part) if e)
            s_terms[j][exp[:head]] = coeff
        else:
            h_terms[exp] = coeff
    s = [Polynomial(head, t) for t in s_terms]
    return s, Polynomial(head + tail, h_terms)


def _solve_linear_unique(
    matrix: list[list[Fraction]], rhs: list[Fraction]
) -> list[Fraction] | None:
    """Exact Gaussian elimination; returns the solution only if it is unique."""
    n = len(matrix)
    aug = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            return None  # singular: no unique solution
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


def quadratic_range(p: Polynomial, box: Sequence[Interval]) -> Interval:
    """Exact range of a polynomial of total degree <= 2 over a box.

    Works by enumerating every face of the box.  On each face the restriction
    is still quadratic, so its interior critical points solve a rational
    linear system; faces whose critical set is not a single point are safely
    skipped because the same critical value reappears on a sub-face (the
    value is constant along the critical set, which meets the face boundary).
    Vertices are always evaluated, so the recursion bottoms out.
    """
    if p.total_degree() > 2:
        raise ValueError("quadratic_range requires total degree <= 2")
    n = p.nvars
    if len(box) != n:
        raise ValueError("box dimension mismatch")
    if n == 0:
        c = p.coefficient(())
        return Interval(c, c)
    lo = hi = None

    def consider(value: Fraction):
        nonlocal lo, hi
        if lo is None or value < lo:
            lo = value
        if hi is None or value > hi:
            hi = value

    for assignment in itertools.product((0, 1, 2), repeat=n):
        fixed = {
            i: (box[i].lo if a == 0 else box[i].hi)
            for i, a in enumerate(assignment)
            if a != 2
        }
        free = [i for i, a in enumerate(assignment) if a == 2]
        # Skip degenerate duplicates: a collapsed axis is covered by lo == hi.
        if any(box[i].lo == box[i].hi and a != 0 for i, a in enumerate(assignment)):
            continue
        q = p.substitute(fixed) if fixed else p
        if not free:
            consider(q.coefficient((0,) * n))
            continue
        # Gradient of q over the free vars: A z = -g with A the Hessian.
        k = len(free)
        pos = {v: i for i, v in enumerate(free)}
        a_mat = [[Fraction(0)] * k for _ in range(k)]
        g_vec = [Fraction(0)] * k
        for exp, coeff in q.terms.items():
            support = [i for i in free if exp[i]]
            deg = sum(exp[i] for i in free)
            if deg == 1:
                g_vec[pos[support[0]]] += coeff
            elif deg == 2:
                if len(support) == 1:
                    a_mat[pos[support[0]]][pos[support[0]]] += 2 * coeff
                else:
                    i, j = pos[support[0]], pos[support[1]]
                    a_mat[i][j] += coeff
                    a_mat[j][i] += coeff
        solution = _solve_linear_unique(a_mat, [-g for g in g_vec])
        if solution is None:
            continue
        if all(box[free[i]].lo <= solution[i] <= box[free[i]].hi for i in range(k)):
            point = dict(fixed)
            point.update({free[i]: solution[i] for i in range(k)})
            value = q.substitute({free[i]: solution[i] for i in range(k)})
            consider(value.coefficient((0,) * n))
    assert lo is not None and hi is not None
    return Interval(lo, hi)
