"""Rounding model for polynomial programs.

Every value a program reads or computes is rounded: rnd(v) = v*(1+e) with
|e| <= epsilon (2^-53 for binary64, 2^-24 for binary32).  Instrumentation
attaches one fresh symbolic variable e_j to

  * each distinct input variable (all occurrences of the same input share
    one e_j: the input is read once),
  * each constant that is not exactly representable in the target format
    (every constant with the all-constants option),
  * each arithmetic operation node.  A shared subtree is one computation,
    so it is tagged once; negation is tagged unless free_negation is set.

The instrumented program fhat(x, e) is kept in factored form, a sum of
terms c * x^gamma * prod_i (1+e_i)^{p_i}, which multiplication by (1+e_j)
leaves compact.  The roundoff error splits exactly as

    fhat(x, e) - f(x) = sum_j s_j(x) e_j + h(x, e)

where every term of h has degree >= 2 in e.  After rescaling the inputs to
the unit box, a bound B >= sup |sum_j s_j(u) t_j| over [0,1]^n x [-1,1]^m
(computed by either bounding engine) yields the certified absolute bound

    |fhat - f| <= epsilon * B + |h|_bound.

The remainder enclosure |h|_bound is second order in epsilon and comes from
interval arithmetic: by full expansion for small programs, or term by term
in factored form when expansion would blow up (the monomials of
prod (1+e_i)^{p_i} all have positive coefficients, so its order->=2 part is
maximized at e = epsilon * 1).
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

from .expr import (
    Add,
    Constant,
    Mul,
    Neg,
    ProgramSpec,
    Sub,
    Variable,
    flatten,
    postorder,
)
from .poly import Exponent, Interval, Polynomial, split_linear_tail

# Above this estimated monomial count, the remainder enclosure switches from
# full expansion to the factored per-term bound.  Both routes are sound; the
# expansion route only sharpens a contribution that is already second order.
EXPANSION_LIMIT = 5_000

# An e-pattern: sorted tuple of (rounding variable index, power).
Pattern = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class RoundingConfig:
    epsilon: Fraction
    significand_bits: int
    name: str
    exact_constants: bool = True  # skip rounding for representable constants
    free_negation: bool = False  # sign flips cost no rounding when set

    def describe(self) -> str:
        return f"{self.name} (eps = 2^-{self.epsilon.denominator.bit_length() - 1})"


BINARY64 = RoundingConfig(Fraction(1, 2**53), 53, "binary64")
BINARY32 = RoundingConfig(Fraction(1, 2**24), 24, "binary32")

PRECISIONS = {"binary64": BINARY64, "binary32": BINARY32}


def representable(value: Fraction, significand_bits: int) -> bool:
    """True if the rational is a binary float with the given significand width.

    Exponent range is not modeled: a value counts as representable when its
    denominator is a power of two and the odd part of its numerator fits in
    the significand.
    """
    if value == 0:
        return True
    den = value.denominator
    if den & (den - 1):
        return False
    num = abs(value.numerator)
    num >>= (num & -num).bit_length() - 1  # strip trailing zero bits
    return num < (1 << significand_bits)


def _merge_patterns(p1: Pattern, p2: Pattern) -> Pattern:
    if not p1:
        return p2
    if not p2:
        return p1
    merged = dict(p1)
    for j, p in p2:
        merged[j] = merged.get(j, 0) + p
    return tuple(sorted(merged.items()))


class FactoredError:
    """Sum of terms c * x^gamma * prod_i (1+e_i)^{p_i}.

    Ring operations keep the (1+e) factors unexpanded, so instrumenting a
    program stays polynomial-size even when the expanded fhat would not.
    Keys are (gamma, pattern) with gamma an exponent tuple over the inputs
    and pattern a sorted tuple of (rounding index, power).
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: dict[tuple[Exponent, Pattern], Fraction] | None = None):
        self.nvars = nvars
        self.terms = {k: c for k, c in (terms or {}).items() if c != 0}

    @staticmethod
    def constant(nvars: int, value: Fraction) -> "FactoredError":
        return FactoredError(nvars, {((0,) * nvars, ()): Fraction(value)})

    @staticmethod
    def variable(nvars: int, index: int) -> "FactoredError":
        gamma = tuple(1 if i == index else 0 for i in range(nvars))
        return FactoredError(nvars, {(gamma, ()): Fraction(1)})

    def __add__(self, other: "FactoredError") -> "FactoredError":
        terms = dict(self.terms)
        for key, c in other.terms.items():
            terms[key] = terms.get(key, Fraction(0)) + c
        return FactoredError(self.nvars, terms)

    def __sub__(self, other: "FactoredError") -> "FactoredError":
        terms = dict(self.terms)
        for key, c in other.terms.items():
            terms[key] = terms.get(key, Fraction(0)) - c
        return FactoredError(self.nvars, terms)

    def __neg__(self) -> "FactoredError":
        return FactoredError(self.nvars, {k: -c for k, c in self.terms.items()})

    def __mul__(self, other: "FactoredError") -> "FactoredError":
        terms: dict[tuple[Exponent, Pattern], Fraction] = {}
        for (g1, p1), c1 in self.terms.items():
            for (g2, p2), c2 in other.terms.items():
                key = (tuple(a + b for a, b in zip(g1, g2)), _merge_patterns(p1, p2))
                terms[key] = terms.get(key, Fraction(0)) + c1 * c2
        return FactoredError(self.nvars, terms)

    def with_rounding(self, index: int) -> "FactoredError":
        """Multiply by (1 + e_index)."""
        terms: dict[tuple[Exponent, Pattern], Fraction] = {}
        for (gamma, pattern), c in self.terms.items():
            key = (gamma, _merge_patterns(pattern, ((index, 1),)))
            terms[key] = terms.get(key, Fraction(0)) + c
        return FactoredError(self.nvars, terms)

    def at_zero(self) -> Polynomial:
        """The exact value: every e set to zero."""
        terms: dict[Exponent, Fraction] = {}
        for (gamma, _), c in self.terms.items():
            terms[gamma] = terms.get(gamma, Fraction(0)) + c
        return Polynomial(self.nvars, terms)

    def evaluate(self, point: Sequence, errors: Sequence) -> Fraction:
        """Exact value of fhat at rational inputs and rounding errors."""
        total = Fraction(0)
        for (gamma, pattern), c in self.terms.items():
            val = c
            for x, e in zip(point, gamma):
                if e:
                    val *= Fraction(x) ** e
            for j, p in pattern:
                val *= (1 + Fraction(errors[j])) ** p
            total += val
        return total

    def linear_coefficients(self, m: int) -> list[Polynomial]:
        """s_j(x) = coefficient of e_j in the expansion, for j = 0..m-1.

        The coefficient of e_j in prod (1+e_i)^{p_i} is p_j, so each term
        contributes c * p_j * x^gamma.
        """
        acc: list[dict[Exponent, Fraction]] = [{} for _ in range(m)]
        for (gamma, pattern), c in self.terms.items():
            for j, p in pattern:
                acc[j][gamma] = acc[j].get(gamma, Fraction(0)) + c * p
        return [Polynomial(self.nvars, t) for t in acc]

    def expansion_estimate(self) -> int:
        """Monomial count of the full expansion over (x, e)."""
        total = 0
        for (_, pattern), _ in self.terms.items():
            count = 1
            for _, p in pattern:
                count *= p + 1
            total += count
        return total

    def expand(self, m: int) -> Polynomial:
        """Full expansion as a polynomial over (x_1..x_n, e_1..e_m)."""
        nvars = self.nvars + m
        terms: dict[Exponent, Fraction] = {}
        for (gamma, pattern), c in self.terms.items():
            ranges = [range(p + 1) for _, p in pattern]
            indices = [j for j, _ in pattern]
            powers = [p for _, p in pattern]
            for choice in itertools.product(*ranges):
                coeff = c
                for p, k in zip(powers, choice):
                    coeff *= math.comb(p, k)
                exp = list(gamma) + [0] * m
                for j, k in zip(indices, choice):
                    exp[self.nvars + j] = k
                key = tuple(exp)
                terms[key] = terms.get(key, Fraction(0)) + coeff
        return Polynomial(nvars, terms)

    def remainder_interval(self, box: list[Interval], epsilon: Fraction) -> Interval:
        """Enclosure of the e-degree >= 2 part over box x [-eps, eps]^m.

        Per term, the order >= 2 part of prod (1+e_i)^{p_i} has only
        positive expansion coefficients, so over |e_i| <= eps its magnitude
        is at most G = (1+eps)^P - 1 - P*eps with P = sum p_i.
        """
        g_cache: dict[int, Fraction] = {}

        def gain(total_power: int) -> Fraction:
            g = g_cache.get(total_power)
            if g is None:
                g = (1 + epsilon) ** total_power - 1 - total_power * epsilon
                g_cache[total_power] = g
            return g

        total = Interval.point(0)
        for (gamma, pattern), c in self.terms.items():
            big_p = sum(p for _, p in pattern)
            if big_p < 2:
                continue  # no e-degree >= 2 monomials
            g = gain(big_p)
            mono = Interval.point(c)
            for iv, e in zip(box, gamma):
                if e:
                    mono = mono * iv.int_pow(e)
            reach = mono.mag() * g
            total = total + Interval(-reach, reach)
        return total


@dataclass(frozen=True)
class Instrumented:
    """A program together with its rounding variables."""

    program: ProgramSpec
    config: RoundingConfig
    provenance: tuple[tuple[str, str], ...]  # what each e_j is attached to
    factored: FactoredError
    exact: Polynomial

    @property
    def n(self) -> int:
        return self.program.n

    @property
    def m(self) -> int:
        return len(self.provenance)


def instrument(program: ProgramSpec, config: RoundingConfig = BINARY64) -> Instrumented:
    """Attach rounding variables to a program, producing fhat in factored form."""
    n = program.n
    provenance: list[tuple[str, str]] = []

    def fresh(kind: str, detail: str) -> int:
        provenance.append((kind, detail))
        return len(provenance) - 1

    input_rounding: dict[int, int] = {}
    memo: dict[int, FactoredError] = {}
    for node in postorder(program.body):
        if isinstance(node, Constant):
            fe = FactoredError.constant(n, node.value)
            exact = config.exact_constants and representable(node.value, config.significand_bits)
            if not exact:
                fe = fe.with_rounding(fresh("const", str(node.value)))
        elif isinstance(node, Variable):
            j = input_rounding.get(node.index)
            if j is None:
                j = fresh("input", program.inputs[node.index][0])
                input_rounding[node.index] = j
            fe = FactoredError.variable(n, node.index).with_rounding(j)
        elif isinstance(node, Neg):
            fe = -memo[id(node.operand)]
            if not config.free_negation:
                fe = fe.with_rounding(fresh("op", "neg"))
        elif isinstance(node, Add):
            fe = memo[id(node.left)] + memo[id(node.right)]
            fe = fe.with_rounding(fresh("op", "add"))
        elif isinstance(node, Sub):
            fe = memo[id(node.left)] - memo[id(node.right)]
            fe = fe.with_rounding(fresh("op", "sub"))
        elif isinstance(node, Mul):
            fe = memo[id(node.left)] * memo[id(node.right)]
            fe = fe.with_rounding(fresh("op", "mul"))
        else:
            raise TypeError(f"unknown node {type(node).__name__}")
        memo[id(node)] = fe

    factored = memo[id(program.body)]
    exact = flatten(program.body, n)
    assert factored.at_zero() == exact, "instrumentation must be exact at e = 0"
    return Instrumented(program, config, tuple(provenance), factored, exact)


@dataclass(frozen=True)
class ErrorDecomposition:
    """First-order coefficients plus a remainder enclosure.

    ``s`` lives over the unit box [0,1]^n (inputs rescaled); ``s_original``
    over the declared box.  The linear bound B fed to absolute_bound must
    satisfy B >= sup |sum_j s_j(u) t_j| over [0,1]^n x [-1,1]^m.
    """

    instrumented: Instrumented
    s: tuple[Polynomial, ...]
    s_original: tuple[Polynomial, ...]
    h_bound: Interval
    remainder_method: str  # "expanded" or "factored"

    @property
    def n(self) -> int:
        return self.instrumented.n

    @property
    def m(self) -> int:
        return self.instrumented.m

    @property
    def epsilon(self) -> Fraction:
        return self.instrumented.config.epsilon

    def absolute_bound(self, linear_bound: Fraction) -> Fraction:
        return self.epsilon * linear_bound + self.h_bound.mag()


def decompose(inst: Instrumented, expansion_limit: int = EXPANSION_LIMIT) -> ErrorDecomposition:
    """Split fhat - f into first-order coefficients and a remainder enclosure."""
    n, m = inst.n, inst.m
    box = inst.program.box()
    unit_maps = [(iv.lo, iv.width()) for iv in box]  # x_i = lo_i + width_i * u_i
    epsilon = inst.config.epsilon

    s_original = inst.factored.linear_coefficients(m)
    s_unit = [p.affine_substitute(unit_maps) for p in s_original]

    if inst.factored.expansion_estimate() <= expansion_limit:
        fhat = inst.factored.expand(m)
        residual = fhat - inst.exact.embed(n + m, list(range(n)))
        residual_unit = residual.affine_substitute(unit_maps + [(Fraction(0), Fraction(1))] * m)
        s_split, h_unit = split_linear_tail(residual_unit, n, m)
        assert s_split == s_unit, "expanded and factored first-order parts must agree"
        domain = [Interval(Fraction(0), Fraction(1))] * n + [Interval(-epsilon, epsilon)] * m
        h_bound = h_unit.interval_eval(domain)
        method = "expanded"
    else:
        h_bound = inst.factored.remainder_interval(box, epsilon)
        method = "factored"

    return ErrorDecomposition(inst, tuple(s_unit), tuple(s_original), h_bound, method)


def analyze(program: ProgramSpec, config: RoundingConfig = BINARY64) -> ErrorDecomposition:
    """Convenience: instrument then decompose."""
    return decompose(instrument(program, config))
