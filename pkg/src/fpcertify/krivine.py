"""LP relaxation bounds for the linear error form, block by block.

The target is sup |l'(u, t)| with l'(u, t) = sum_j s_j(u) t_j over
u in [0,1]^n and t in [-1,1]^m.  A polynomial nonnegative on that box
admits a Krivine-Stengle certificate: a nonnegative combination of
products of the box generators.  Capping the product degree at the
relaxation order k and writing

    l' - t_lo = sum_h lambda_h h,    lambda_h >= 0,

turns "t_lo bounds l' from below" into a linear program: match the two
sides monomial by monomial, maximize t_lo.  Mirroring signs gives upper
bounds, and raising k can only tighten both since every order-k
combination is an order-(k+1) one.

Each t_j enters l' only through s_j(u) t_j, so certificate products
never need to mix two error variables.  One block per j with generators
u_i, 1-u_i, (1+t_j)/2, (1-t_j)/2 suffices, and the LP rows are the
monomials of degree <= k in (u, t_j), the t-free ones shared across
blocks:

    rows = C(n+k,n) + m C(n+k,n+1),    cols = m C(2(n+1)+k,k) + 1,

against C(n+m+k,n+m) rows for the single-block dense relaxation.

Two solution routes.  Small LPs go to the exact rational simplex; the
polynomial identity behind the returned optimum is recomputed from
scratch and asserted, which guards the row indexing.  Large LPs go to
HiGHS, and the float multipliers are repaired into a sound bound:
clamp lambda to nonnegative rationals, evaluate the mismatch
delta = (l' - t) - sum lambda_h h exactly, and shift t by an interval
lower bound on delta.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.optimize
import scipy.sparse

from .lpsolve import FREE, NONNEG, StandardFormLP, simplex_exact
from .poly import Exponent, Interval, Polynomial, grlex_key

# Auto mode solves exactly below these sizes; larger LPs take the float
# route with certification.  Chosen so the exact rational simplex stays
# under a few seconds per direction.
MAX_EXACT_LP_COLUMNS = 2000
MAX_EXACT_LP_ROWS = 120

# Float multipliers are snapped to this dyadic grid before certification.
CERT_GRID_BITS = 48


class KrivineError(ValueError):
    pass


class InfeasibleRelaxation(KrivineError):
    """No order-k certificate exists; a higher order may still succeed."""

    def __init__(self, order: int, direction: str):
        super().__init__(
            f"order-{order} relaxation infeasible for the {direction} bound; "
            f"retry with order {order + 1}"
        )
        self.order = order
        self.direction = direction


def compositions(total: int, parts: int) -> Iterator[Exponent]:
    """All tuples of `parts` nonnegative integers summing to `total`."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def monomials_upto(nvars: int, degree: int) -> list[Exponent]:
    """Exponent tuples with |exp| <= degree in graded-lex order."""
    out = [exp for d in range(degree + 1) for exp in compositions(d, nvars)]
    out.sort(key=grlex_key)
    return out


def relaxation_sizes(n: int, m: int, order: int) -> tuple[int, int]:
    """(rows, cols) of the sparse order-k LP.

    Rows: input-only monomials once, shared by every block, plus the
    monomials carrying some power of t_j per block.  Cols: one lambda
    per block and generator product, plus the bound variable t.
    """
    rows = math.comb(n + order, n) + m * math.comb(n + order, n + 1)
    cols = m * math.comb(2 * (n + 1) + order, order) + 1
    return rows, cols


def dense_sizes(n: int, m: int, order: int) -> tuple[int, int]:
    """(rows, cols) if all n+m variables formed a single block."""
    rows = math.comb(n + m + order, n + m)
    cols = math.comb(2 * (n + m) + order, order) + 1
    return rows, cols


def sparsity_blocks(n: int, m: int) -> list[tuple[int, ...]]:
    """Variable index sets of the blocks: all inputs plus one t_j each."""
    return [tuple(range(n)) + (n + j,) for j in range(m)]


@lru_cache(maxsize=None)
def _pattern_entries(
    n: int, pattern: Exponent
) -> tuple[tuple[Exponent, int, Fraction], ...]:
    """Expand u^a (1-u)^b ((1+t)/2)^g ((1-t)/2)^d over (u_1..u_n, t).

    pattern is the concatenation a + b + (g, d).  Entries come back as
    (u-exponent, t-power, coeff), sorted for determinism.
    """
    a, b = pattern[:n], pattern[n : 2 * n]
    g, d = pattern[2 * n], pattern[2 * n + 1]
    nv = n + 1
    one = Polynomial.constant(nv, 1)
    half = Fraction(1, 2)
    t = Polynomial.variable(nv, n)
    p = one
    for i, e in enumerate(a):
        if e:
            p = p * Polynomial.variable(nv, i) ** e
    for i, e in enumerate(b):
        if e:
            p = p * (one - Polynomial.variable(nv, i)) ** e
    if g:
        p = p * (one.scale(half) + t.scale(half)) ** g
    if d:
        p = p * (one.scale(half) - t.scale(half)) ** d
    return tuple((exp[:n], exp[n], c) for exp, c in p.sorted_terms())


@dataclass(frozen=True)
class CertifiedValue:
    """A sound one-sided bound, with the raw LP optimum it was made from."""

    value: Fraction
    lp_value: Fraction

    @property
    def correction(self) -> Fraction:
        return self.value - self.lp_value


@dataclass(frozen=True)
class KrivineBound:
    lower: CertifiedValue  # <= min of l' over the box
    upper: CertifiedValue  # >= max of l' over the box
    order: int
    nrows: int
    ncols: int
    mode: str  # "exact" or "float"

    @property
    def bound(self) -> Fraction:
        return max(abs(self.lower.value), abs(self.upper.value))


class KSRelaxation:
    """Order-k relaxation data shared by the lower and upper LPs."""

    def __init__(self, s: Sequence[Polynomial], order: int):
        if not s:
            raise KrivineError("need at least one error variable")
        self.s = tuple(s)
        self.n = self.s[0].nvars
        self.m = len(self.s)
        for p in self.s:
            if p.nvars != self.n:
                raise KrivineError("all coefficient polynomials must share inputs")
        degree = max(p.total_degree() for p in self.s) + 1
        if order < degree:
            raise KrivineError(
                f"order {order} below the degree {degree} of the error form"
            )
        self.order = order
        n, m, k = self.n, self.m, order

        # Row layout: input-only monomials first (shared), then for each
        # block the monomials with a positive power of its t.
        self.x_monomials = monomials_upto(n, k)
        block = [
            (exp, v)
            for v in range(1, k + 1)
            for exp in monomials_upto(n, k - v)
        ]
        block.sort(key=lambda ev: grlex_key(ev[0] + (ev[1],)))
        self.block_monomials = block
        self._x_index = {exp: i for i, exp in enumerate(self.x_monomials)}
        self._block_index = {ev: i for i, ev in enumerate(block)}

        self.patterns = monomials_upto(2 * (n + 1), k)
        self.templates = [_pattern_entries(n, pat) for pat in self.patterns]

        self.nrows = len(self.x_monomials) + m * len(block)
        self.ncols = m * len(self.patterns) + 1
        assert (self.nrows, self.ncols) == relaxation_sizes(n, m, k), (
            "row/column counts must match their closed forms"
        )

        # Right-hand side: the coefficients of l' = sum_j s_j(u) t_j.
        # Every term has t-degree exactly 1, so input-only rows are zero.
        self._rhs = [Fraction(0)] * self.nrows
        for j, sj in enumerate(self.s):
            for exp, c in sj.terms.items():
                self._rhs[self.row_of(j, exp, 1)] = c

        self._coo_cache: tuple | None = None

    def row_of(self, j: int, x_exp: Exponent, v: int) -> int:
        """Global row index of the monomial u^x_exp t_j^v."""
        if v == 0:
            return self._x_index[x_exp]
        return (
            len(self.x_monomials)
            + j * len(self.block_monomials)
            + self._block_index[(x_exp, v)]
        )

    def _lprime_poly(self) -> Polynomial:
        terms = {}
        for j, sj in enumerate(self.s):
            for exp, c in sj.terms.items():
                terms[exp + tuple(int(i == j) for i in range(self.m))] = c
        return Polynomial(self.n + self.m, terms)

    def _h_poly(self, j: int, pattern_index: int) -> Polynomial:
        terms = {}
        for x_exp, v, coeff in self.templates[pattern_index]:
            terms[x_exp + tuple(v * int(i == j) for i in range(self.m))] = coeff
        return Polynomial(self.n + self.m, terms)

    def column_name(self, col: int) -> str:
        if col == 0:
            return "t"
        j, pidx = divmod(col - 1, len(self.patterns))
        return f"l{j}_" + "_".join(str(e) for e in self.patterns[pidx])

    def standard_form(self, direction: str) -> StandardFormLP:
        """The order-k LP in equality form.

        lower: maximize t with l' - t = sum lambda h, i.e. per monomial
        gamma: sum lambda h_gamma + t[gamma=0] = l'_gamma.  upper flips
        both signs and minimizes.
        """
        sign = {"lower": 1, "upper": -1}[direction]
        rows: list[dict[int, Fraction]] = [{} for _ in range(self.nrows)]
        rows[0][0] = Fraction(sign)
        for j in range(self.m):
            base = 1 + j * len(self.patterns)
            for pidx, entries in enumerate(self.templates):
                col = base + pidx
                for x_exp, v, coeff in entries:
                    rows[self.row_of(j, x_exp, v)][col] = coeff
        b = [sign * v for v in self._rhs]
        c = [Fraction(0)] * self.ncols
        c[0] = Fraction(1)
        bounds = [FREE] + [NONNEG] * (self.ncols - 1)
        names = [self.column_name(col) for col in range(self.ncols)]
        return StandardFormLP(
            self.ncols,
            rows,
            b,
            c,
            bounds,
            maximize=(direction == "lower"),
            names=names,
        )

    def _lambdas(self, x: Sequence[Fraction]) -> dict[int, Fraction]:
        return {col: x[col] for col in range(1, self.ncols) if x[col] > 0}

    def _delta(
        self, direction: str, t_value: Fraction, lam: dict[int, Fraction]
    ) -> Polynomial:
        """Exact mismatch of the certificate identity.

        lower: delta = (l' - t) - sum lambda h, so l' >= t + min delta;
        upper: delta = (t - l') - sum lambda h, so l' <= t - min delta.
        """
        sign = {"lower": 1, "upper": -1}[direction]
        nv = self.n + self.m
        acc: dict[Exponent, Fraction] = {}
        lp = self._lprime_poly()
        for exp, c in lp.terms.items():
            acc[exp] = sign * c
        zero = (0,) * nv
        acc[zero] = acc.get(zero, Fraction(0)) - sign * t_value
        per = len(self.patterns)
        for col, lv in lam.items():
            j, pidx = divmod(col - 1, per)
            for x_exp, v, coeff in self.templates[pidx]:
                key = x_exp + tuple(v * int(i == j) for i in range(self.m))
                acc[key] = acc.get(key, Fraction(0)) - lv * coeff
        return Polynomial(nv, acc)

    def _domain(self) -> list[Interval]:
        unit = Interval(Fraction(0), Fraction(1))
        sym = Interval(Fraction(-1), Fraction(1))
        return [unit] * self.n + [sym] * self.m

    def solve_exact(self, direction: str) -> CertifiedValue:
        lp = self.standard_form(direction)
        res = simplex_exact(lp)
        if res.status == "infeasible":
            raise InfeasibleRelaxation(self.order, direction)
        if res.status != "optimal":
            raise KrivineError(f"{direction} LP is {res.status}")
        t_value = res.x[0]
        delta = self._delta(direction, t_value, self._lambdas(res.x))
        assert delta.is_zero, "exact LP solution must satisfy the identity"
        return CertifiedValue(t_value, t_value)

    def _float_coo(self):
        """Constraint matrix pieces, built once and reused per block.

        Per pattern entry we precompute the block-local row index, a flag
        for whether the row is block-owned (t-power > 0), the float
        coefficient, and the pattern's column offset; block j then shifts
        them wholesale.
        """
        if self._coo_cache is None:
            local = []
            owned = []
            data = []
            colrel = []
            for pidx, entries in enumerate(self.templates):
                for x_exp, v, coeff in entries:
                    if v == 0:
                        local.append(self._x_index[x_exp])
                        owned.append(False)
                    else:
                        local.append(self._block_index[(x_exp, v)])
                        owned.append(True)
                    data.append(float(coeff))
                    colrel.append(pidx)
            self._coo_cache = (
                np.array(local, dtype=np.int64),
                np.array(owned, dtype=bool),
                np.array(data, dtype=np.float64),
                np.array(colrel, dtype=np.int64),
            )
        return self._coo_cache

    def solve_float(self, direction: str) -> CertifiedValue:
        """HiGHS solve plus exact repair of the returned multipliers."""
        sign = {"lower": 1, "upper": -1}[direction]
        local, owned, data, colrel = self._float_coo()
        nx = len(self.x_monomials)
        per_rows = len(self.block_monomials)
        per_cols = len(self.patterns)
        nnz = len(data)
        m = self.m
        rows_idx = np.empty(nnz * m + 1, dtype=np.int64)
        cols_idx = np.empty(nnz * m + 1, dtype=np.int64)
        vals = np.empty(nnz * m + 1, dtype=np.float64)
        for j in range(m):
            sl = slice(j * nnz, (j + 1) * nnz)
            rows_idx[sl] = np.where(owned, nx + j * per_rows + local, local)
            cols_idx[sl] = 1 + j * per_cols + colrel
            vals[sl] = data
        rows_idx[-1] = 0
        cols_idx[-1] = 0
        vals[-1] = float(sign)
        a_eq = scipy.sparse.csc_matrix(
            (vals, (rows_idx, cols_idx)), shape=(self.nrows, self.ncols)
        )
        b_eq = np.array([float(sign * v) for v in self._rhs])
        c = np.zeros(self.ncols)
        c[0] = -1.0 if direction == "lower" else 1.0
        bounds = [(None, None)] + [(0, None)] * (self.ncols - 1)
        res = scipy.optimize.linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if res.status == 2:
            raise InfeasibleRelaxation(self.order, direction)
        if res.status != 0:
            raise KrivineError(f"{direction} LP solve failed (HiGHS status {res.status})")
        grid = 1 << CERT_GRID_BITS
        t_hat = Fraction(round(res.x[0] * grid), grid)
        lam = {}
        for col in np.nonzero(res.x[1:] > 0)[0] + 1:
            lv = Fraction(round(res.x[col] * grid), grid)
            if lv > 0:
                lam[int(col)] = lv
        return self.certify(direction, t_hat, lam)

    def certify(
        self, direction: str, t_value: Fraction, lam: dict[int, Fraction]
    ) -> CertifiedValue:
        """Sound bound from any nonnegative multipliers and any t.

        Works for arbitrary lam >= 0: the mismatch delta is evaluated
        exactly over the box and its lower end shifts t outward.
        """
        for col, lv in lam.items():
            if lv < 0:
                raise KrivineError(f"negative multiplier on column {col}")
        delta = self._delta(direction, t_value, lam)
        slack = delta.interval_eval(self._domain()).lo
        if direction == "lower":
            return CertifiedValue(t_value + slack, t_value)
        return CertifiedValue(t_value - slack, t_value)


def default_order(s: Sequence[Polynomial]) -> int:
    """Degree of l' = sum s_j(u) t_j: the smallest usable order."""
    return max(p.total_degree() for p in s) + 1


def bound_linear_part(
    s: Sequence[Polynomial],
    order: int | None = None,
    order_increment: int = 0,
    mode: str = "auto",
) -> KrivineBound:
    """Bound sup |sum_j s_j(u) t_j| over [0,1]^n x [-1,1]^m.

    The result's bound is max(|certified lower|, |certified upper|).
    mode "auto" picks the exact simplex for small LPs and HiGHS with
    certification otherwise; "exact" and "float" force a route.
    """
    s = list(s)
    if not s:
        zero = CertifiedValue(Fraction(0), Fraction(0))
        return KrivineBound(zero, zero, 0, 0, 0, "exact")
    if order is None:
        order = default_order(s)
    order += order_increment
    relax = KSRelaxation(s, order)
    if mode == "auto":
        small = (
            relax.ncols <= MAX_EXACT_LP_COLUMNS and relax.nrows <= MAX_EXACT_LP_ROWS
        )
        mode = "exact" if small else "float"
    if mode == "exact":
        lower = relax.solve_exact("lower")
        upper = relax.solve_exact("upper")
    elif mode == "float":
        lower = relax.solve_float("lower")
        upper = relax.solve_float("upper")
    else:
        raise KrivineError(f"unknown mode {mode!r}")
    return KrivineBound(lower, upper, order, relax.nrows, relax.ncols, mode)
