"""Bernstein-expansion bounding engine.

Over the unit box [0,1]^n, a polynomial with power-basis coefficients
a_beta has, for any degree vector k >= its multidegree (componentwise),
the Bernstein coefficients

    b_alpha = sum over beta <= alpha of  C(alpha,beta)/C(k,beta) * a_beta

with alpha ranging over prod_i {0..k_i} and the binomials taken
componentwise.  They enclose the range (min b_alpha <= p <= max b_alpha),
and b_alpha equals the value of p at a box vertex whenever every alpha_i
is 0 or k_i.

For the first-order roundoff part l' = sum_j s_j(u) t_j with |t_j| <= 1,

    sup |l'| = sup_u sum_j |s_j(u)| <= max_alpha sum_j |b_alpha^{(j)}|

once all s_j are expanded to one common degree vector.  When a maximizing
alpha is a vertex index the bound is attained and a witness point is
available.  Raising the degree vector never loosens the bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .poly import Interval, Polynomial

# Refuse dense coefficient tensors beyond this many cells.
MAX_TENSOR_CELLS = 100_000_000


class TensorSizeError(ValueError):
    """The requested Bernstein tensor would be too large to materialize."""


def _cells(degree: tuple[int, ...]) -> int:
    count = 1
    for k in degree:
        count *= k + 1
    return count


@dataclass(frozen=True)
class BernsteinTensor:
    """Dense Bernstein coefficients of one polynomial at one degree vector.

    Coefficients are stored flat in mixed radix, last axis fastest, so the
    cell for alpha sits at sum_i alpha_i * stride_i.
    """

    degree: tuple[int, ...]
    coeffs: tuple[Fraction, ...]
    source: Polynomial

    def strides(self) -> tuple[int, ...]:
        strides = [1] * len(self.degree)
        for i in range(len(self.degree) - 2, -1, -1):
            strides[i] = strides[i + 1] * (self.degree[i + 1] + 1)
        return tuple(strides)

    def index(self, alpha: Sequence[int]) -> int:
        flat = 0
        for a, k, stride in zip(alpha, self.degree, self.strides()):
            if not 0 <= a <= k:
                raise IndexError(f"index {tuple(alpha)} outside degree {self.degree}")
            flat += a * stride
        return flat

    def coefficient(self, alpha: Sequence[int]) -> Fraction:
        return self.coeffs[self.index(alpha)]

    def alphas(self):
        """All index vectors, in flat storage order."""
        return itertools.product(*(range(k + 1) for k in self.degree))

    def vmin(self) -> Fraction:
        return min(self.coeffs)

    def vmax(self) -> Fraction:
        return max(self.coeffs)

    def enclosure(self) -> Interval:
        return Interval(self.vmin(), self.vmax())

    def elevate(self, degree: Sequence[int]) -> "BernsteinTensor":
        degree = tuple(degree)
        if any(new < old for new, old in zip(degree, self.degree)):
            raise ValueError(f"cannot lower degree {self.degree} to {degree}")
        return bernstein_coeffs(self.source, degree)


def bernstein_coeffs(p: Polynomial, degree: Sequence[int] | None = None) -> BernsteinTensor:
    """Bernstein coefficients of p over [0,1]^n at the given degree vector.

    The default degree is the multidegree of p, the smallest valid choice.
    """
    d = p.multi_degree()
    k = d if degree is None else tuple(degree)
    if len(k) != p.nvars:
        raise ValueError(f"degree vector {k} has wrong length for {p.nvars} vars")
    if any(ki < di for ki, di in zip(k, d)):
        raise ValueError(f"degree {k} is below the multidegree {d}")
    cells = _cells(k)
    if cells > MAX_TENSOR_CELLS:
        raise TensorSizeError(
            f"Bernstein tensor would need {cells} cells (limit {MAX_TENSOR_CELLS})"
        )
    strides = [1] * len(k)
    for i in range(len(k) - 2, -1, -1):
        strides[i] = strides[i + 1] * (k[i + 1] + 1)
    coeffs = [Fraction(0)] * cells
    for beta, a in p.terms.items():
        # per-axis factors C(alpha_i, beta_i)/C(k_i, beta_i) for alpha_i >= beta_i
        axis: list[list[tuple[int, Fraction]]] = []
        for b, ki, stride in zip(beta, k, strides):
            denom = math.comb(ki, b)
            axis.append(
                [(ai * stride, Fraction(math.comb(ai, b), denom)) for ai in range(b, ki + 1)]
            )
        for combo in itertools.product(*axis):
            flat = 0
            weight = a
            for offset, factor in combo:
                flat += offset
                weight *= factor
            coeffs[flat] += weight
    return BernsteinTensor(k, tuple(coeffs), p)


@dataclass(frozen=True)
class LinearBound:
    """Result of bounding sup |sum_j s_j(u) t_j| by Bernstein coefficients."""

    bound: Fraction
    sharp: bool
    degree: tuple[int, ...]
    argmax: tuple[tuple[int, ...], ...]  # maximizing index vectors (truncated)
    tensors: tuple[BernsteinTensor, ...]

    def witness(self) -> tuple[list[Fraction], list[int]] | None:
        """A point (u, t) attaining the bound, when one is certified.

        Returns (u, t) with u in [0,1]^n and t in {-1,+1}^m such that
        sum_j s_j(u) t_j equals the bound exactly; None if not sharp.
        """
        vertex = next(
            (a for a in self.argmax if _is_vertex(a, self.degree)),
            None,
        )
        if vertex is None:
            return None
        u = [
            Fraction(a, k) if k else Fraction(0)
            for a, k in zip(vertex, self.degree)
        ]
        t = [1 if tensor.coefficient(vertex) >= 0 else -1 for tensor in self.tensors]
        return u, t


def _is_vertex(alpha: tuple[int, ...], degree: tuple[int, ...]) -> bool:
    return all(a == 0 or a == k for a, k in zip(alpha, degree))


def default_degree(s: Sequence[Polynomial]) -> tuple[int, ...]:
    """Componentwise maximum multidegree across the coefficient polynomials."""
    if not s:
        return ()
    n = s[0].nvars
    degs = [0] * n
    for p in s:
        if p.nvars != n:
            raise ValueError("coefficient polynomials over different variable counts")
        for i, d in enumerate(p.multi_degree()):
            if d > degs[i]:
                degs[i] = d
    return tuple(degs)

_ARGMAX_KEPT = 16


def linear_bound(
    s: Sequence[Polynomial],
    degree: Sequence[int] | None = None,
    degree_increment: int = 0,
) -> LinearBound:
    """Upper bound on sup |sum_j s_j(u) t_j| over [0,1]^n x [-1,1]^m.

    All s_j are expanded at one common degree vector: the componentwise
    maximum of their multidegrees by default, raised by degree_increment in
    every component (a higher degree can only tighten the bound).
    """
    if not s:
        return LinearBound(Fraction(0), True, (), (), ())
    if degree is not None:
        k = tuple(degree)
    else:
        k = tuple(d + degree_increment for d in default_degree(s))
    tensors = tuple(bernstein_coeffs(p, k) for p in s)
    best: Fraction | None = None
    argmax: list[tuple[int, ...]] = []
    sharp = False
    for flat, alpha in enumerate(itertools.product(*(range(ki + 1) for ki in k))):
        total = Fraction(0)
        for tensor in tensors:
            total += abs(tensor.coeffs[flat])
        if best is None or total > best:
            best = total
            argmax = [alpha]
            sharp = _is_vertex(alpha, k)
        elif total == best:
            if len(argmax) < _ARGMAX_KEPT:
                argmax.append(alpha)
            if not sharp and _is_vertex(alpha, k):
                sharp = True
                argmax.append(alpha)
    assert best is not None
    return LinearBound(best, sharp, k, tuple(argmax), tensors)
