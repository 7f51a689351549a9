"""Certified upper bounds on the roundoff error of polynomial programs.

A program evaluates a polynomial f over a box; executed in floating
point it computes fhat(x, e) with one bounded relative error e_j per
input, non-representable constant, and operation.  The error splits as

    fhat(x, e) - f(x) = sum_j s_j(x) e_j + h(x, e)

with h of second order in e.  Two independent engines bound the linear
part over the unit domain: symbolic Bernstein enclosures (`bernstein`)
and LP relaxations built from Krivine-Stengle certificates (`krivine`).
Everything on the certification path is exact rational arithmetic; the
one float shortcut (HiGHS for large LPs) is repaired by an exact
residual correction before any bound is reported.

Typical use:

    from fpcertify import analyze, parse_program, linear_bound
    dec = analyze(parse_program("vars x in [0, 1]; x*x - x"))
    bound = dec.absolute_bound(linear_bound(dec.s).bound)  # 2 eps + O(eps^2)
"""

from .bench import (
    BenchmarkResult,
    certify_once,
    certify_program,
    decimal_upper,
    generate_ex,
    interval_linear_bound,
    main,
    packaged_program,
)
from .bernstein import (
    BernsteinTensor,
    LinearBound,
    TensorSizeError,
    bernstein_coeffs,
    default_degree,
    linear_bound,
)
from .expr import (
    Add,
    Constant,
    Mul,
    Neg,
    ParseError,
    ProgramSpec,
    Sub,
    Variable,
    parse_expression,
    parse_program,
    pretty,
    program_text,
)
from .krivine import (
    InfeasibleRelaxation,
    KrivineBound,
    KrivineError,
    KSRelaxation,
    bound_linear_part,
    default_order,
    dense_sizes,
    relaxation_sizes,
    sparsity_blocks,
)
from .lpsolve import (
    FREE,
    NONNEG,
    ExactResult,
    FloatResult,
    LPSizeError,
    StandardFormLP,
    read_lp_text,
    simplex_exact,
    simplex_float,
    verify_dual,
    write_lp_text,
)
from .poly import Interval, Polynomial, quadratic_range, split_linear_tail
from .rounding import (
    BINARY32,
    BINARY64,
    PRECISIONS,
    ErrorDecomposition,
    FactoredError,
    Instrumented,
    RoundingConfig,
    analyze,
    decompose,
    instrument,
    representable,
)

__version__ = "0.1.0"

__all__ = [
    "Add",
    "BenchmarkResult",
    "BernsteinTensor",
    "BINARY32",
    "BINARY64",
    "bernstein_coeffs",
    "bound_linear_part",
    "certify_once",
    "certify_program",
    "Constant",
    "decimal_upper",
    "decompose",
    "default_degree",
    "default_order",
    "dense_sizes",
    "ErrorDecomposition",
    "ExactResult",
    "FactoredError",
    "FloatResult",
    "FREE",
    "generate_ex",
    "InfeasibleRelaxation",
    "instrument",
    "Instrumented",
    "Interval",
    "interval_linear_bound",
    "KrivineBound",
    "KrivineError",
    "KSRelaxation",
    "linear_bound",
    "LinearBound",
    "LPSizeError",
    "main",
    "Mul",
    "Neg",
    "NONNEG",
    "packaged_program",
    "parse_expression",
    "parse_program",
    "ParseError",
    "Polynomial",
    "PRECISIONS",
    "pretty",
    "ProgramSpec",
    "program_text",
    "quadratic_range",
    "read_lp_text",
    "relaxation_sizes",
    "representable",
    "RoundingConfig",
    "simplex_exact",
    "simplex_float",
    "sparsity_blocks",
    "split_linear_tail",
    "StandardFormLP",
    "Sub",
    "TensorSizeError",
    "analyze",
    "Variable",
    "verify_dual",
    "write_lp_text",
]
