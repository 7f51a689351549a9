"""Equality-form linear programs with two independent solution routes.

Problems are A x = b with a per-column sign constraint ("nonneg" or
"free"), sparse rational rows, and a linear objective.

  * ``simplex_exact`` is a self-contained rational simplex: big-M handled
    lexicographically with two-component costs, Bland's rule for both the
    entering and leaving choice, so there are no tolerances and no cycling.
    It returns exact optima and, when the final basis yields one, an exact
    dual certificate.
  * ``simplex_float`` hands the problem to scipy's HiGHS.  Fast, but the
    result is advisory: downstream certification re-derives soundness.

``write_lp_text``/``read_lp_text`` serialize problems to an LP-format
subset without losing exactness: every row is scaled to integers by the
least common multiple of its denominators, and the scale is recorded in a
comment so reading restores the original rationals bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.optimize
import scipy.sparse

MAX_EXACT_COLUMNS = 50_000

NONNEG = "nonneg"
FREE = "free"


class LPSizeError(ValueError):
    """Problem too large for the exact simplex; use the float route."""


@dataclass
class StandardFormLP:
    """maximize (or minimize) c.x  subject to  A x = b  and column signs."""

    ncols: int
    rows: list[dict[int, Fraction]]
    b: list[Fraction]
    c: list[Fraction]
    bounds: list[str]  # NONNEG or FREE per column
    maximize: bool = True
    names: list[str] | None = None
    row_names: list[str] | None = None

    @property
    def nrows(self) -> int:
        return len(self.rows)

    def column_name(self, j: int) -> str:
        return self.names[j] if self.names else f"col{j}"

    def row_name(self, i: int) -> str:
        return self.row_names[i] if self.row_names else f"r{i}"

    def validate(self):
        if len(self.b) != len(self.rows):
            raise ValueError("row/rhs length mismatch")
        if len(self.c) != self.ncols or len(self.bounds) != self.ncols:
            raise ValueError("objective/bounds length mismatch")
        if self.names is not None and len(self.names) != self.ncols:
            raise ValueError("names length mismatch")
        for row in self.rows:
            for j, coeff in row.items():
                if not 0 <= j < self.ncols:
                    raise ValueError(f"column index {j} out of range")
                if coeff == 0:
                    raise ValueError("stored zero coefficient")
        for kind in self.bounds:
            if kind not in (NONNEG, FREE):
                raise ValueError(f"unknown bound kind {kind!r}")

    def residual(self, x: list[Fraction]) -> list[Fraction]:
        return [
            sum((coeff * x[j] for j, coeff in row.items()), Fraction(0)) - self.b[i]
            for i, row in enumerate(self.rows)
        ]

    def objective_value(self, x: list[Fraction]) -> Fraction:
        return sum((cj * xj for cj, xj in zip(self.c, x)), Fraction(0))


@dataclass(frozen=True)
class ExactResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: list[Fraction] | None
    objective: Fraction | None
    dual: list[Fraction] | None  # per original row; verified before being set


@dataclass(frozen=True)
class FloatResult:
    status: str
    x: np.ndarray | None
    objective: float | None
    residual_inf: float | None  # max |Ax - b| at the returned point


def verify_dual(lp: StandardFormLP, y: list[Fraction], objective: Fraction) -> bool:
    """Exact check that y certifies optimality at the claimed objective."""
    if len(y) != lp.nrows:
        return False
    if sum((yi * bi for yi, bi in zip(y, lp.b)), Fraction(0)) != objective:
        return False
    slack = [lp.c[j] for j in range(lp.ncols)]
    for i, row in enumerate(lp.rows):
        yi = y[i]
        if yi == 0:
            continue
        for j, coeff in row.items():
            slack[j] -= yi * coeff
    for j in range(lp.ncols):
        if lp.bounds[j] == FREE:
            if slack[j] != 0:
                return False
        elif lp.maximize:
            if slack[j] > 0:
                return False
        else:
            if slack[j] < 0:
                return False
    return True


# -- exact simplex -------------------------------------------------------------


def simplex_exact(lp: StandardFormLP, max_columns: int = MAX_EXACT_COLUMNS) -> ExactResult:
    """Rational big-M simplex with Bland's rule.

    Free columns are split into differences of nonnegative pairs, duplicate
    columns (same constraint column and same objective coefficient) are
    merged, and rows without coefficients are checked and dropped before
    the pivoting starts.
    """
    lp.validate()
    sign = 1 if lp.maximize else -1  # solve as maximize sign*c

    # rows: drop empty ones (infeasible if their rhs is nonzero)
    kept_rows: list[int] = []
    for i, row in enumerate(lp.rows):
        if row:
            kept_rows.append(i)
        elif lp.b[i] != 0:
            return ExactResult("infeasible", None, None, None)

    # columns of the working problem: free split, then dedup
    col_data: list[dict[int, Fraction]] = [{} for _ in range(lp.ncols)]
    for local, i in enumerate(kept_rows):
        for j, coeff in lp.rows[i].items():
            col_data[j][local] = coeff
    work_cols: list[dict[int, Fraction]] = []
    work_c: list[Fraction] = []
    # (original column, +1/-1) per working column; shadow columns carry -1
    origin: list[tuple[int, int]] = []
    for j in range(lp.ncols):
        work_cols.append(col_data[j])
        work_c.append(sign * lp.c[j])
        origin.append((j, 1))
        if lp.bounds[j] == FREE:
            work_cols.append({i: -v for i, v in col_data[j].items()})
            work_c.append(-sign * lp.c[j])
            origin.append((j, -1))

    merged_into: dict[int, int] = {}  # duplicate working column -> representative
    seen: dict[tuple, int] = {}
    active: list[int] = []
    for w, col in enumerate(work_cols):
        key = (tuple(sorted(col.items())), work_c[w])
        rep = seen.get(key)
        if rep is None:
            seen[key] = w
            active.append(w)
        else:
            merged_into[w] = rep
    if len(active) > max_columns:
        raise LPSizeError(
            f"{len(active)} columns after presolve exceeds the exact-simplex "
            f"limit of {max_columns}"
        )

    nrows = len(kept_rows)
    # normalize to b >= 0 so the artificial basis is feasible
    row_sign = [1] * nrows
    bvec = [lp.b[i] for i in kept_rows]
    for r in range(nrows):
        if bvec[r] < 0:
            row_sign[r] = -1
            bvec[r] = -bvec[r]
    for w in active:
        col = work_cols[w]
        for r in list(col):
            if row_sign[r] < 0:
                col[r] = -col[r]

    # big-M costs as (M-part, real part), compared lexicographically;
    # artificial columns get (-1, 0), real columns (0, c).
    n_art = nrows
    basis = list(range(len(work_cols), len(work_cols) + n_art))
    binv = [[Fraction(1) if i == r else Fraction(0) for i in range(nrows)] for r in range(nrows)]
    xb = list(bvec)
    in_basis = set(basis)
    scan_order = active + list(range(len(work_cols), len(work_cols) + n_art))

    def column_of(w: int) -> dict[int, Fraction]:
        if w < len(work_cols):
            return work_cols[w]
        return {w - len(work_cols): Fraction(1)}

    def cost_of(w: int) -> tuple[Fraction, Fraction]:
        if w < len(work_cols):
            return (Fraction(0), work_c[w])
        return (Fraction(-1), Fraction(0))

    while True:
        # y = c_B * Binv, kept as (M-part, real part) per row
        ym = [Fraction(0)] * nrows
        yr = [Fraction(0)] * nrows
        for r, w in enumerate(basis):
            cm, cr = cost_of(w)
            if cm:
                for i in range(nrows):
                    if binv[r][i]:
                        ym[i] += cm * binv[r][i]
            if cr:
                for i in range(nrows):
                    if binv[r][i]:
                        yr[i] += cr * binv[r][i]
        # while any artificial is basic above zero, only pivots that improve
        # the M-part may enter; a real-part ray found in that state would
        # say nothing about feasibility
        infeasible = any(
            xb[r] > 0 for r, w in enumerate(basis) if w >= len(work_cols)
        )
        entering = -1
        for w in scan_order:
            if w in in_basis:
                continue
            cm, cr = cost_of(w)
            dm, dr = cm, cr
            for i, coeff in column_of(w).items():
                if ym[i]:
                    dm -= ym[i] * coeff
                if yr[i]:
                    dr -= yr[i] * coeff
            if dm > 0 or (dm == 0 and dr > 0 and not infeasible):
                entering = w
                break
        if entering < 0:
            break  # optimal for the big-M problem

        direction = [Fraction(0)] * nrows
        for i, coeff in column_of(entering).items():
            for r in range(nrows):
                if binv[r][i]:
                    direction[r] += binv[r][i] * coeff
        leave_row = -1
        best_ratio: Fraction | None = None
        for r in range(nrows):
            if direction[r] > 0:
                ratio = xb[r] / direction[r]
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[r] < basis[leave_row])
                ):
                    best_ratio = ratio
                    leave_row = r
        if leave_row < 0:
            art_level = sum(
                (xb[r] for r, w in enumerate(basis) if w >= len(work_cols)), Fraction(0)
            )
            if art_level == 0:
                return ExactResult("unbounded", None, None, None)
            # unreachable: a dm > 0 ray would push the M-part of the
            # objective past its upper bound of zero, and dm == 0 columns
            # are only admitted once every artificial sits at zero
            raise RuntimeError("unbounded direction with artificial variables in basis")

        piv = direction[leave_row]
        inv_row = [v / piv for v in binv[leave_row]]
        x_piv = xb[leave_row] / piv
        for r in range(nrows):
            if r == leave_row or direction[r] == 0:
                continue
            factor = direction[r]
            row = binv[r]
            for i in range(nrows):
                if inv_row[i]:
                    row[i] -= factor * inv_row[i]
            xb[r] -= factor * x_piv
        binv[leave_row] = inv_row
        xb[leave_row] = x_piv
        in_basis.discard(basis[leave_row])
        basis[leave_row] = entering
        in_basis.add(entering)

    art_level = sum((xb[r] for r, w in enumerate(basis) if w >= len(work_cols)), Fraction(0))
    if art_level > 0:
        return ExactResult("infeasible", None, None, None)

    # drive zero-level artificial columns out of the basis; the solution does
    # not move (their basic values are zero), but a dual certificate is only
    # recoverable once the basis is free of them
    for r in range(nrows):
        if basis[r] < len(work_cols):
            continue
        pivot_col = -1
        piv = Fraction(0)
        for w in active:
            if w in in_basis:
                continue
            coeff = sum(
                (binv[r][i] * v for i, v in work_cols[w].items() if binv[r][i]),
                Fraction(0),
            )
            if coeff:
                pivot_col, piv = w, coeff
                break
        if pivot_col < 0:
            continue  # row is redundant under the current basis
        inv_row = [v / piv for v in binv[r]]
        for r2 in range(nrows):
            if r2 == r:
                continue
            d2 = sum(
                (binv[r2][i] * v for i, v in work_cols[pivot_col].items() if binv[r2][i]),
                Fraction(0),
            )
            if d2:
                row2 = binv[r2]
                for i in range(nrows):
                    if inv_row[i]:
                        row2[i] -= d2 * inv_row[i]
        in_basis.discard(basis[r])
        binv[r] = inv_row
        basis[r] = pivot_col
        in_basis.add(pivot_col)

    work_x = [Fraction(0)] * len(work_cols)
    for r, w in enumerate(basis):
        if w < len(work_cols):
            work_x[w] = xb[r]
    x = [Fraction(0)] * lp.ncols
    for w, (j, s) in enumerate(origin):
        rep = merged_into.get(w, w)
        if rep == w:
            x[j] += s * work_x[w]
    objective = lp.objective_value(x)

    dual: list[Fraction] | None = None
    # y is a usable certificate only when its big-M component vanished
    ym = [Fraction(0)] * nrows
    yr = [Fraction(0)] * nrows
    for r, w in enumerate(basis):
        cm, cr = cost_of(w)
        for i in range(nrows):
            if binv[r][i]:
                if cm:
                    ym[i] += cm * binv[r][i]
                if cr:
                    yr[i] += cr * binv[r][i]
    if all(v == 0 for v in ym):
        y_full = [Fraction(0)] * lp.nrows
        for local, i in enumerate(kept_rows):
            y_full[i] = sign * row_sign[local] * yr[local]
        if verify_dual(lp, y_full, objective):
            dual = y_full

    return ExactResult("optimal", x, objective, dual)


# -- floating-point route -------------------------------------------------------


def simplex_float(lp: StandardFormLP) -> FloatResult:
    """Solve with scipy's HiGHS.  Advisory: exactness is restored downstream."""
    lp.validate()
    data: list[float] = []
    rows_idx: list[int] = []
    cols_idx: list[int] = []
    for i, row in enumerate(lp.rows):
        for j, coeff in row.items():
            rows_idx.append(i)
            cols_idx.append(j)
            data.append(float(coeff))
    a_eq = scipy.sparse.csc_matrix(
        (data, (rows_idx, cols_idx)), shape=(lp.nrows, lp.ncols)
    )
    b_eq = np.array([float(v) for v in lp.b])
    c = np.array([float(v) for v in lp.c])
    bounds = [(0, None) if kind == NONNEG else (None, None) for kind in lp.bounds]
    res = scipy.optimize.linprog(
        -c if lp.maximize else c,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
    )
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(res.status, f"error({res.status})")
    if status != "optimal":
        return FloatResult(status, None, None, None)
    x = res.x
    residual = float(np.max(np.abs(a_eq @ x - b_eq))) if lp.nrows else 0.0
    objective = -res.fun if lp.maximize else res.fun
    return FloatResult(status, x, objective, residual)


# -- exact text form -------------------------------------------------------------


def _scaled_integers(values: list[Fraction]) -> tuple[int, list[int]]:
    denom = 1
    for v in values:
        denom = denom * v.denominator // math.gcd(denom, v.denominator)
    return denom, [int(v * denom) for v in values]


def _format_terms(pairs: list[tuple[int, str]]) -> str:
    if not pairs:
        return ""
    pieces = []
    for k, name in pairs:
        if not pieces:
            pieces.append(f"{k} {name}" if k >= 0 else f"- {-k} {name}")
        elif k >= 0:
            pieces.append(f"+ {k} {name}")
        else:
            pieces.append(f"- {-k} {name}")
    return " ".join(pieces)


def write_lp_text(lp: StandardFormLP, title: str = "") -> str:
    """Serialize to LP format, exactly (integer rows plus scale comments)."""
    lp.validate()
    names = [lp.column_name(j) for j in range(lp.ncols)]
    lines: list[str] = []
    if title:
        lines.append(f"\\ lp: {title}")
    for start in range(0, len(names), 16):
        lines.append("\\ cols: " + " ".join(names[start : start + 16]))

    obj_scale, obj_ints = _scaled_integers(lp.c)
    if obj_scale != 1:
        lines.append(f"\\ scale obj {obj_scale}")
    row_data = []
    for i, row in enumerate(lp.rows):
        ordered = sorted(row.items())
        scale, ints = _scaled_integers([coeff for _, coeff in ordered] + [lp.b[i]])
        if scale != 1:
            lines.append(f"\\ scale {lp.row_name(i)} {scale}")
        row_data.append((ordered, ints))

    lines.append("Maximize" if lp.maximize else "Minimize")
    obj_terms = [(k, names[j]) for j, k in enumerate(obj_ints) if k]
    lines.append(" obj: " + (_format_terms(obj_terms) or f"0 {names[0]}"))
    lines.append("Subject To")
    for i, (ordered, ints) in enumerate(row_data):
        terms = [(k, names[j]) for (j, _), k in zip(ordered, ints[:-1]) if k]
        body = _format_terms(terms) or f"0 {names[0]}"
        lines.append(f" {lp.row_name(i)}: {body} = {ints[-1]}")
    free_names = [names[j] for j in range(lp.ncols) if lp.bounds[j] == FREE]
    if free_names:
        lines.append("Bounds")
        for name in free_names:
            lines.append(f" {name} free")
    lines.append("End")
    return "\n".join(lines) + "\n"


def read_lp_text(text: str) -> StandardFormLP:
    """Rebuild a problem written by write_lp_text, bit for bit."""
    names: list[str] = []
    scales: dict[str, int] = {}
    body_lines: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            comment = line[1:].strip()
            if comment.startswith("cols:"):
                names.extend(comment[len("cols:") :].split())
            elif comment.startswith("scale "):
                _, target, denom = comment.split()
                scales[target] = int(denom)
            continue
        body_lines.append(line)
    if not names:
        raise ValueError("missing cols: comment; not a file written by write_lp_text")
    col_index = {name: j for j, name in enumerate(names)}

    maximize = True
    section = None
    objective: dict[int, Fraction] = {}
    rows: list[dict[int, Fraction]] = []
    b: list[Fraction] = []
    row_names: list[str] = []
    free: set[int] = set()

    def parse_terms(body: str, scale: int) -> dict[int, Fraction]:
        tokens = body.split()
        terms: dict[int, Fraction] = {}
        sign = 1
        pos = 0
        while pos < len(tokens):
            tok = tokens[pos]
            if tok == "+":
                sign = 1
                pos += 1
                continue
            if tok == "-":
                sign = -1
                pos += 1
                continue
            coeff = Fraction(sign * int(tok), scale)
            name = tokens[pos + 1]
            if coeff != 0:
                terms[col_index[name]] = terms.get(col_index[name], Fraction(0)) + coeff
            sign = 1
            pos += 2
        return terms

    for line in body_lines:
        lowered = line.lower()
        if lowered in ("maximize", "minimize"):
            maximize = lowered == "maximize"
            section = "objective"
            continue
        if lowered == "subject to":
            section = "constraints"
            continue
        if lowered == "bounds":
            section = "bounds"
            continue
        if lowered == "end":
            break
        if section == "objective":
            _, body = line.split(":", 1)
            objective = parse_terms(body, scales.get("obj", 1))
        elif section == "constraints":
            label, body = line.split(":", 1)
            label = label.strip()
            lhs, rhs = body.rsplit("=", 1)
            scale = scales.get(label, 1)
            rows.append(parse_terms(lhs, scale))
            b.append(Fraction(int(rhs), scale))
            row_names.append(label)
        elif section == "bounds":
            name, kind = line.split()
            if kind.lower() != "free":
                raise ValueError(f"unsupported bound line {line!r}")
            free.add(col_index[name])

    ncols = len(names)
    c = [objective.get(j, Fraction(0)) for j in range(ncols)]
    bounds = [FREE if j in free else NONNEG for j in range(ncols)]
    return StandardFormLP(
        ncols=ncols,
        rows=rows,
        b=b,
        c=c,
        bounds=bounds,
        maximize=maximize,
        names=names,
        row_names=row_names,
    )
