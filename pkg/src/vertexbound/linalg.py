"""Exact linear algebra over the rationals.

Everything here is deterministic: row reduction always eliminates with the
leftmost available pivot column and, among rows with a nonzero entry in
that column, the smallest row index.  Rank, reduced row echelon form,
nullspace bases, and membership solutions are therefore reproducible
across runs, worker counts, and storage layouts.

Matrices keep their entries either densely (row-major lists) or as a
sparse map, chosen by a 25% density heuristic at construction time; the
choice is invisible in every computed result.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InputShapeError
from .laurent import Q, QONE, QZERO

#: Matrices with at most this fraction of nonzero entries store a sparse map.
SPARSE_DENSITY_THRESHOLD = Fraction(1, 4)


class ExactMatrix:
    """A rows-by-cols matrix of exact rationals.

    The internal storage is an implementation detail; all arithmetic and
    reduction routines produce identical results for dense and sparse
    layouts, which the test suite checks by forcing both.
    """

    __slots__ = ("rows", "cols", "_dense", "_sparse")

    def __init__(self, rows: int, cols: int, dense=None, sparse=None):
        if rows < 0 or cols < 0:
            raise InputShapeError("matrix dimensions must be non-negative")
        self.rows = rows
        self.cols = cols
        self._dense = dense
        self._sparse = sparse

    # ------------------------------------------------------------------
    # construction

    @classmethod
    def from_rows(cls, data, cols=None, storage=None) -> "ExactMatrix":
        """Build from an iterable of rows (sequences of rationals).

        ``cols`` is only needed when ``data`` is empty.  ``storage`` may
        force ``"dense"`` or ``"sparse"``; by default the density
        heuristic decides.
        """
        data = [list(map(Q, row)) for row in data]
        nrows = len(data)
        if nrows == 0:
            if cols is None:
                raise InputShapeError("empty matrix needs an explicit column count")
            ncols = cols
        else:
            ncols = len(data[0])
            if cols is not None and cols != ncols:
                raise InputShapeError("declared column count does not match rows")
            if any(len(row) != ncols for row in data):
                raise InputShapeError("ragged rows in matrix construction")
        entries = {
            (i, j): c
            for i, row in enumerate(data)
            for j, c in enumerate(row)
            if c
        }
        return cls._build(nrows, ncols, entries, storage)

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries, storage=None) -> "ExactMatrix":
        """Build from a ``{(i, j): value}`` map of nonzero entries."""
        clean = {}
        for (i, j), value in entries.items():
            if not (0 <= i < rows and 0 <= j < cols):
                raise InputShapeError(f"entry index {(i, j)} outside {rows}x{cols}")
            c = Q(value)
            if c:
                clean[(i, j)] = c
        return cls._build(rows, cols, clean, storage)

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        return cls.from_entries(n, n, {(i, i): QONE for i in range(n)})

    @classmethod
    def _build(cls, rows, cols, entries, storage):
        total = rows * cols
        if storage is None:
            storage = "sparse" if total and Fraction(len(entries), total) <= SPARSE_DENSITY_THRESHOLD else "dense"
            if total == 0:
                storage = "sparse"
        if storage == "sparse":
            return cls(rows, cols, sparse=dict(sorted(entries.items())))
        dense = [[QZERO] * cols for _ in range(rows)]
        for (i, j), c in entries.items():
            dense[i][j] = c
        return cls(rows, cols, dense=dense)

    # ------------------------------------------------------------------
    # access

    @property
    def storage(self) -> str:
        return "dense" if self._dense is not None else "sparse"

    def entry(self, i: int, j: int) -> Q:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise InputShapeError(f"index {(i, j)} outside {self.rows}x{self.cols}")
        if self._dense is not None:
            return self._dense[i][j]
        return self._sparse.get((i, j), QZERO)

    def row(self, i: int) -> tuple:
        return tuple(self.entry(i, j) for j in range(self.cols))

    def to_lists(self) -> list:
        return [list(self.row(i)) for i in range(self.rows)]

    def nonzero_entries(self) -> dict:
        if self._sparse is not None:
            return dict(self._sparse)
        return {
            (i, j): c
            for i, row in enumerate(self._dense)
            for j, c in enumerate(row)
            if c
        }

    def __eq__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and self.nonzero_entries() == other.nonzero_entries()
        )

    def __repr__(self):
        return f"ExactMatrix({self.rows}x{self.cols}, {self.storage})"

    # ------------------------------------------------------------------
    # arithmetic

    def transpose(self) -> "ExactMatrix":
        return ExactMatrix._build(
            self.cols,
            self.rows,
            {(j, i): c for (i, j), c in self.nonzero_entries().items()},
            None,
        )

    def matvec(self, vec) -> tuple:
        vec = [Q(v) for v in vec]
        if len(vec) != self.cols:
            raise InputShapeError("vector length does not match column count")
        out = [QZERO] * self.rows
        for (i, j), c in self.nonzero_entries().items():
            if vec[j]:
                out[i] += c * vec[j]
        return tuple(out)

    def matmul(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.cols != other.rows:
            raise InputShapeError("inner dimensions do not match")
        mine = self.nonzero_entries()
        theirs = {}
        for (k, j), c in other.nonzero_entries().items():
            theirs.setdefault(k, []).append((j, c))
        out = {}
        for (i, k), a in mine.items():
            for j, b in theirs.get(k, ()):
                key = (i, j)
                s = out.get(key, QZERO) + a * b
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return ExactMatrix._build(self.rows, other.cols, out, None)

    # ------------------------------------------------------------------
    # reduction

    def _working_rows(self) -> list:
        """Mutable sparse copies of the rows, for elimination."""
        rows = [dict() for _ in range(self.rows)]
        for (i, j), c in self.nonzero_entries().items():
            rows[i][j] = c
        return rows

    def rref(self):
        """Reduced row echelon form.

        Returns ``(matrix, pivot_columns)`` where the pivots appear in
        strictly increasing column order, one per leading row.  The
        pivoting rule (leftmost column, then smallest row index) makes
        the output canonical for a given matrix.
        """
        work = self._working_rows()
        pivots = _eliminate(work, self.cols)
        entries = {
            (i, j): c
            for i, row in enumerate(work)
            for j, c in sorted(row.items())
        }
        return ExactMatrix._build(self.rows, self.cols, entries, None), pivots

    def rank(self) -> int:
        work = self._working_rows()
        return len(_eliminate(work, self.cols))

    def nullspace(self) -> list:
        """Canonical basis of the right kernel.

        One vector per free column, in ascending column order; the free
        coordinate is 1 and earlier free coordinates are 0.
        """
        reduced, pivots = self.rref()
        pivot_cols = [c for _, c in pivots]
        pivot_set = set(pivot_cols)
        free_cols = [j for j in range(self.cols) if j not in pivot_set]
        basis = []
        for free in free_cols:
            vec = [QZERO] * self.cols
            vec[free] = QONE
            for row_index, col in pivots:
                vec[col] = -reduced.entry(row_index, free)
            basis.append(tuple(vec))
        return basis

    def solve(self, rhs):
        """One exact solution of ``A x = rhs``, or None if inconsistent.

        Free variables are set to zero, so the answer is canonical.
        """
        rhs = [Q(v) for v in rhs]
        if len(rhs) != self.rows:
            raise InputShapeError("right-hand side length does not match row count")
        work = self._working_rows()
        for i, value in enumerate(rhs):
            if value:
                work[i][self.cols] = value
        pivots = _eliminate(work, self.cols + 1)
        solution = [QZERO] * self.cols
        for row_index, col in pivots:
            if col == self.cols:
                return None
            solution[col] = work[row_index].get(self.cols, QZERO)
        return tuple(solution)


def _eliminate(rows: list, width: int) -> list:
    """In-place Gauss-Jordan elimination on sparse row dicts.

    Returns the pivot list ``[(row, col), ...]`` in elimination order.
    Deterministic: scans columns left to right and picks the surviving
    row with the smallest index.
    """
    pivots = []
    next_row = 0
    nrows = len(rows)
    for col in range(width):
        pivot_row = None
        for i in range(next_row, nrows):
            if rows[i].get(col):
                pivot_row = i
                break
        if pivot_row is None:
            continue
        rows[next_row], rows[pivot_row] = rows[pivot_row], rows[next_row]
        pivot = rows[next_row]
        inv = QONE / pivot[col]
        if inv != QONE:
            for j in list(pivot):
                pivot[j] *= inv
        for i in range(nrows):
            if i == next_row:
                continue
            factor = rows[i].get(col)
            if not factor:
                continue
            target = rows[i]
            for j, c in pivot.items():
                s = target.get(j, QZERO) - factor * c
                if s:
                    target[j] = s
                else:
                    target.pop(j, None)
        pivots.append((next_row, col))
        next_row += 1
        if next_row == nrows:
            break
    return pivots


def solve_membership(basis_vectors, target):
    """Express ``target`` over ``basis_vectors``, or None if impossible.

    ``basis_vectors`` is a sequence of equal-length coordinate vectors;
    the result is the canonical coefficient tuple of the deterministic
    solver (free coefficients zero).
    """
    vectors = [tuple(map(Q, v)) for v in basis_vectors]
    target = tuple(map(Q, target))
    if any(len(v) != len(target) for v in vectors):
        raise InputShapeError("membership vectors must share one length")
    if not vectors:
        return () if not any(target) else None
    columns = ExactMatrix._build(
        len(target),
        len(vectors),
        {
            (i, j): c
            for j, vec in enumerate(vectors)
            for i, c in enumerate(vec)
            if c
        },
        None,
    )
    return columns.solve(target)


class RowSpan:
    """An incrementally maintained row space in reduced echelon form.

    Supports exact membership queries and rank bookkeeping while basis
    vectors stream in; used for spanning-set and complement computations
    where re-reducing from scratch per vector would be wasteful.
    """

    def __init__(self, width: int):
        self.width = width
        self._rows = []  # list of (pivot_col, sparse row dict with pivot 1)

    @property
    def rank(self) -> int:
        return len(self._rows)

    def pivot_columns(self) -> tuple:
        """Leading columns of the reduced rows, ascending."""
        return tuple(col for col, _ in self._rows)

    def reduce(self, vec) -> dict:
        """Residual of ``vec`` after elimination against the span."""
        residual = {j: Q(c) for j, c in enumerate(vec) if c}
        if len(vec) != self.width:
            raise InputShapeError("vector width does not match span")
        for pivot_col, row in self._rows:
            factor = residual.get(pivot_col)
            if not factor:
                continue
            for j, c in row.items():
                s = residual.get(j, QZERO) - factor * c
                if s:
                    residual[j] = s
                else:
                    residual.pop(j, None)
        return residual

    def contains(self, vec) -> bool:
        return not self.reduce(vec)

    def add(self, vec) -> bool:
        """Add a vector; returns True when it enlarged the span."""
        residual = self.reduce(vec)
        if not residual:
            return False
        pivot_col = min(residual)
        inv = QONE / residual[pivot_col]
        row = {j: c * inv for j, c in residual.items()}
        for _, existing in self._rows:
            factor = existing.get(pivot_col)
            if not factor:
                continue
            for j, c in row.items():
                s = existing.get(j, QZERO) - factor * c
                if s:
                    existing[j] = s
                else:
                    existing.pop(j, None)
        self._rows.append((pivot_col, row))
        self._rows.sort(key=lambda item: item[0])
        return True

    def basis_rows(self) -> list:
        """Current reduced rows as coordinate tuples, by pivot column."""
        out = []
        for _, row in self._rows:
            vec = [QZERO] * self.width
            for j, c in row.items():
                vec[j] = c
            out.append(tuple(vec))
        return out
