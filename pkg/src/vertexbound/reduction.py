"""Correlator rewriting against a complement basis, and the induced ODE.

Given modules ``U``, ``W`` over one algebra with chosen complement bases
``E = (p^i)`` of ``C_1(U)`` and ``F = (q^j)`` of ``C_1(W)``, any matrix
element ``<theta, Y(p,z) q>`` with ``theta`` annihilating ``C_1`` of the
target rewrites as a finite combination

    <theta, Y(p,z) q> = sum_{i,j} c_{ij}(z) <theta, Y(p^i,z) q^j>

with ``c_{ij}`` Laurent polynomials depending only on ``(p, q, E, F)``.
The two rewrite moves:

* left move, for ``p = v_{-1} a``: every coefficient of the creation
  half ``Y^-(v,z) Y(a,z) q`` lies in ``C_1`` of the target, so only

      <theta, Y(a,z) v_h q> * z^{-h-1},   h >= 0

  survives.  Weights strictly drop on both slots combined.
* right move, for ``q = v_{-1} b``: commuting ``v_{-1}`` across ``Y``
  leaves ``v_{-1}(...)`` in ``C_1`` plus the tail

      (-1)^{i+1} z^{-1-i} <theta, Y(v_i p, z) b>,   i >= 0.

  The sign carries the minus from moving the commutator to the other
  side; the free-boson matrix-element tests pin it down.

Iterating under a fixed decomposition order terminates and yields the
first-order system ``d/dz A = B A`` for ``A_{ij} = <theta, Y(p^i,z)q^j>``
by rewriting ``Y(L(-1)p^i, z) = d/dz Y(p^i,z)``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cofinite import ComplementBasis
from .errors import (
    InputShapeError,
    InternalInvariantViolation,
    TruncationError,
)
from .laurent import LaurentPoly, Q, QONE
from .linalg import ExactMatrix
from .modes import GradedVector, engine_for, mode_action, omega_vector


# ----------------------------------------------------------------------
# decomposition against the spanning set plus complement

class _SpanningSolver:
    """Per-level solver writing vectors as ``sum v_{-1} a + complement``.

    Columns are ordered spanning images first (ascending generator
    weight, then basis positions), complement monomials last, so the
    elimination prefers the ``C_1`` expression and the decomposition is
    reproducible.  Results are memoized per (level, coordinates).
    """

    def __init__(self, basis: ComplementBasis):
        self.basis = basis
        self.module = basis.module
        self._levels = {}
        self._memo = {}

    def _level_data(self, n: int):
        data = self._levels.get(n)
        if data is not None:
            return data
        module = self.module
        voa = module.voa
        engine = engine_for(module) if voa is not None else None
        pair_keys = []
        columns = []
        for wt in range(1, n + 1) if voa is not None else ():
            for v_key in voa.keys(wt):
                for a_key in module.keys(n - wt):
                    image = engine.apply_word(v_key, -1, a_key)
                    pair_keys.append((v_key, a_key))
                    columns.append(module.coords(image, n))
        comp_at_level = [
            (idx, vec)
            for idx, (vec, (lv, _)) in enumerate(zip(self.basis.vectors, self.basis.labels))
            if lv == n
        ]
        for _, vec in comp_at_level:
            columns.append(vec.coords_at(n))
        dim_n = module.dim(n)
        matrix = ExactMatrix.from_entries(
            dim_n,
            len(columns),
            {
                (i, j): c
                for j, col in enumerate(columns)
                for i, c in enumerate(col)
                if c
            },
        )
        data = (pair_keys, comp_at_level, matrix)
        self._levels[n] = data
        return data

    def decompose(self, vec: GradedVector):
        """Split a homogeneous vector; returns (pairs, complement part).

        ``pairs`` is a list of ``(v_key, a_key, coeff)`` with
        ``sum coeff * v_{-1} a + sum alpha_i p^i`` equal to the input;
        the complement part is ``[(complement_index, alpha)]``.
        """
        level = vec.homogeneous_level()
        if level is None:
            raise InputShapeError("decomposition requires a nonzero homogeneous vector")
        if vec.truncated:
            raise TruncationError("refusing to decompose a truncated vector")
        if level > self.basis.depth:
            raise TruncationError(
                f"level {level} lies outside the certified window (depth {self.basis.depth})"
            )
        coords = vec.coords_at(level)
        memo_key = (level, coords)
        cached = self._memo.get(memo_key)
        if cached is not None:
            return cached
        pair_keys, comp_at_level, matrix = self._level_data(level)
        solution = matrix.solve(list(coords))
        if solution is None:
            raise InternalInvariantViolation(
                f"level {level} of {self.module.describe()} is not spanned by "
                "C_1 plus the complement; the basis certificate is broken"
            )
        pairs = [
            (v_key, a_key, solution[col])
            for col, (v_key, a_key) in enumerate(pair_keys)
            if solution[col]
        ]
        offset = len(pair_keys)
        complement = [
            (idx, solution[offset + pos])
            for pos, (idx, _) in enumerate(comp_at_level)
            if solution[offset + pos]
        ]
        result = (pairs, complement)
        self._memo[memo_key] = result
        return result


def _solver_for(basis: ComplementBasis) -> _SpanningSolver:
    solver = getattr(basis, "_solver", None)
    if solver is None:
        solver = _SpanningSolver(basis)
        basis._solver = solver
    return solver


def express_in_c1_plus_complement(u: GradedVector, basis: ComplementBasis):
    """Write ``u = sum_k v^k_{-1} a^k + e`` with ``e`` in the complement.

    Returns ``(pairs, e)`` where each pair is a ``(v, a)`` of graded
    vectors with ``v`` homogeneous of positive weight, and the identity
    holds exactly.  The decomposition is the solver's canonical one and
    is independent of any target module.
    """
    if basis.module is not u.module:
        raise InputShapeError("vector and complement basis belong to different modules")
    if u.is_zero():
        return [], GradedVector.zero(u.module)
    module = u.module
    raw_pairs, complement = _solver_for(basis).decompose(u)
    pairs = [
        (GradedVector.basis_vector(module.voa, v_key).scale(coeff),
         GradedVector.basis_vector(module, a_key))
        for v_key, a_key, coeff in raw_pairs
    ]
    e = GradedVector.zero(module)
    for idx, alpha in complement:
        e = e + basis.vectors[idx].scale(alpha)
    return pairs, e


# ----------------------------------------------------------------------
# correlator combinations

class CorrelatorCombination:
    """Finite combination ``sum c_{ij}(z) <theta, Y(p^i,z) q^j>``.

    The entries live over the complement-label pairs of the two bases;
    the semantics are modulo ``C_1`` of any target, for functionals
    annihilating it.
    """

    __slots__ = ("left_basis", "right_basis", "_entries")

    def __init__(self, left_basis: ComplementBasis, right_basis: ComplementBasis,
                 entries=None):
        self.left_basis = left_basis
        self.right_basis = right_basis
        self._entries = {}
        if entries:
            for key, poly in entries.items():
                if not poly.is_zero():
                    self._entries[key] = poly

    @classmethod
    def unit(cls, left_basis, right_basis, i: int, j: int) -> "CorrelatorCombination":
        return cls(left_basis, right_basis, {(i, j): LaurentPoly.one()})

    def entry(self, i: int, j: int) -> LaurentPoly:
        return self._entries.get((i, j), LaurentPoly.zero())

    def items(self) -> list:
        return [(key, self._entries[key]) for key in sorted(self._entries)]

    def is_zero(self) -> bool:
        return not self._entries

    def accumulate(self, other: "CorrelatorCombination", factor: LaurentPoly) -> None:
        """In-place ``self += factor * other``."""
        if other.left_basis is not self.left_basis or other.right_basis is not self.right_basis:
            raise InputShapeError("combinations over different bases cannot be merged")
        for key, poly in other._entries.items():
            merged = self._entries.get(key, LaurentPoly.zero()) + factor * poly
            if merged.is_zero():
                self._entries.pop(key, None)
            else:
                self._entries[key] = merged

    def scale(self, factor) -> "CorrelatorCombination":
        factor = Q(factor)
        out = CorrelatorCombination(self.left_basis, self.right_basis)
        if factor:
            for key, poly in self._entries.items():
                out._entries[key] = poly * LaurentPoly.monomial(0, factor)
        return out

    def __add__(self, other):
        out = CorrelatorCombination(self.left_basis, self.right_basis, dict(self._entries))
        out.accumulate(other, LaurentPoly.one())
        return out

    def __eq__(self, other):
        if not isinstance(other, CorrelatorCombination):
            return NotImplemented
        return (
            self.left_basis is other.left_basis
            and self.right_basis is other.right_basis
            and self._entries == other._entries
        )

    def to_json(self) -> dict:
        return {
            "left": self.left_basis.module.describe(),
            "right": self.right_basis.module.describe(),
            "entries": [
                {"i": i, "j": j, "terms": poly.to_json_terms()}
                for (i, j), poly in self.items()
            ],
        }

    def __repr__(self):
        if self.is_zero():
            return "<0>"
        body = " + ".join(f"({poly!r})*A[{i},{j}]" for (i, j), poly in self.items())
        return f"<{body}>"


# ----------------------------------------------------------------------
# the rewrite engine

def _check_reduce_inputs(p, q, left_basis, right_basis):
    if left_basis.module is not p.module:
        raise InputShapeError("left argument does not live in the left basis module")
    if right_basis.module is not q.module:
        raise InputShapeError("right argument does not live in the right basis module")
    if left_basis.module.voa is not right_basis.module.voa:
        raise InputShapeError("both modules must share one algebra realization")
    if p.truncated or q.truncated:
        raise TruncationError("refusing to rewrite truncated vectors")
    if p.is_zero() or q.is_zero():
        return None
    lp, lq = p.homogeneous_level(), q.homogeneous_level()
    if lp is None or lq is None:
        raise InputShapeError("rewriting requires homogeneous arguments")
    total = lp + lq
    window = min(left_basis.depth, right_basis.depth)
    if total > window:
        raise TruncationError(
            f"total level {total} exceeds the certified window {window}"
        )
    return total


def reduce(p: GradedVector, q: GradedVector,
           left_basis: ComplementBasis, right_basis: ComplementBasis) -> CorrelatorCombination:
    """Rewrite ``<theta, Y(p,z)q>`` over the complement basis pairs.

    The coefficients depend only on ``(p, q)`` and the two bases; they
    are exact Laurent polynomials in ``z`` and ``z^{-1}``.
    """
    total = _check_reduce_inputs(p, q, left_basis, right_basis)
    if total is None:
        return CorrelatorCombination(left_basis, right_basis)
    return _reduce(p, q, left_basis, right_basis, total)


def _reduce(p, q, left_basis, right_basis, budget) -> CorrelatorCombination:
    out = CorrelatorCombination(left_basis, right_basis)
    if p.is_zero() or q.is_zero():
        return out
    lp, lq = p.homogeneous_level(), q.homogeneous_level()
    if lp + lq > budget:
        raise InternalInvariantViolation(
            "combined weight failed to decrease during rewriting"
        )
    voa = p.module.voa
    pairs, complement = _solver_for(left_basis).decompose(p)
    for v_key, a_key, coeff in pairs:
        # left move: only Y(a,z) v_h q with h >= 0 survives theta
        wt_v = voa.level_of(v_key)
        v_vec = GradedVector.basis_vector(voa, v_key)
        a_vec = GradedVector.basis_vector(p.module, a_key)
        for h in range(0, lq + wt_v):
            vq = mode_action(v_vec, h, q)
            if vq.truncated:
                raise InternalInvariantViolation("left move escaped the window")
            if vq.is_zero():
                continue
            sub = _reduce(a_vec, vq, left_basis, right_basis, lp + lq - 1)
            out.accumulate(sub, LaurentPoly.monomial(-h - 1, coeff))
    for idx, alpha in complement:
        part = _reduce_complement_left(idx, q, left_basis, right_basis, budget)
        out.accumulate(part, LaurentPoly.monomial(0, alpha))
    return out


def _reduce_complement_left(i: int, q, left_basis, right_basis, budget) -> CorrelatorCombination:
    """Rewrite with the left slot already the complement vector ``p^i``."""
    out = CorrelatorCombination(left_basis, right_basis)
    p_vec = left_basis.vectors[i]
    lp = left_basis.labels[i][0]
    lq = q.homogeneous_level()
    voa = p_vec.module.voa
    pairs, complement = _solver_for(right_basis).decompose(q)
    for v_key, b_key, coeff in pairs:
        # right move: commuting v_{-1} across Y leaves the signed tail
        wt_v = voa.level_of(v_key)
        v_vec = GradedVector.basis_vector(voa, v_key)
        b_vec = GradedVector.basis_vector(q.module, b_key)
        for m in range(0, lp + wt_v):
            vp = mode_action(v_vec, m, p_vec)
            if vp.truncated:
                raise InternalInvariantViolation("right move escaped the window")
            if vp.is_zero():
                continue
            sub = _reduce(vp, b_vec, left_basis, right_basis, lp + lq - 1)
            sign = -coeff if m % 2 == 0 else coeff
            out.accumulate(sub, LaurentPoly.monomial(-1 - m, sign))
    for j, beta in complement:
        out.accumulate(
            CorrelatorCombination.unit(left_basis, right_basis, i, j),
            LaurentPoly.monomial(0, beta),
        )
    return out


# ----------------------------------------------------------------------
# the first-order system and the fusion bound

@dataclass
class OdeSystem:
    """First-order system ``d/dz A = B(z) A`` over complement-pair labels."""

    left: str
    right: str
    dimension: int
    labels: list
    entries: dict
    pole_order: int

    def entry(self, row: int, col: int) -> LaurentPoly:
        return self.entries.get((row, col), LaurentPoly.zero())

    def series_blocks(self) -> dict:
        """Matrix coefficients ``B_k`` of ``B(z) = sum_k B_k z^k``."""
        powers = sorted({p for poly in self.entries.values() for p in poly.terms})
        blocks = {}
        for power in powers:
            blocks[power] = ExactMatrix.from_entries(
                self.dimension,
                self.dimension,
                {
                    (r, c): poly.coeff(power)
                    for (r, c), poly in self.entries.items()
                    if poly.coeff(power)
                },
            )
        return blocks

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "labels": [list(label) for label in self.labels],
            "entries": [
                {"row": row, "col": col, "terms": self.entries[(row, col)].to_json_terms()}
                for row, col in sorted(self.entries)
            ],
            "pole_order": self.pole_order,
        }


def assemble_ode(left_basis: ComplementBasis, right_basis: ComplementBasis) -> OdeSystem:
    """Build ``B`` with row ``(i,j)`` rewriting ``<theta, Y(L(-1)p^i,z) q^j>``.

    Uses ``d/dz Y(p,z) = Y(L(-1)p, z)``, so ``d/dz A = B A`` exactly on
    the span of the rewritten correlators.  For direct sums the system
    is block diagonal over summand pairs by construction.
    """
    if left_basis.module.voa is not right_basis.module.voa:
        raise InputShapeError("both modules must share one algebra realization")
    voa = left_basis.module.voa
    omega = omega_vector(voa)
    labels = [
        (i, j)
        for i in range(len(left_basis))
        for j in range(len(right_basis))
    ]
    index = {label: pos for pos, label in enumerate(labels)}
    entries = {}
    for (i, j), row in ((label, index[label]) for label in labels):
        p_i = left_basis.vectors[i]
        q_j = right_basis.vectors[j]
        shifted = mode_action(omega, 0, p_i)  # L(-1) p^i
        if shifted.truncated:
            raise TruncationError(
                "L(-1) pushed a complement vector past the realization depth"
            )
        comb = reduce(shifted, q_j, left_basis, right_basis)
        for (i2, j2), poly in comb.items():
            entries[(row, index[(i2, j2)])] = poly
    pole = 0
    for poly in entries.values():
        low = poly.min_exponent()
        if low is not None and low < 0:
            pole = max(pole, -low)
    return OdeSystem(
        left=left_basis.module.describe(),
        right=right_basis.module.describe(),
        dimension=len(labels),
        labels=labels,
        entries=entries,
        pole_order=pole,
    )


@dataclass
class FusionBound:
    """Solution-space bound ``f_1(U,W)`` with per-summand provenance.

    Each summand pair contributes the dimension of its first-order
    system, ``|I_r| * |J_k|``; a first-order linear system of that size
    has at most that many independent solutions on a simply connected
    domain avoiding the singular point, logarithms included.
    """

    left: str
    right: str
    value: int
    provenance: list

    def to_json(self) -> dict:
        return {
            "left": self.left,
            "right": self.right,
            "value": self.value,
            "provenance": self.provenance,
            "convention": "dim T/C_1(T) <= value for every surjective target",
        }


def _complement_blocks(basis: ComplementBasis) -> list:
    if basis.summands is not None:
        return list(basis.summands)
    return [basis]


def fusion_bound(left_basis: ComplementBasis, right_basis: ComplementBasis) -> FusionBound:
    """Aggregate ``sum_{r,k} |I_r| * |J_k|`` over declared summand pairs."""
    provenance = []
    total = 0
    for lpart in _complement_blocks(left_basis):
        for rpart in _complement_blocks(right_basis):
            product = len(lpart) * len(rpart)
            total += product
            provenance.append({
                "left": lpart.module.describe(),
                "right": rpart.module.describe(),
                "left_dim": len(lpart),
                "right_dim": len(rpart),
                "product": product,
            })
    return FusionBound(
        left=left_basis.module.describe(),
        right=right_basis.module.describe(),
        value=total,
        provenance=provenance,
    )
