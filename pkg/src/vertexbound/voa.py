"""Concrete graded realizations of vertex algebras and their modules.

Two families are realized exactly:

* the rank-one Heisenberg (free boson) algebra with basis monomials
  ``a(-n_1)...a(-n_k)|q>`` indexed by partitions, acting on Fock modules
  of arbitrary rational charge, and
* the universal Virasoro algebra at rational central charge with basis
  ``L(-n_1)...L(-n_k)|0>`` (parts >= 2), acting on Verma modules and on
  quotients by verified singular vectors.

A realization carries a truncation depth ``D`` used by the public layer,
but its internal basis and generator action are exact at every level, so
no rounding or silent dropping happens here.  Elements at the raw level
are dicts mapping basis keys to nonzero rationals; a basis key is a
partition tuple in descending order (possibly wrapped with a summand
index for direct sums).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import InputShapeError
from .laurent import Q, QONE, QZERO, format_rational
from .linalg import RowSpan


# ----------------------------------------------------------------------
# partitions and raw element helpers

@lru_cache(maxsize=None)
def partitions_of(n: int, min_part: int = 1) -> tuple:
    """All partitions of ``n`` with parts >= ``min_part``.

    Each partition is a descending tuple; the list is in ascending
    lexicographic order, so ``(1, 1, 1)`` precedes ``(2, 1)`` precedes
    ``(3,)``.  This order is the tie-breaking order everywhere basis
    monomials are enumerated.
    """
    if n < 0:
        return ()
    if n == 0:
        return ((),)
    out = []

    def _extend(prefix, remaining, largest):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for part in range(min(largest, remaining), min_part - 1, -1):
            prefix.append(part)
            _extend(prefix, remaining - part, part)
            prefix.pop()

    _extend([], n, n)
    out.sort()
    return tuple(out)


def _insert_part(key: tuple, part: int) -> tuple:
    """Insert one part into a descending tuple, keeping it sorted."""
    for i, existing in enumerate(key):
        if part >= existing:
            return key[:i] + (part,) + key[i:]
    return key + (part,)


def _remove_part(key: tuple, part: int) -> tuple:
    i = key.index(part)
    return key[:i] + key[i + 1:]


def raw_acc(out: dict, key, coeff) -> None:
    """Accumulate ``coeff * key`` into a raw element in place."""
    s = out.get(key, QZERO) + coeff
    if s:
        out[key] = s
    else:
        out.pop(key, None)


def raw_combine(out: dict, other: dict, factor=QONE) -> None:
    if not factor:
        return
    for key, coeff in other.items():
        raw_acc(out, key, coeff * factor)


def raw_scaled(raw: dict, factor) -> dict:
    factor = Q(factor)
    if not factor:
        return {}
    return {key: coeff * factor for key, coeff in raw.items()}


class LevelCapExceeded(Exception):
    """Internal signal: a hard-capped realization was pushed past its cap.

    Never escapes the public layer; callers convert it into a truncation
    flag or a :class:`~vertexbound.errors.TruncationError`.
    """


# ----------------------------------------------------------------------
# declarative specifications

@dataclass(frozen=True)
class VoaSpec:
    """Declarative description of a vertex algebra.

    ``kind`` is one of ``"heisenberg"``, ``"virasoro"``, or
    ``"virasoro-quotient"``; the latter two carry a central charge and a
    quotient additionally carries homogeneous singular vectors given as
    tuples of ``(partition, coefficient)`` pairs over the vacuum basis.
    """

    kind: str
    central_charge: Q | None = None
    singular_vectors: tuple = ()

    def describe(self) -> str:
        if self.kind == "heisenberg":
            return "Heisenberg"
        c = format_rational(self.central_charge)
        if self.kind == "virasoro":
            return f"Virasoro(c={c})"
        return f"VirasoroQuotient(c={c})"


@dataclass(frozen=True)
class ModuleSpec:
    """Declarative description of a graded module.

    Kinds: ``"fock"`` (rational ``charge``), ``"verma"`` (rational
    ``highest_weight``), ``"quotient"`` (Verma data plus singular
    vectors), and ``"direct-sum"`` (a tuple of summand specs).
    """

    kind: str
    charge: Q | None = None
    highest_weight: Q | None = None
    singular_vectors: tuple = ()
    summands: tuple = ()

    def describe(self) -> str:
        if self.kind == "fock":
            return f"Fock({format_rational(self.charge)})"
        if self.kind == "verma":
            return f"Verma(h={format_rational(self.highest_weight)})"
        if self.kind == "quotient":
            return f"Quotient(h={format_rational(self.highest_weight)})"
        inner = ", ".join(s.describe() for s in self.summands)
        return f"DirectSum({inner})"


def level2_singular_vector(central_charge, highest_weight) -> tuple:
    """The level-two singular vector data for a Verma module.

    Returns ``(L(-1)^2 - (2(2h+1)/3) L(-2))|h>`` as spec data.  The
    vector is singular precisely on the curve
    ``c = 2h(5 - 8h) / (2h + 1)``; constructing a quotient verifies that
    and rejects parameters off the curve.
    """
    h = Q(highest_weight)
    return (((1, 1), QONE), ((2,), -Q(2) * (2 * h + 1) / 3))


# ----------------------------------------------------------------------
# realization machinery

class BaseRealization:
    """Shared bookkeeping for graded bases with a truncation depth."""

    hard_cap = None
    is_voa = False

    def __init__(self, depth: int):
        if depth < 0:
            raise InputShapeError("truncation depth must be non-negative")
        self.depth = depth
        self._index_cache = {}

    # subclasses provide: keys(n), level_of(key), weight_of(key),
    # apply_gen(k, key), label(key), lowest_weight, voa, spec

    def dim(self, n: int) -> int:
        return len(self.keys(n))

    def index(self, key) -> int:
        """Position of ``key`` in the ordered basis of its level."""
        level = self.level_of(key)
        table = self._index_cache.get(level)
        if table is None:
            table = {k: i for i, k in enumerate(self.keys(level))}
            self._index_cache[level] = table
        try:
            return table[key]
        except KeyError:
            raise InputShapeError(f"{key!r} is not a basis key of {self.describe()}")

    def coords(self, raw: dict, level: int) -> tuple:
        """Coordinates of a raw element over the level's ordered basis."""
        vec = [QZERO] * self.dim(level)
        for key, coeff in raw.items():
            if self.level_of(key) != level:
                raise InputShapeError("raw element is not homogeneous at the requested level")
            vec[self.index(key)] = coeff
        return tuple(vec)

    def from_coords(self, coords, level: int) -> dict:
        keys = self.keys(level)
        if len(coords) != len(keys):
            raise InputShapeError("coordinate length does not match the level dimension")
        return {keys[i]: Q(c) for i, c in enumerate(coords) if c}

    def describe(self) -> str:
        return self.spec.describe()

    def __repr__(self):
        return f"<{self.describe()} depth={self.depth}>"


class _PartitionBasis(BaseRealization):
    """Basis indexed by partitions with a fixed minimum part."""

    min_part = 1

    def keys(self, n: int) -> tuple:
        return partitions_of(n, self.min_part)

    def level_of(self, key) -> int:
        return sum(key)

    def weight_of(self, key) -> Q:
        return self.lowest_weight + self.level_of(key)


class _OscillatorAction:
    """Action of the Heisenberg generator modes on partition monomials.

    ``a(k)`` for ``k < 0`` inserts a part; ``a(0)`` is multiplication by
    the charge; ``a(k)`` for ``k > 0`` contracts against equal parts with
    the bracket ``[a(m), a(n)] = m delta_{m+n,0}``.
    """

    def apply_gen(self, k: int, key) -> dict:
        if k < 0:
            return {_insert_part(key, -k): QONE}
        if k == 0:
            return {key: self.charge} if self.charge else {}
        count = key.count(k)
        if not count:
            return {}
        return {_remove_part(key, k): Q(k * count)}


class _VirasoroAction:
    """PBW straightening for Virasoro modes on partition monomials.

    ``apply_gen(k, key)`` is the mode ``L(k - 1)`` of the conformal
    vector.  Out-of-order products are straightened recursively with
    ``[L(m), L(n)] = (m - n) L(m+n) + c/12 (m^3 - m) delta_{m+n,0}``;
    results are memoized per realization.
    """

    def apply_gen(self, k: int, key) -> dict:
        return self._L(k - 1, key)

    def _L(self, n: int, key) -> dict:
        cache = self._L_cache
        found = cache.get((n, key))
        if found is None:
            found = self._compute_L(n, key)
            cache[(n, key)] = found
        return found

    def _compute_L(self, n: int, key) -> dict:
        if not key:
            return self._L_on_lowest(n)
        m1 = key[0]
        if n <= -m1:
            return {(-n,) + key: QONE}
        rest = key[1:]
        out = {}
        for mid_key, mid_coeff in self._L(n, rest).items():
            for fin_key, fin_coeff in self._L(-m1, mid_key).items():
                raw_acc(out, fin_key, mid_coeff * fin_coeff)
        factor = Q(n + m1)
        if factor:
            raw_combine(out, self._L(n - m1, rest), factor)
        if n == m1:
            central = self.central_charge * Q(n ** 3 - n, 12)
            if central:
                raw_combine(out, {rest: QONE}, central)
        return out


class HeisenbergVoa(_OscillatorAction, _PartitionBasis):
    """Rank-one free boson vacuum algebra, truncated at ``depth``.

    The adjoint module has basis ``a(-n_1)...a(-n_k)|0>`` over partitions
    of each level; the conformal vector is ``a(-1)^2 |0> / 2`` with
    central charge 1, so the generator weight is 1.
    """

    is_voa = True
    gen_weight = 1
    min_part = 1

    def __init__(self, depth: int):
        super().__init__(depth)
        self.voa = self
        self.charge = QZERO
        self.lowest_weight = QZERO
        self.spec = VoaSpec(kind="heisenberg")
        self.vacuum_key = ()
        self.generator_raw = {(1,): QONE}
        self.omega_raw = {(1, 1): Q(1, 2)}
        self.central_charge = QONE

    def label(self, key) -> str:
        word = "".join(f"a(-{p})" for p in key)
        return word + "|0>" if word else "|0>"


class FockModule(_OscillatorAction, _PartitionBasis):
    """Irreducible Fock module of rational charge over the free boson.

    Lowest weight ``charge^2 / 2`` under the quadratic conformal vector.
    """

    min_part = 1

    def __init__(self, voa: HeisenbergVoa, charge, depth: int | None = None):
        if not isinstance(voa, HeisenbergVoa):
            raise InputShapeError("Fock modules require a Heisenberg algebra")
        super().__init__(voa.depth if depth is None else depth)
        self.voa = voa
        self.charge = Q(charge)
        self.lowest_weight = self.charge * self.charge / 2
        self.spec = ModuleSpec(kind="fock", charge=self.charge)

    def label(self, key) -> str:
        word = "".join(f"a(-{p})" for p in key)
        return word + f"|{format_rational(self.charge)}>"


class VirasoroVoa(_VirasoroAction, _PartitionBasis):
    """Universal Virasoro vacuum algebra at rational central charge.

    Vacuum basis over partitions with parts >= 2; ``L(-1)|0> = 0`` and
    positive modes annihilate the vacuum.
    """

    is_voa = True
    gen_weight = 2
    min_part = 2

    def __init__(self, central_charge, depth: int):
        super().__init__(depth)
        self.voa = self
        self.central_charge = Q(central_charge)
        self.lowest_weight = QZERO
        self.spec = VoaSpec(kind="virasoro", central_charge=self.central_charge)
        self.vacuum_key = ()
        self.generator_raw = {(2,): QONE}
        self.omega_raw = {(2,): QONE}
        self._L_cache = {}

    def _L_on_lowest(self, n: int) -> dict:
        if n <= -2:
            return {(-n,): QONE}
        return {}

    def label(self, key) -> str:
        word = "".join(f"L(-{p})" for p in key)
        return word + "|0>" if word else "|0>"


class VermaModule(_VirasoroAction, _PartitionBasis):
    """Verma module of highest weight ``h`` over the Virasoro algebra."""

    min_part = 1

    def __init__(self, voa: VirasoroVoa, highest_weight, depth: int | None = None):
        if not isinstance(voa, VirasoroVoa):
            raise InputShapeError("Verma modules require a Virasoro algebra")
        super().__init__(voa.depth if depth is None else depth)
        self.voa = voa
        self.central_charge = voa.central_charge
        self.highest_weight = Q(highest_weight)
        self.lowest_weight = self.highest_weight
        self.spec = ModuleSpec(kind="verma", highest_weight=self.highest_weight)
        self._L_cache = {}

    def _L_on_lowest(self, n: int) -> dict:
        if n <= -1:
            return {(-n,): QONE}
        if n == 0:
            return {(): self.highest_weight} if self.highest_weight else {}
        return {}

    def label(self, key) -> str:
        word = "".join(f"L(-{p})" for p in key)
        return word + f"|h={format_rational(self.highest_weight)}>"


class _QuotientBasis(BaseRealization):
    """Quotient of a partition-basis realization by singular vectors.

    The submodule spanned by creation words on the given vectors is row
    reduced level by level; the monomials at non-pivot columns form the
    canonical quotient basis, and every parent element reduces uniquely
    against the pivot rows.  Data is built lazily per level and is exact
    at any level, so the quotient inherits the parent's unbounded
    internal range.
    """

    def __init__(self, parent, singular_vectors, depth: int):
        super().__init__(depth)
        self.parent = parent
        self.voa = parent.voa
        self.lowest_weight = parent.lowest_weight
        self._levels = {}
        self._singular = []
        for vector in singular_vectors:
            raw = {tuple(partition): Q(coeff) for partition, coeff in vector}
            self._validate_singular(raw)
            self._singular.append(raw)

    def _validate_singular(self, raw: dict) -> None:
        if not raw:
            raise InputShapeError("a singular vector must be nonzero")
        levels = {self.parent.level_of(key) for key in raw}
        if len(levels) != 1:
            raise InputShapeError("a singular vector must be homogeneous")
        (level,) = levels
        if level < 1:
            raise InputShapeError("a singular vector must sit at a positive level")
        # singularity under the positive half: L(1) and L(2) generate it
        for positive_mode in (2, 3):
            image = {}
            for key, coeff in raw.items():
                raw_combine(image, self.parent.apply_gen(positive_mode, key), coeff)
            if image:
                raise InputShapeError(
                    f"vector at level {level} is not singular: L({positive_mode - 1}) image is nonzero"
                )

    def _level_data(self, n: int):
        data = self._levels.get(n)
        if data is not None:
            return data
        parent_keys = self.parent.keys(n)
        span = RowSpan(len(parent_keys))
        for raw in self._singular:
            s_level = self.parent.level_of(next(iter(raw)))
            for word in partitions_of(n - s_level, 1):
                vector = raw
                for part in reversed(word):
                    image = {}
                    for key, coeff in vector.items():
                        raw_combine(image, self.parent.apply_gen(1 - part, key), coeff)
                    vector = image
                span.add(self.parent.coords(vector, n))
        # non-pivot columns survive: their monomials form the quotient basis
        pivot_cols = set(span.pivot_columns())
        quotient_keys = tuple(key for i, key in enumerate(parent_keys) if i not in pivot_cols)
        data = (quotient_keys, span, parent_keys)
        self._levels[n] = data
        return data

    def keys(self, n: int) -> tuple:
        return self._level_data(n)[0]

    def level_of(self, key) -> int:
        return self.parent.level_of(key)

    def weight_of(self, key) -> Q:
        return self.parent.weight_of(key)

    def reduce_parent_raw(self, raw: dict) -> dict:
        """Image of a parent raw element in the quotient basis."""
        out = {}
        by_level = {}
        for key, coeff in raw.items():
            by_level.setdefault(self.parent.level_of(key), {})[key] = coeff
        for level, part in by_level.items():
            quotient_keys, span, parent_keys = self._level_data(level)
            residual = span.reduce(self.parent.coords(part, level))
            for col, coeff in residual.items():
                raw_acc(out, parent_keys[col], coeff)
        return out

    def apply_gen(self, k: int, key) -> dict:
        return self.reduce_parent_raw(self.parent.apply_gen(k, key))

    def label(self, key) -> str:
        return self.parent.label(key)


class QuotientModule(_QuotientBasis):
    """Quotient of a Verma module by verified singular vectors."""

    def __init__(self, verma: VermaModule, singular_vectors, depth: int | None = None):
        if not isinstance(verma, VermaModule):
            raise InputShapeError("module quotients are built from Verma modules")
        super().__init__(verma, singular_vectors, verma.depth if depth is None else depth)
        self.highest_weight = verma.highest_weight
        self.central_charge = verma.central_charge
        self.spec = ModuleSpec(
            kind="quotient",
            highest_weight=verma.highest_weight,
            singular_vectors=tuple(
                tuple((key, coeff) for key, coeff in sorted(raw.items()))
                for raw in self._singular
            ),
        )


class VirasoroQuotientVoa(_QuotientBasis):
    """Quotient of the universal Virasoro algebra by vacuum singular vectors."""

    is_voa = True
    gen_weight = 2

    def __init__(self, central_charge, singular_vectors, depth: int):
        parent = VirasoroVoa(central_charge, depth)
        super().__init__(parent, singular_vectors, depth)
        self.voa = self
        self.central_charge = parent.central_charge
        self.vacuum_key = ()
        self.generator_raw = {(2,): QONE}
        self.omega_raw = {(2,): QONE}
        self.spec = VoaSpec(
            kind="virasoro-quotient",
            central_charge=self.central_charge,
            singular_vectors=tuple(
                tuple((key, coeff) for key, coeff in sorted(raw.items()))
                for raw in self._singular
            ),
        )


class DirectSumModule(BaseRealization):
    """Finite direct sum of module realizations over one algebra.

    Keys are ``(summand_index, inner_key)``; a level of the sum is the
    concatenation of the summand levels in order.  The empty sum is the
    zero module.
    """

    def __init__(self, summands, depth: int | None = None):
        summands = tuple(summands)
        if summands:
            voa = summands[0].voa
            if any(s.voa is not voa for s in summands):
                raise InputShapeError("direct summands must share one algebra realization")
            if depth is None:
                depth = min(s.depth for s in summands)
        else:
            voa = None
            if depth is None:
                depth = 0
        super().__init__(depth)
        self.summands = summands
        self.voa = voa
        self.lowest_weight = min((s.lowest_weight for s in summands), default=QZERO)
        self.spec = ModuleSpec(kind="direct-sum", summands=tuple(s.spec for s in summands))

    def keys(self, n: int) -> tuple:
        return tuple(
            (i, key)
            for i, summand in enumerate(self.summands)
            for key in summand.keys(n)
        )

    def level_of(self, key) -> int:
        i, inner = key
        return self.summands[i].level_of(inner)

    def weight_of(self, key) -> Q:
        i, inner = key
        return self.summands[i].weight_of(inner)

    def apply_gen(self, k: int, key) -> dict:
        i, inner = key
        return {
            (i, result_key): coeff
            for result_key, coeff in self.summands[i].apply_gen(k, inner).items()
        }

    def label(self, key) -> str:
        i, inner = key
        return f"[{i}]{self.summands[i].label(inner)}"


def singular_vectors_at(realization, level: int) -> list:
    """Kernel of the positive-half action on one level, as raw elements.

    For Virasoro-type realizations the positive half is generated by
    L(1) and L(2), so a vector killed by both generator modes 2 and 3 is
    singular.  Returns the canonical nullspace basis; empty at a generic
    level.
    """
    from .linalg import ExactMatrix

    keys = realization.keys(level)
    if not keys:
        return []
    rows = {}
    row_offset = 0
    for positive_mode in (2, 3):
        target_level = level + realization.voa.gen_weight - positive_mode - 1
        target_dim = realization.dim(target_level) if target_level >= 0 else 0
        for col, key in enumerate(keys):
            image = realization.apply_gen(positive_mode, key)
            for out_key, coeff in image.items():
                rows[(row_offset + realization.index(out_key), col)] = coeff
        row_offset += target_dim
    stacked = ExactMatrix.from_entries(row_offset, len(keys), rows)
    return [
        {keys[i]: c for i, c in enumerate(vec) if c}
        for vec in stacked.nullspace()
    ]


# ----------------------------------------------------------------------
# factories

def realize_voa(spec: VoaSpec, depth: int):
    """Build the realization of an algebra spec at the given depth."""
    if spec.kind == "heisenberg":
        return HeisenbergVoa(depth)
    if spec.kind == "virasoro":
        if spec.central_charge is None:
            raise InputShapeError("Virasoro algebras need a central charge")
        return VirasoroVoa(spec.central_charge, depth)
    if spec.kind == "virasoro-quotient":
        if spec.central_charge is None:
            raise InputShapeError("Virasoro quotients need a central charge")
        return VirasoroQuotientVoa(spec.central_charge, spec.singular_vectors, depth)
    raise InputShapeError(f"unknown algebra kind {spec.kind!r}")


def realize_module(spec: ModuleSpec, voa, depth: int | None = None):
    """Build the realization of a module spec over a realized algebra."""
    if spec.kind == "fock":
        return FockModule(voa, spec.charge, depth)
    if spec.kind == "verma":
        return VermaModule(voa, spec.highest_weight, depth)
    if spec.kind == "quotient":
        verma = VermaModule(voa, spec.highest_weight, depth)
        return QuotientModule(verma, spec.singular_vectors, depth)
    if spec.kind == "direct-sum":
        return DirectSumModule(
            tuple(realize_module(s, voa, depth) for s in spec.summands),
            depth if depth is not None else (voa.depth if voa is not None else 0),
        )
    raise InputShapeError(f"unknown module kind {spec.kind!r}")
