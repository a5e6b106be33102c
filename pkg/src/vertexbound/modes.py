"""Mode actions ``v_k`` of algebra elements on truncated graded modules.

The generator modes of a realization (oscillator or Virasoro) are exact
closed forms; the mode of a composite state ``v = g_j u`` is expanded
through the iterate identity

    (g_j u)_k w = sum_i binom(j, i) (-1)^i
                  [ g_{j-i} (u_{k+i} w) - (-1)^j u_{j+k-i} (g_i w) ],

whose sums terminate on any vector of a lower-truncated module.  All
intermediate arithmetic is exact at arbitrary internal level; truncation
happens only at the public boundary, where a result component above the
module's depth is dropped and a sticky ``truncated`` flag is raised on
the returned :class:`GradedVector`.  Identity checks refuse flagged
inputs with :class:`~vertexbound.errors.TruncationError`, so a reported
identity is never an artifact of dropped terms.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import InputShapeError, TruncationError
from .laurent import Q, QONE, QZERO, binomial
from .linalg import ExactMatrix
from .voa import LevelCapExceeded, raw_acc, raw_combine


class GradedVector:
    """An element of a truncated graded module, stored level by level.

    ``components`` maps a level to the coordinate tuple over that
    level's ordered basis; levels whose coordinates are all zero are
    never stored.  ``truncated`` records that some computation feeding
    this vector discarded content above the module depth; the flag is
    sticky under all arithmetic.
    """

    __slots__ = ("module", "components", "truncated")

    def __init__(self, module, components=None, truncated=False):
        self.module = module
        clean = {}
        if components:
            for level, coords in components.items():
                coords = tuple(Q(c) for c in coords)
                if len(coords) != module.dim(level):
                    raise InputShapeError(
                        f"level {level} of {module.describe()} has dimension "
                        f"{module.dim(level)}, got {len(coords)} coordinates"
                    )
                if any(coords):
                    clean[level] = coords
        self.components = clean
        self.truncated = bool(truncated)

    # ------------------------------------------------------------------
    @classmethod
    def zero(cls, module, truncated=False) -> "GradedVector":
        return cls(module, {}, truncated)

    @classmethod
    def basis_vector(cls, module, key) -> "GradedVector":
        level = module.level_of(key)
        coords = [QZERO] * module.dim(level)
        coords[module.index(key)] = QONE
        return cls(module, {level: tuple(coords)})

    @classmethod
    def from_raw(cls, module, raw: dict, truncated=False) -> "GradedVector":
        """Bucket a raw key-to-coefficient dict by level.

        Nonzero content above the module depth is dropped and flagged.
        """
        by_level = {}
        for key, coeff in raw.items():
            if not coeff:
                continue
            level = module.level_of(key)
            if level > module.depth:
                truncated = True
                continue
            by_level.setdefault(level, {})[key] = coeff
        components = {
            level: module.coords(part, level) for level, part in by_level.items()
        }
        return cls(module, components, truncated)

    def to_raw(self) -> dict:
        out = {}
        for level, coords in self.components.items():
            keys = self.module.keys(level)
            for i, c in enumerate(coords):
                if c:
                    out[keys[i]] = c
        return out

    # ------------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.components

    def levels(self) -> tuple:
        return tuple(sorted(self.components))

    def coords_at(self, level: int) -> tuple:
        return self.components.get(level, tuple([QZERO] * self.module.dim(level)))

    def homogeneous_level(self):
        """The single occupied level, or None (zero or mixed)."""
        if len(self.components) == 1:
            return next(iter(self.components))
        return None

    def weight(self):
        """Conformal weight of a homogeneous vector."""
        level = self.homogeneous_level()
        if level is None:
            raise InputShapeError("weight is defined for nonzero homogeneous vectors only")
        keys = self.module.keys(level)
        coords = self.components[level]
        for i, c in enumerate(coords):
            if c:
                return self.module.weight_of(keys[i])
        raise InputShapeError("weight of the zero vector is undefined")

    # ------------------------------------------------------------------
    def _binary(self, other, sign) -> "GradedVector":
        if not isinstance(other, GradedVector):
            return NotImplemented
        if other.module is not self.module:
            raise InputShapeError("vectors live in different module realizations")
        out = dict(self.components)
        for level, coords in other.components.items():
            if level in out:
                merged = tuple(a + sign * b for a, b in zip(out[level], coords))
                if any(merged):
                    out[level] = merged
                else:
                    del out[level]
            else:
                out[level] = tuple(sign * b for b in coords) if sign != 1 else coords
        result = GradedVector(self.module, truncated=self.truncated or other.truncated)
        result.components = out
        return result

    def __add__(self, other):
        return self._binary(other, 1)

    def __sub__(self, other):
        return self._binary(other, -1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, factor) -> "GradedVector":
        factor = Q(factor)
        result = GradedVector(self.module, truncated=self.truncated)
        if factor:
            result.components = {
                level: tuple(factor * c for c in coords)
                for level, coords in self.components.items()
            }
        return result

    def __mul__(self, factor):
        if isinstance(factor, (int, Q)):
            return self.scale(factor)
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        """Value equality; the truncation flag is metadata, not value."""
        if not isinstance(other, GradedVector):
            return NotImplemented
        return self.module is other.module and self.components == other.components

    def __repr__(self):
        if self.is_zero():
            body = "0"
        else:
            parts = []
            for level in self.levels():
                keys = self.module.keys(level)
                for i, c in enumerate(self.components[level]):
                    if c:
                        parts.append(f"{c}*{self.module.label(keys[i])}")
            body = " + ".join(parts)
        flag = ", truncated" if self.truncated else ""
        return f"<{body}{flag}>"


def basis_vectors(module, level: int) -> list:
    return [GradedVector.basis_vector(module, key) for key in module.keys(level)]


def vacuum_vector(voa) -> GradedVector:
    return GradedVector.basis_vector(voa, voa.vacuum_key)


def omega_vector(voa) -> GradedVector:
    return GradedVector.from_raw(voa, dict(voa.omega_raw))


def generator_vector(voa) -> GradedVector:
    return GradedVector.from_raw(voa, dict(voa.generator_raw))


# ----------------------------------------------------------------------
# the mode engine

class ModeEngine:
    """Memoized exact mode application for one module realization.

    ``apply_word(v_word, k, w_key)`` computes ``v_k w`` where ``v`` is
    the state built by the descending creation word ``v_word`` in the
    algebra and ``w_key`` is a basis key of the module.  Words need not
    be canonical basis keys; any descending tuple denotes the
    corresponding product of creation operators on the vacuum.
    """

    def __init__(self, module):
        self.module = module
        self.voa = module.voa
        self._memo = {}

    def apply_word(self, v_word: tuple, k: int, w_key) -> dict:
        memo_key = (v_word, k, w_key)
        found = self._memo.get(memo_key)
        if found is not None:
            return found
        if not v_word:
            result = {w_key: QONE} if k == -1 else {}
        else:
            result = self._expand(v_word, k, w_key)
        self._memo[memo_key] = result
        return result

    def _expand(self, v_word, k, w_key) -> dict:
        module = self.module
        part = v_word[0]
        rest = v_word[1:]
        gen_weight = self.voa.gen_weight
        j = -part if gen_weight == 1 else 1 - part
        wt_rest = sum(rest)
        w_level = module.level_of(w_key)
        sign_j = -1 if j % 2 else 1
        out = {}
        # first branch: g_{j-i} (u_{k+i} w); terms with u_{k+i} w at
        # negative formal level vanish identically
        for i in range(0, w_level + wt_rest - k):
            coeff = binomial(j, i)
            if not coeff:
                continue
            if i % 2:
                coeff = -coeff
            inner = self.apply_word(rest, k + i, w_key)
            if not inner:
                continue
            for mid_key, mid_coeff in inner.items():
                scale = coeff * mid_coeff
                for fin_key, fin_coeff in module.apply_gen(j - i, mid_key).items():
                    raw_acc(out, fin_key, scale * fin_coeff)
        # second branch: -(-1)^j u_{j+k-i} (g_i w); g_i w vanishes once i
        # exceeds the level plus generator weight
        for i in range(0, w_level + gen_weight):
            coeff = binomial(j, i)
            if not coeff:
                continue
            if i % 2:
                coeff = -coeff
            coeff = -sign_j * coeff
            inner = module.apply_gen(i, w_key)
            if not inner:
                continue
            for mid_key, mid_coeff in inner.items():
                scale = coeff * mid_coeff
                for fin_key, fin_coeff in self.apply_word(rest, j + k - i, mid_key).items():
                    raw_acc(out, fin_key, scale * fin_coeff)
        return out

    def apply_raw(self, v_raw: dict, k: int, w_raw: dict) -> dict:
        """Bilinear extension of :meth:`apply_word` to raw elements."""
        out = {}
        for w_key, w_coeff in w_raw.items():
            for v_word, v_coeff in v_raw.items():
                raw_combine(out, self.apply_word(v_word, k, w_key), v_coeff * w_coeff)
        return out


def engine_for(module) -> ModeEngine:
    engine = getattr(module, "_mode_engine", None)
    if engine is None:
        engine = ModeEngine(module)
        module._mode_engine = engine
    return engine


def mode_action(v: GradedVector, k: int, w: GradedVector) -> GradedVector:
    """The exact truncated action ``v_k w``.

    ``v`` must be a homogeneous element of the algebra acting on ``w``'s
    module.  Components whose formal target level ``lvl(w) + wt(v) - k - 1``
    exceeds the module depth are dropped and flagged; input flags are
    inherited.
    """
    module = w.module
    voa = module.voa
    if v.module is not voa:
        raise InputShapeError("the acting element must belong to the module's algebra")
    truncated = v.truncated or w.truncated
    if v.is_zero() or w.is_zero():
        return GradedVector.zero(module, truncated)
    v_level = v.homogeneous_level()
    if v_level is None:
        raise InputShapeError("mode actions require a homogeneous acting element")
    engine = engine_for(module)
    v_raw = v.to_raw()
    out = {}
    for w_level in w.levels():
        target = w_level + v_level - k - 1
        if target < 0:
            continue
        if target > module.depth:
            truncated = True
            continue
        keys = module.keys(w_level)
        coords = w.components[w_level]
        level_part = {}
        try:
            for i, w_coeff in enumerate(coords):
                if not w_coeff:
                    continue
                for v_word, v_coeff in v_raw.items():
                    raw_combine(
                        level_part,
                        engine.apply_word(v_word, k, keys[i]),
                        v_coeff * w_coeff,
                    )
        except LevelCapExceeded:
            truncated = True
            continue
        raw_combine(out, level_part)
    return GradedVector.from_raw(module, out, truncated)


def mode_matrix(module, v: GradedVector, k: int, source_level: int) -> ExactMatrix:
    """Matrix block of ``v_k`` from one source level of the module."""
    if v.homogeneous_level() is None:
        raise InputShapeError("matrix blocks require a homogeneous acting element")
    target = source_level + v.homogeneous_level() - k - 1
    rows = module.dim(target) if 0 <= target <= module.depth else 0
    entries = {}
    if rows:
        for col, key in enumerate(module.keys(source_level)):
            image = mode_action(v, k, GradedVector.basis_vector(module, key))
            if image.truncated:
                raise TruncationError("mode block is not certified at this depth")
            for row, c in enumerate(image.coords_at(target)):
                if c:
                    entries[(row, col)] = c
    return ExactMatrix.from_entries(rows, module.dim(source_level), entries)


@dataclass
class ModeAction:
    """The action of one mode as matrix blocks per source level."""

    module: object
    v: GradedVector
    k: int
    blocks: dict = field(default_factory=dict)

    @classmethod
    def build(cls, module, v, k, source_levels) -> "ModeAction":
        blocks = {n: mode_matrix(module, v, k, n) for n in source_levels}
        return cls(module, v, k, blocks)

    def apply(self, w: GradedVector) -> GradedVector:
        if w.module is not self.module:
            raise InputShapeError("vector belongs to a different realization")
        v_level = self.v.homogeneous_level()
        out = {}
        truncated = w.truncated or self.v.truncated
        for level in w.levels():
            if level not in self.blocks:
                raise InputShapeError(f"no block for source level {level}")
            target = level + v_level - self.k - 1
            if target < 0:
                continue
            if target > self.module.depth:
                truncated = True
                continue
            image = self.blocks[level].matvec(w.components[level])
            if any(image):
                keys = self.module.keys(target)
                for i, c in enumerate(image):
                    if c:
                        raw_acc(out, keys[i], c)
        return GradedVector.from_raw(self.module, out, truncated)


# ----------------------------------------------------------------------
# identity checks

def _require_certified(*vectors):
    for vec in vectors:
        if vec.truncated:
            raise TruncationError(
                "identity check touches levels above the truncation depth; "
                "raise the depth to certify this combination"
            )


def check_commutator(v1: GradedVector, v2: GradedVector, n: int, m: int,
                     w: GradedVector) -> bool:
    """Verify ``[v1_n, v2_m] w = sum_i binom(n, i) (v1_i v2)_{n+m-i} w``.

    Exact on certified data; combinations that would need content above
    the truncation depth raise :class:`TruncationError` instead of
    returning a vacuous answer.
    """
    _require_certified(v1, v2, w)
    a = mode_action(v2, m, w)
    b = mode_action(v1, n, w)
    lhs = mode_action(v1, n, a) - mode_action(v2, m, b)
    _require_certified(lhs)
    rhs = GradedVector.zero(w.module)
    top = v1.homogeneous_level() + v2.homogeneous_level()
    for i in range(0, top):
        product = mode_action(v1, i, v2)
        _require_certified(product)
        if product.is_zero():
            continue
        term = mode_action(product, n + m - i, w)
        _require_certified(term)
        rhs = rhs + term.scale(binomial(n, i))
    return lhs == rhs


def check_associativity(v1: GradedVector, v2: GradedVector, n: int, m: int,
                        w: GradedVector) -> bool:
    """Verify the iterate identity for ``(v1_n v2)_m w``.

    The right-hand side is
    ``sum_i binom(n, i) (-1)^i { v1_{n-i} v2_{m+i} w - (-1)^n v2_{n+m-i} v1_i w }``
    with both inner sums truncating at negative formal levels.
    """
    _require_certified(v1, v2, w)
    product = mode_action(v1, n, v2)
    _require_certified(product)
    lhs = mode_action(product, m, w)
    _require_certified(lhs)
    wt1 = v1.homogeneous_level()
    wt2 = v2.homogeneous_level()
    w_top = max(w.levels(), default=0)
    rhs = GradedVector.zero(w.module)
    sign_n = -1 if n % 2 else 1
    for i in range(0, w_top + wt2 - m):
        inner = mode_action(v2, m + i, w)
        term = mode_action(v1, n - i, inner)
        _require_certified(term)
        coeff = binomial(n, i) * (1 if i % 2 == 0 else -1)
        rhs = rhs + term.scale(coeff)
    for i in range(0, w_top + wt1):
        inner = mode_action(v1, i, w)
        term = mode_action(v2, n + m - i, inner)
        _require_certified(term)
        coeff = -sign_n * binomial(n, i) * (1 if i % 2 == 0 else -1)
        rhs = rhs + term.scale(coeff)
    return lhs == rhs


@dataclass
class ShiftCheck:
    """Both sides of ``(L(-1)v)_{-m} w = m v_{-m-1} w``."""

    lhs: GradedVector
    rhs: GradedVector

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def l_minus_one_shift(v: GradedVector, m: int, w: GradedVector) -> ShiftCheck:
    """Evaluate the translation-generator shift on a test vector."""
    _require_certified(v, w)
    voa = v.module
    shifted = mode_action(omega_vector(voa), 0, v)
    _require_certified(shifted)
    lhs = mode_action(shifted, -m, w)
    rhs = mode_action(v, -m - 1, w).scale(m)
    _require_certified(lhs, rhs)
    return ShiftCheck(lhs, rhs)


# ----------------------------------------------------------------------
# the quantified identity suite

@dataclass
class IdentitySuiteReport:
    """Outcome counts of the exhaustive guarded identity suite."""

    module: str
    depth: int
    commutator_checked: int = 0
    associativity_checked: int = 0
    vacuum_checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def total_checked(self) -> int:
        return self.commutator_checked + self.associativity_checked + self.vacuum_checked

    @property
    def all_passed(self) -> bool:
        return not self.failures

    def summary(self) -> dict:
        return {
            "module": self.module,
            "depth": self.depth,
            "commutator_checked": self.commutator_checked,
            "associativity_checked": self.associativity_checked,
            "vacuum_checked": self.vacuum_checked,
            "failures": list(self.failures),
            "all_passed": self.all_passed,
        }


def _suite_tasks(module):
    """Enumerate guarded (v1, v2, w) triples for the suite.

    The guard keeps the formal level of every composition appearing in
    either identity inside ``[0, depth]`` (compositions that vanish
    identically because their formal level is negative are fine);
    combinations outside the guard are not enumerated, so every
    enumerated case is fully certified and nothing inside the guard is
    skipped.
    """
    voa = module.voa
    depth = module.depth
    voa_depth = voa.depth
    tasks = []
    pairs = [
        (w1, i1, w2, i2)
        for w1 in range(0, voa_depth + 1)
        for w2 in range(0, voa_depth + 2 - w1)
        if w2 <= voa_depth
        for i1 in range(len(voa.keys(w1)))
        for i2 in range(len(voa.keys(w2)))
    ]
    for w1, i1, w2, i2 in pairs:
        for w_level in range(0, depth + 1):
            for w_index in range(module.dim(w_level)):
                tasks.append((w1, i1, w2, i2, w_level, w_index))
    return tasks


def _raw_apply(engine, v_word, k, raw):
    out = {}
    for w_key, coeff in raw.items():
        raw_combine(out, engine.apply_word(v_word, k, w_key), coeff)
    return out


def _raw_commutator_defect(adjoint, engine, v1_word, v2_word, n, m, w_key):
    """lhs - rhs of the commutator identity at raw level; {} means it holds."""
    defect = _raw_apply(engine, v1_word, n, engine.apply_word(v2_word, m, w_key))
    for key, coeff in _raw_apply(engine, v2_word, m, engine.apply_word(v1_word, n, w_key)).items():
        raw_acc(defect, key, -coeff)
    for i in range(0, sum(v1_word) + sum(v2_word)):
        factor = binomial(n, i)
        if not factor:
            continue
        for p_key, p_coeff in adjoint.apply_word(v1_word, i, v2_word).items():
            raw_combine(defect, engine.apply_word(p_key, n + m - i, w_key), -factor * p_coeff)
    return defect


def _raw_associativity_defect(adjoint, engine, v1_word, v2_word, n, m, w_key, w_level):
    """lhs - rhs of the iterate identity at raw level; {} means it holds."""
    defect = {}
    for p_key, p_coeff in adjoint.apply_word(v1_word, n, v2_word).items():
        raw_combine(defect, engine.apply_word(p_key, m, w_key), p_coeff)
    wt1 = sum(v1_word)
    wt2 = sum(v2_word)
    sign_n = -1 if n % 2 else 1
    for i in range(0, w_level + wt2 - m):
        factor = binomial(n, i)
        if not factor:
            continue
        if i % 2:
            factor = -factor
        inner = engine.apply_word(v2_word, m + i, w_key)
        if inner:
            raw_combine(defect, _raw_apply(engine, v1_word, n - i, inner), Q(-factor))
    for i in range(0, w_level + wt1):
        factor = binomial(n, i)
        if not factor:
            continue
        if i % 2:
            factor = -factor
        factor = -sign_n * factor
        inner = engine.apply_word(v1_word, i, w_key)
        if inner:
            raw_combine(defect, _raw_apply(engine, v2_word, n + m - i, inner), Q(-factor))
    return defect


def _run_suite_task(module, task, report):
    voa = module.voa
    depth = module.depth
    voa_depth = voa.depth
    engine = engine_for(module)
    adjoint = engine_for(voa)
    w1, i1, w2, i2, w_level, w_index = task
    v1_word = voa.keys(w1)[i1]
    v2_word = voa.keys(w2)[i2]
    w_key = module.keys(w_level)[w_index]
    # commutator: both one-mode intermediates and the final level inside
    # the window
    for m in range(w_level + w2 - 1 - depth, w_level + w2):
        for n in range(w_level + w1 - 1 - depth, w_level + w1):
            final = w_level + w1 + w2 - n - m - 2
            if not 0 <= final <= depth:
                continue
            defect = _raw_commutator_defect(adjoint, engine, v1_word, v2_word, n, m, w_key)
            report.commutator_checked += 1
            if defect:
                report.failures.append(
                    ("commutator", voa.label(v1_word), voa.label(v2_word),
                     n, m, module.label(w_key))
                )
    # associativity additionally composes v1 modes on w directly
    if w_level + w1 - 1 <= depth:
        for m in range(w_level + w2 - 1 - depth, w_level + w2):
            for n in range(w1 + w2 - 1 - voa_depth, w1 + w2):
                final = w_level + w1 + w2 - n - m - 2
                if not 0 <= final <= depth:
                    continue
                defect = _raw_associativity_defect(
                    adjoint, engine, v1_word, v2_word, n, m, w_key, w_level
                )
                report.associativity_checked += 1
                if defect:
                    report.failures.append(
                        ("associativity", voa.label(v1_word), voa.label(v2_word),
                         n, m, module.label(w_key))
                    )


def run_identity_suite(module, max_failures: int = 20, threads: int = 1) -> IdentitySuiteReport:
    """Check the commutator and iterate identities exhaustively.

    Quantifies over all pairs of homogeneous basis elements of the
    algebra with compatible weights, all module basis vectors up to the
    depth, and every mode pair whose formal intermediate levels stay in
    the truncation window.  Also checks the vacuum axioms.  Failures are
    collected (up to ``max_failures``) rather than raising, so a report
    always comes back.

    With ``threads > 1`` the task list is split into contiguous blocks
    and the per-block counts and failures are merged back in block
    order, so the report does not depend on the worker count.
    """
    voa = module.voa
    report = IdentitySuiteReport(module=module.describe(), depth=module.depth)
    vac = vacuum_vector(voa)
    for level in range(0, module.depth + 1):
        for key in module.keys(level):
            w = GradedVector.basis_vector(module, key)
            for k in range(-1, level + 1):
                expected = w if k == -1 else GradedVector.zero(module)
                report.vacuum_checked += 1
                if mode_action(vac, k, w) != expected:
                    report.failures.append(("vacuum", k, module.label(key)))
    if getattr(module, "is_voa", False):
        # creation axiom on the adjoint module: v_{-1}|0> = v, v_k|0> = 0
        for level in range(0, module.depth + 1):
            for key in module.keys(level):
                v = GradedVector.basis_vector(module, key)
                report.vacuum_checked += 1
                if mode_action(v, -1, vac) != v:
                    report.failures.append(("creation", -1, module.label(key)))
                for k in range(0, level):
                    report.vacuum_checked += 1
                    if not mode_action(v, k, vac).is_zero():
                        report.failures.append(("creation", k, module.label(key)))
    tasks = _suite_tasks(module)
    if threads > 1 and len(tasks) > 1:
        # shared engine memos are only ever extended with identical
        # values, so concurrent reads are safe; build them eagerly to
        # avoid a first-write race on the cache attributes
        engine_for(module)
        engine_for(voa)
        blocks = []
        step = -(-len(tasks) // threads)
        for start in range(0, len(tasks), step):
            blocks.append(tasks[start:start + step])

        def run_block(block):
            sub = IdentitySuiteReport(module=report.module, depth=report.depth)
            for task in block:
                _run_suite_task(module, task, sub)
            return sub

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for sub in pool.map(run_block, blocks):
                report.commutator_checked += sub.commutator_checked
                report.associativity_checked += sub.associativity_checked
                report.failures.extend(sub.failures)
    else:
        for task in tasks:
            _run_suite_task(module, task, report)
    del report.failures[max_failures:]
    return report
