"""C_m subspaces, quotient data, complements, and nilpotency bookkeeping.

For a graded module ``M`` over the algebra ``V``,

    C_m(M) = Span { v_{-m} u : v homogeneous, wt(v) > 1 - m, u in M },

computed level by level.  Within a truncation window the spanning set at
level ``n`` is provably complete once every contributing ``v_{-m} u``
with ``wt(v) <= n - m + 1`` is realizable, which is what the depth guard
below enforces; everything reported is then exact, not approximate.

The single nontrivial enumeration detail: our algebras have
``V_0 = Q|0>`` and no negative weights, and the vacuum contributes
``1_{-m} u = 0`` for ``m >= 2`` (and is excluded by ``wt > 0`` for
``m = 1``), so spanning generators always run over ``wt(v) >= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    InputShapeError,
    InternalInvariantViolation,
    NotCofiniteUpToDepth,
    TruncationError,
)
from .laurent import Q, QONE, QZERO
from .linalg import ExactMatrix, RowSpan
from .modes import GradedVector, engine_for
from .voa import DirectSumModule, raw_combine


# ----------------------------------------------------------------------
# C_m subspaces

@dataclass
class CmLevel:
    """Reduced spanning data of one level of C_m(M)."""

    level: int
    dim: int
    rank: int
    span: RowSpan

    @property
    def quotient_dim(self) -> int:
        return self.dim - self.rank


class CmSubspace:
    """Level-by-level realization of C_m(M) up to a certified depth."""

    def __init__(self, module, m: int, depth: int, levels: dict):
        self.module = module
        self.m = m
        self.depth = depth
        self.levels = levels

    @property
    def quotient_dims(self) -> list:
        return [self.levels[n].quotient_dim for n in range(self.depth + 1)]

    def contains(self, vec: GradedVector) -> bool:
        """Exact membership of a vector in C_m(M), level by level."""
        if vec.module is not self.module:
            raise InputShapeError("vector belongs to a different realization")
        if vec.truncated:
            raise TruncationError("membership of a truncated vector is not certified")
        for level in vec.levels():
            if level > self.depth:
                raise TruncationError(f"level {level} exceeds the certified depth {self.depth}")
            if not self.levels[level].span.contains(vec.components[level]):
                return False
        return True

    def residual(self, level: int, coords) -> dict:
        return self.levels[level].span.reduce(coords)


def _check_cm_guard(module, m: int, depth: int) -> None:
    if m < 1:
        raise InputShapeError("the mode shift m must be a positive integer")
    if depth < 0:
        raise InputShapeError("depth must be non-negative")
    voa = module.voa
    if voa is None:
        return  # the zero module has no spanning generators at all
    max_certified = module.depth - (voa.gen_weight + m - 1)
    if depth > max_certified:
        raise TruncationError(
            f"C_{m} spanning sets are only complete up to level {max_certified} "
            f"at module depth {module.depth}; requested {depth}"
        )
    if depth - m + 1 > voa.depth:
        raise TruncationError(
            f"algebra depth {voa.depth} cannot enumerate spanning weights up to "
            f"{depth - m + 1}"
        )


def build_cm(module, m: int, depth: int) -> CmSubspace:
    """Assemble C_m(M) spanning sets and their exact ranks per level."""
    _check_cm_guard(module, m, depth)
    engine = engine_for(module) if module.voa is not None else None
    voa = module.voa
    levels = {}
    for n in range(depth + 1):
        dim_n = module.dim(n)
        span = RowSpan(dim_n)
        for wt in range(1, n - m + 2) if voa is not None else ():
            u_level = n - wt - m + 1
            for v_key in voa.keys(wt):
                for u_key in module.keys(u_level):
                    image = engine.apply_word(v_key, -m, u_key)
                    if image:
                        span.add(module.coords(image, n))
        levels[n] = CmLevel(level=n, dim=dim_n, rank=span.rank, span=span)
    return CmSubspace(module, m, depth, levels)


def cm_quotient_dims(module, m: int, depth: int) -> list:
    """Exact dimensions of ``M_(n) / C_m(M)_(n)`` for n = 0..depth."""
    return build_cm(module, m, depth).quotient_dims


# ----------------------------------------------------------------------
# complements

@dataclass
class ComplementBasis:
    """A homogeneous complement of C_m(M) inside M, levels 0..N.

    ``vectors[i]`` is the basis monomial chosen at ``labels[i] ==
    (level, key)``; selection is the graded-lex earliest monomial whose
    class is new in ``M / (C_m + already chosen)``.
    """

    module: object
    m: int
    depth: int
    window: int
    lowest_weight: object
    vectors: list = field(default_factory=list)
    labels: list = field(default_factory=list)
    summands: list | None = None

    def __len__(self):
        return len(self.vectors)

    def at_level(self, level: int) -> list:
        return [v for v, (lv, _) in zip(self.vectors, self.labels) if lv == level]

    def describe_labels(self) -> list:
        return [
            {"level": level, "monomial": self.module.label(key)}
            for level, key in self.labels
        ]


def _greedy_level_complement(module, span: RowSpan, level: int, needed: int) -> list:
    """Earliest basis monomials completing a span to the full level."""
    chosen = []
    working = RowSpan(span.width)
    for row in span.basis_rows():
        working.add(row)
    for key in module.keys(level):
        if len(chosen) == needed:
            break
        unit = [QZERO] * module.dim(level)
        unit[module.index(key)] = QONE
        if working.add(tuple(unit)):
            chosen.append(key)
    if len(chosen) != needed:
        raise InternalInvariantViolation(
            f"could not complete level {level}: found {len(chosen)} of {needed}"
        )
    return chosen


def choose_complement(module, depth: int, m: int = 1) -> ComplementBasis:
    """Deterministic complement basis with a verified trailing window.

    Requires the quotient dimensions to vanish on ``(N, depth]`` for
    some ``N < depth``; otherwise the module may genuinely fail to be
    C_m-cofinite and :class:`NotCofiniteUpToDepth` is raised.
    """
    if isinstance(module, DirectSumModule):
        return _direct_sum_complement(module, depth, m)
    cm = build_cm(module, m, depth)
    dims = cm.quotient_dims
    nonzero = [n for n, d in enumerate(dims) if d]
    window = nonzero[-1] if nonzero else -1
    if window >= depth and any(dims):
        raise NotCofiniteUpToDepth(
            f"quotient dimensions {dims} show no trailing zero window within "
            f"depth {depth}; not certified C_{m}-cofinite at this truncation"
        )
    basis = ComplementBasis(
        module=module,
        m=m,
        depth=depth,
        window=window,
        lowest_weight=module.lowest_weight,
    )
    for n in range(0, window + 1):
        if not dims[n]:
            continue
        for key in _greedy_level_complement(module, cm.levels[n].span, n, dims[n]):
            basis.vectors.append(GradedVector.basis_vector(module, key))
            basis.labels.append((n, key))
    return basis


def _direct_sum_complement(module: DirectSumModule, depth: int, m: int) -> ComplementBasis:
    """Per-summand complements, embedded and concatenated."""
    parts = [choose_complement(s, depth, m) for s in module.summands]
    basis = ComplementBasis(
        module=module,
        m=m,
        depth=depth,
        window=max((p.window for p in parts), default=-1),
        lowest_weight=module.lowest_weight,
        summands=parts,
    )
    for index, part in enumerate(parts):
        for vec, (level, key) in zip(part.vectors, part.labels):
            embedded = {(index, k): c for k, c in vec.to_raw().items()}
            basis.vectors.append(GradedVector.from_raw(module, embedded))
            basis.labels.append((level, (index, key)))
    # restore level ordering across summands for determinism
    order = sorted(range(len(basis.labels)),
                   key=lambda i: (basis.labels[i][0], basis.labels[i][1]))
    basis.vectors = [basis.vectors[i] for i in order]
    basis.labels = [basis.labels[i] for i in order]
    return basis


# ----------------------------------------------------------------------
# graded dimensions with the spanning certificate

@dataclass
class GradedDimReport:
    """Exact graded dimensions plus the per-level spanning certificate.

    ``certified[n]`` records whether ``M_(n) = C_1(M)_(n) + complement``
    was verified by an exact rank computation; levels beyond the
    certifiable window carry None instead of a claim.
    """

    module: str
    depth: int
    dims: list
    c1_ranks: list
    quotient_dims: list
    certified: list
    window: int | None


def graded_dims(module, depth: int) -> GradedDimReport:
    """Dimensions ``dim M_(n)`` for n = 0..depth, with certificates."""
    if depth < 0:
        raise InputShapeError("depth must be non-negative")
    dims = [module.dim(n) for n in range(depth + 1)]
    gen_weight = module.voa.gen_weight if module.voa is not None else 0
    cert_depth = min(depth, module.depth - gen_weight)
    c1_ranks: list = []
    quotient: list = []
    certified: list = []
    window = None
    if cert_depth >= 0 and module.voa is not None:
        cm = build_cm(module, 1, cert_depth)
        qdims = cm.quotient_dims
        nonzero = [n for n, d in enumerate(qdims) if d]
        if not nonzero:
            window = -1
        elif nonzero[-1] < cert_depth:
            window = nonzero[-1]
        for n in range(cert_depth + 1):
            c1_ranks.append(cm.levels[n].rank)
            quotient.append(qdims[n])
            # the certificate: C_1 rows plus the greedy complement span
            # the whole level, verified by an independent rank pass
            stacked = RowSpan(module.dim(n))
            for row in cm.levels[n].span.basis_rows():
                stacked.add(row)
            for key in _greedy_level_complement(module, cm.levels[n].span, n, qdims[n]):
                unit = [QZERO] * module.dim(n)
                unit[module.index(key)] = QONE
                stacked.add(tuple(unit))
            certified.append(stacked.rank == module.dim(n))
    while len(certified) < depth + 1:
        c1_ranks.append(None)
        quotient.append(None)
        certified.append(None)
    return GradedDimReport(
        module=module.describe(),
        depth=depth,
        dims=dims,
        c1_ranks=c1_ranks,
        quotient_dims=quotient,
        certified=certified,
        window=window,
    )


# ----------------------------------------------------------------------
# weight support

def weight_support(module) -> tuple:
    """Minimal lowest weights covering ``wt(M)``, distinct mod Z.

    Two summand weights in one integer coset are merged to the smaller
    one, so ``wt(M)`` is contained in the union of ``a + N`` over the
    returned representatives.
    """
    if isinstance(module, DirectSumModule):
        raw = [w for s in module.summands for w in weight_support(s)]
    else:
        raw = [module.lowest_weight]
    by_coset = {}
    for w in raw:
        key = w - w.numerator // w.denominator  # fractional part in [0,1)
        if key in by_coset:
            by_coset[key] = min(by_coset[key], w)
        else:
            by_coset[key] = w
    return tuple(sorted(by_coset.values()))


# ----------------------------------------------------------------------
# nilpotency of L(0) - wt

@dataclass
class NilpotencyReport:
    """Per-level nilpotency orders of ``L(0) - wt`` on a realized module."""

    module: str
    depth: int
    per_level: list
    global_order: int


def nilpotency_report(module, depth: int | None = None) -> NilpotencyReport:
    """Verify ``L(0) = wt + nilpotent`` and report the orders.

    The realized modules here are all L(0)-semisimple, so the expected
    order is 1 at every level; a non-nilpotent defect would mean the
    realization is broken and raises.
    """
    if depth is None:
        depth = module.depth
    if depth > module.depth:
        raise TruncationError("nilpotency report beyond the realized depth")
    engine = engine_for(module) if module.voa is not None else None
    omega_raw = module.voa.omega_raw if module.voa is not None else {}
    per_level = []
    for n in range(depth + 1):
        dim_n = module.dim(n)
        if dim_n == 0:
            per_level.append(0)
            continue
        keys = module.keys(n)
        entries = {}
        for col, key in enumerate(keys):
            image = {}
            for word, coeff in omega_raw.items():
                raw_combine(image, engine.apply_word(word, 1, key), coeff)
            for out_key, coeff in image.items():
                entries[(module.index(out_key), col)] = coeff
        for col, key in enumerate(keys):
            weight = module.weight_of(key)
            if weight:
                existing = entries.get((col, col), QZERO) - weight
                if existing:
                    entries[(col, col)] = existing
                else:
                    entries.pop((col, col), None)
        nil = ExactMatrix.from_entries(dim_n, dim_n, entries)
        order = 1
        power = nil
        while power.nonzero_entries():
            order += 1
            if order > dim_n + 1:
                raise InternalInvariantViolation(
                    f"L(0) - wt is not nilpotent at level {n}"
                )
            power = power.matmul(nil)
        per_level.append(order)
    return NilpotencyReport(
        module=module.describe(),
        depth=depth,
        per_level=per_level,
        global_order=max((o for o in per_level if o), default=1),
    )


# ----------------------------------------------------------------------
# the log-power bound

@dataclass
class LogPowerBound:
    """Vanishing bounds for log-mode coefficients ``u_{(k,n)} w``."""

    orders: tuple
    coarse_bound: int
    sharp_bound: int
    attained: bool


def log_recursion_state(orders: tuple, k: int) -> dict:
    """Symbolic state of the k-th log coefficient under the recursion.

    Models ``(i+1) u_{(i+1,n)} w = -Nil_T(u_{(i,n)} w) + (Nil_U u)_{(i,n)} w
    + u_{(i,n)} (Nil_W w)`` with three commuting nilpotent decorations of
    orders ``(N_U, N_W, N_T)``.  Returns ``{(a, b, c): coefficient}``
    over surviving monomials ``Nil_T^a Nil_U^b Nil_W^c``; the empty dict
    means the coefficient vanishes identically for every such module
    triple.
    """
    nu, nw, nt = orders
    state = {(0, 0, 0): QONE}
    for step in range(k):
        new: dict = {}
        inv = Q(1, step + 1)
        for (a, b, c), coeff in state.items():
            for da, db, dc, sign in ((1, 0, 0, -1), (0, 1, 0, 1), (0, 0, 1, 1)):
                a2, b2, c2 = a + da, b + db, c + dc
                if a2 >= nt or b2 >= nu or c2 >= nw:
                    continue
                key = (a2, b2, c2)
                value = new.get(key, QZERO) + sign * inv * coeff
                if value:
                    new[key] = value
                else:
                    new.pop(key, None)
        state = new
        if not state:
            break
    return state


def log_power_bound(n_u: int, n_w: int, n_t: int) -> LogPowerBound:
    """Both vanishing bounds obtained by iterating the log recursion.

    ``coarse_bound = 3 max`` is the coarse estimate; the iteration itself
    yields the first k with ``u_{(k,n)} w = 0`` for all compatible
    modules, which comes out as ``N_U + N_W + N_T - 2``.
    """
    if n_u < 1 or n_w < 1 or n_t < 1:
        raise InputShapeError("nilpotency orders must be positive integers")
    orders = (n_u, n_w, n_t)
    coarse = 3 * max(orders)
    vanish = None
    bound_guess = n_u + n_w + n_t - 2
    for k in range(0, 3 * max(orders) + 2):
        if not log_recursion_state(orders, k):
            vanish = k
            break
    if vanish is None or vanish != bound_guess:
        raise InternalInvariantViolation(
            f"log recursion vanished at {vanish}, expected {bound_guess}"
        )
    attained = bool(log_recursion_state(orders, vanish - 1)) if vanish else False
    return LogPowerBound(
        orders=orders,
        coarse_bound=coarse,
        sharp_bound=vanish,
        attained=attained,
    )
