"""Tests for the local solver at the regular singular point."""

import random
from fractions import Fraction as Q

import pytest
import sympy

from bruteforce import fock_top_correlator
from vertexbound.cofinite import choose_complement
from vertexbound.errors import (
    InputShapeError,
    IrregularSingularity,
    LogDepthExceeded,
)
from vertexbound.frobenius import (
    FrobeniusSolution,
    _char_poly,
    _rational_roots,
    frobenius_series,
    indicial_exponents,
    pole_order,
    solution_space_dim,
)
from vertexbound.laurent import LaurentPoly
from vertexbound.linalg import ExactMatrix
from vertexbound.reduction import OdeSystem, assemble_ode
from vertexbound.voa import (
    DirectSumModule,
    FockModule,
    HeisenbergVoa,
    QuotientModule,
    VermaModule,
    VirasoroVoa,
    level2_singular_vector,
)


def manual_system(dimension, entries):
    entries = {key: poly for key, poly in entries.items() if not poly.is_zero()}
    pole = 0
    for poly in entries.values():
        low = poly.min_exponent()
        if low is not None and low < 0:
            pole = max(pole, -low)
    return OdeSystem(
        left="manual", right="manual", dimension=dimension,
        labels=[(i, 0) for i in range(dimension)],
        entries=entries, pole_order=pole,
    )


def fock_system(lam=1, mu=2, depth=6):
    voa = HeisenbergVoa(depth)
    lbasis = choose_complement(FockModule(voa, Q(lam)), depth - 1)
    rbasis = choose_complement(FockModule(voa, Q(mu)), depth - 1)
    return assemble_ode(lbasis, rbasis)


# ----------------------------------------------------------------------
# pole order and characteristic data

def test_pole_orders():
    assert pole_order(fock_system()) == 1
    assert pole_order(manual_system(1, {})) == 0
    irregular = manual_system(1, {(0, 0): LaurentPoly({-2: Q(1), -1: Q(1)})})
    assert pole_order(irregular) == 2
    with pytest.raises(IrregularSingularity):
        indicial_exponents(irregular)


def test_char_poly_matches_sympy():
    rng = random.Random(3)
    for n in (1, 2, 3, 4):
        entries = {}
        for i in range(n):
            for j in range(n):
                value = Q(rng.randint(-4, 4), rng.randint(1, 3))
                if value:
                    entries[(i, j)] = value
        matrix = ExactMatrix.from_entries(n, n, entries)
        coeffs = _char_poly(matrix)
        sm = sympy.Matrix(n, n, lambda i, j: sympy.Rational(
            entries.get((i, j), Q(0)).numerator, entries.get((i, j), Q(0)).denominator))
        expected = sympy.Poly(sm.charpoly().as_expr(), sm.charpoly().gen).all_coeffs()
        assert [sympy.Rational(c.numerator, c.denominator) for c in coeffs] == expected


def test_rational_root_extraction():
    # (t - 2)(t + 2)
    roots, remainder = _rational_roots([Q(1), Q(0), Q(-4)])
    assert roots == {Q(2): 1, Q(-2): 1}
    assert remainder == [Q(1)]
    # (t - 1/2)^2 (t^2 + 1)
    poly = [Q(1), Q(-1), Q(5, 4), Q(-1), Q(1, 4)]
    roots, remainder = _rational_roots(poly)
    assert roots == {Q(1, 2): 2}
    assert remainder == [Q(1), Q(0), Q(1)]
    # zero roots strip cleanly
    roots, remainder = _rational_roots([Q(1), Q(-1), Q(0), Q(0)])
    assert roots == {Q(0): 2, Q(1): 1}


def test_indicial_exponents_fock():
    data = indicial_exponents(fock_system())
    assert data.dimension == 1
    assert data.exponents == [(Q(2), 1)]  # the fusion exponent lam*mu
    assert data.irreducible_factors == []
    assert data.multiplicity(Q(2)) == 1 and data.multiplicity(Q(1)) == 0


def test_indicial_exponents_zero_system():
    data = indicial_exponents(manual_system(1, {}))
    assert data.exponents == [(Q(0), 1)]


def test_indicial_exponents_direct_sum():
    voa = HeisenbergVoa(6)
    total = DirectSumModule([FockModule(voa, 1), FockModule(voa, -1)])
    lbasis = choose_complement(total, 5)
    rbasis = choose_complement(FockModule(voa, 2), 5)
    data = indicial_exponents(assemble_ode(lbasis, rbasis))
    assert data.exponents == [(Q(-2), 1), (Q(2), 1)]


def test_indicial_irrational_reported_symbolically():
    system = manual_system(2, {
        (0, 1): LaurentPoly.monomial(-1, Q(2)),
        (1, 0): LaurentPoly.monomial(-1, Q(1)),
    })
    data = indicial_exponents(system)
    assert data.exponents == []
    assert data.irreducible_factors == [((Q(1), Q(0), Q(-2)), 1)]


def test_quotient_square_system_has_a_double_pole():
    # correlators of descendants sit at shifted powers, so the assembled
    # matrix picks up z^{-2}; the solver refuses it honestly
    voa = VirasoroVoa(Q(1, 2), 8)
    verma = VermaModule(voa, Q(1, 2))
    quot = QuotientModule(verma, [level2_singular_vector(Q(1, 2), Q(1, 2))])
    basis = choose_complement(quot, 4)
    system = assemble_ode(basis, basis)
    assert pole_order(system) == 3
    with pytest.raises(IrregularSingularity):
        indicial_exponents(system)


# ----------------------------------------------------------------------
# series solutions

def test_frobenius_fock_matches_oracle():
    system = fock_system()
    solutions = frobenius_series(system, Q(2), 8)
    assert len(solutions) == 1
    sol = solutions[0]
    # the unique solution is exactly z^2 with no corrections, matching
    # the top matrix element <top|Y(|1>,z)|2> = z^2 after normalization
    assert sol.terms == {(0, 0): (Q(1),)}
    oracle = fock_top_correlator({(): Q(1)}, Q(1), {(): Q(1)}, Q(2))
    assert oracle == {0: Q(1)}
    lead = sol.terms[(0, 0)][0]
    for k in range(1, 9):
        assert sol.coefficient(k, 0) is None
        assert oracle.get(k, Q(0)) / lead == Q(0)


def test_frobenius_constant_solution():
    solutions = frobenius_series(manual_system(1, {}), Q(0), 3)
    assert len(solutions) == 1
    assert solutions[0].terms == {(0, 0): (Q(1),)}


def test_frobenius_exponential_recursion():
    # d/dz A = (1/z + 1) A has A = z e^z; coefficients 1/k!
    system = manual_system(1, {(0, 0): LaurentPoly({-1: Q(1), 0: Q(1)})})
    (sol,) = frobenius_series(system, Q(1), 4)
    assert sol.terms == {
        (0, 0): (Q(1),),
        (1, 0): (Q(1),),
        (2, 0): (Q(1, 2),),
        (3, 0): (Q(1, 6),),
        (4, 0): (Q(1, 24),),
    }


def test_frobenius_nilpotent_log_pair():
    # B = [[0, 1/z],[0, 0]]: solutions (1,0) and (log z, 1)
    system = manual_system(2, {(0, 1): LaurentPoly.monomial(-1, Q(1))})
    solutions = frobenius_series(system, Q(0), 3, max_log=1)
    assert len(solutions) == 2
    plain = [s for s in solutions if all(l == 0 for _, l in s.terms)]
    logged = [s for s in solutions if any(l > 0 for _, l in s.terms)]
    assert len(plain) == 1 and len(logged) == 1
    assert plain[0].terms == {(0, 0): (Q(1), Q(0))}
    assert logged[0].terms == {(0, 0): (Q(0), Q(1)), (0, 1): (Q(1), Q(0))}


def test_frobenius_log_tower_too_short():
    system = manual_system(2, {(0, 1): LaurentPoly.monomial(-1, Q(1))})
    with pytest.raises(LogDepthExceeded):
        frobenius_series(system, Q(0), 3, max_log=0)


def test_frobenius_default_log_bound_is_enough():
    system = manual_system(2, {(0, 1): LaurentPoly.monomial(-1, Q(1))})
    solutions = frobenius_series(system, Q(0), 2)
    assert len(solutions) == 2


def test_frobenius_resonant_shift_produces_log():
    # A_1' = 0, A_2' = A_2/z + A_1: solutions (1, z log z) and (0, z)
    system = manual_system(2, {
        (1, 1): LaurentPoly.monomial(-1, Q(1)),
        (1, 0): LaurentPoly.monomial(0, Q(1)),
    })
    solutions = frobenius_series(system, Q(0), 2, max_log=1)
    assert len(solutions) == 2
    by_shape = {frozenset(s.terms): s for s in solutions}
    log_key = frozenset({(0, 0), (1, 1)})
    plain_key = frozenset({(1, 0)})
    assert log_key in by_shape and plain_key in by_shape
    assert by_shape[log_key].terms == {(0, 0): (Q(1), Q(0)), (1, 1): (Q(0), Q(1))}
    assert by_shape[plain_key].terms == {(1, 0): (Q(0), Q(1))}
    with pytest.raises(LogDepthExceeded):
        frobenius_series(system, Q(0), 2, max_log=0)


def test_frobenius_integer_separated_exponents():
    # B = diag(0, 1/z): exponents 0 and 1; the rho=0 family holds both
    system = manual_system(2, {(1, 1): LaurentPoly.monomial(-1, Q(1))})
    solutions = frobenius_series(system, Q(0), 2)
    shapes = sorted(sorted(s.terms) for s in solutions)
    assert shapes == [[(0, 0)], [(1, 0)]]
    upper = frobenius_series(system, Q(1), 2)
    assert len(upper) == 1
    assert upper[0].terms == {(0, 0): (Q(0), Q(1))}


def test_frobenius_rejects_non_exponent():
    with pytest.raises(InputShapeError):
        frobenius_series(fock_system(), Q(1, 3), 4)


def test_solution_space_dim():
    assert solution_space_dim(fock_system()) == 1
    assert solution_space_dim(manual_system(4, {})) == 4


def test_solution_json_schema():
    (sol,) = frobenius_series(fock_system(), Q(2), 3)
    payload = sol.to_json()
    assert payload["exponent"] == "2"
    assert payload["depth"] == 3
    assert payload["terms"] == [{"k": 0, "log_power": 0, "vector": ["1"]}]
