from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qslab.errors import DegenerateForm, ZeroVector
from qslab.quadform import (EXAMPLE_FORM, ProjectivePoint, QuadraticForm, dual_form,
                            find_isotropic_vector, is_nonsingular_mod, primitive_rep)

F = EXAMPLE_FORM


def test_example_form_invariants():
    assert F.n_vars == 5
    assert F.discriminant() == -1
    assert F.bad_primes == frozenset({2})
    assert F.evaluate([1, 2, 3, 4, 5]) == 5
    assert F.signature() == (4, 1)
    assert F.gradient([1, 0, 0, 0, 1]) == [2, 0, 0, 0, -2]


def test_offdiagonal_form():
    G = QuadraticForm.parse("n=2; 1 0 1")
    assert G.discriminant() == Fraction(-1, 4)
    assert not G.is_diagonal


def test_dual_form():
    assert dual_form(F).diagonal() == [-1, -1, -1, -1, 1]
    assert dual_form(QuadraticForm.from_diagonal([1, 2])).diagonal() == [2, 1]


def test_degenerate_raises():
    with pytest.raises(DegenerateForm):
        QuadraticForm.parse("n=3; 1 0 0; 1 1 1").discriminant()


def test_parse_roundtrip_text():
    G = QuadraticForm.parse("n=4; 2 0 0; -3 0 1; 1 2 3; 5 3 3")
    assert QuadraticForm.parse(G.to_text()) == G


@given(st.lists(st.integers(-9, 9).filter(bool), min_size=2, max_size=6))
def test_diagonal_roundtrip_and_discriminant(d):
    G = QuadraticForm.from_diagonal(d)
    assert QuadraticForm.parse(G.to_text()) == G
    prod = 1
    for v in d:
        prod *= v
    assert G.det_A == prod


@given(st.lists(st.integers(-20, 20), min_size=5, max_size=5))
def test_evaluate_matches_array(x):
    import numpy as np
    assert F.evaluate(x) == int(F.evaluate_array(np.array([x]))[0])


def test_projective_points():
    P = primitive_rep([0, -2, 4, 0, -6])
    assert P.coords == (0, 1, -2, 0, 3) and P.height == 3
    with pytest.raises(ZeroVector):
        primitive_rep([0, 0, 0])
    assert ProjectivePoint((1, 2)) < ProjectivePoint((1, 3))


def test_isotropic_vectors():
    assert find_isotropic_vector(F, 3).coords == (1, 0, 0, 0, 1)
    assert find_isotropic_vector(QuadraticForm.from_diagonal([1, 1, 1]), 5) is None
    v = find_isotropic_vector(QuadraticForm.from_diagonal([1, 1, -2]), 3)
    assert v is not None and QuadraticForm.from_diagonal([1, 1, -2]).evaluate(v.coords) == 0


def test_nonsingular_mod():
    assert is_nonsingular_mod(F, 3)
    assert not is_nonsingular_mod(F, 2)
