from fractions import Fraction

import numpy as np
import pytest

from invbl import Problem, ValidationError, b_plus, validate
from invbl import linalg as la


def test_valid_single_factor():
    p = validate(Problem(2, (np.array([[1.0, 0.0]]),), (1.0,)))
    assert p.m == 1 and p.m_plus == 1 and p.validated


def test_non_surjective_rejected_with_index():
    with pytest.raises(ValidationError, match="B_2"):
        validate(Problem(2, (np.array([[1.0, 0.0]]), np.array([[0.0, 0.0]])), (1.0, 1.0)))


def test_sign_pattern_rejected():
    with pytest.raises(ValidationError, match="sign pattern"):
        validate(Problem(2, (np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])), (-0.5, 1.0)))


def test_asymmetric_kernel_rejected():
    with pytest.raises(ValidationError):
        validate(Problem(1, (np.array([[1.0]]),), (1.0,), np.array([[1.0, 0.0], [0.0, 1.0]])))
    with pytest.raises(ValidationError, match="symmetric"):
        validate(Problem(2, (np.eye(2),), (1.0,), np.array([[0.0, 1.0], [0.0, 0.0]])))


def test_validate_idempotent():
    p = validate(Problem(2, (np.array([[1, 1]]),), (Fraction(1, 2),), mode="rational"))
    assert validate(p) is p
    q = validate(Problem(p.dim, p.maps, p.exponents, p.kernel, p.mode))
    assert q.exponents == p.exponents and np.array_equal(q.kernel, p.kernel)


def test_zero_exponent_and_zero_dim_are_inert():
    p = validate(Problem(2, (np.eye(2), np.zeros((0, 2)), np.array([[1.0, 1.0]])), (1.0, 0.0, 0.0)))
    assert p.inert == (False, True, True)
    assert p.active == [0]


def test_b_plus_examples():
    p = Problem(2, (np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])), (1.0, 1.0))
    assert np.array_equal(b_plus(p), np.eye(2))
    q = Problem(2, (np.array([[1.0, 0.0]]),), (-1.0,))
    assert b_plus(q).shape == (0, 2)
    r = Problem(2, (np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]])), (1.0, 1.0))
    assert np.array_equal(b_plus(r), [[1, 0], [1, 0]]) and la.rank(b_plus(r)) == 1
