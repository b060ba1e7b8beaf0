import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fppga.errors import NotUnitaryError
from fppga.gates import (
    EulerAngles,
    compose,
    euler_compose,
    euler_decompose,
    haar_unitary,
    is_unitary,
    pauli,
    rotation,
)

angles = st.floats(-20.0, 20.0, allow_nan=False, allow_infinity=False)
I2 = np.eye(2)


def test_pauli_matrices():
    np.testing.assert_array_equal(pauli(0), I2)
    np.testing.assert_array_equal(pauli(1), [[0, 1], [1, 0]])
    np.testing.assert_array_equal(pauli(2), [[0, -1j], [1j, 0]])
    np.testing.assert_array_equal(pauli(3), [[1, 0], [0, -1]])
    for k in (1, 2, 3):
        np.testing.assert_allclose(pauli(k) @ pauli(k), I2, atol=1e-12)


@pytest.mark.parametrize("k", [-1, 4, True, 1.5])
def test_pauli_bad_index(k):
    with pytest.raises(IndexError):
        pauli(k)


def test_rotation_examples():
    np.testing.assert_allclose(rotation("x", 0), I2, atol=1e-15)
    np.testing.assert_allclose(rotation("x", math.pi), [[0, 1j], [1j, 0]], atol=1e-15)
    th = 0.37
    np.testing.assert_allclose(rotation("z", th), np.diag([np.exp(-0.5j * th), np.exp(0.5j * th)]), atol=1e-15)
    np.testing.assert_allclose(rotation("y", th), [[math.cos(th / 2), -math.sin(th / 2)],
                                                   [math.sin(th / 2), math.cos(th / 2)]], atol=1e-15)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_rotation_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        rotation("y", bad)


def test_rotation_unknown_axis():
    with pytest.raises(ValueError):
        rotation("w", 1.0)


@given(axis=st.sampled_from("xyz"), a=angles, b=angles)
def test_rotation_group_law(axis, a, b):
    np.testing.assert_allclose(rotation(axis, a) @ rotation(axis, b), rotation(axis, a + b), atol=1e-12)


@given(axis=st.sampled_from("xyz"), a=angles)
def test_rotation_is_special_unitary(axis, a):
    r = rotation(axis, a)
    assert is_unitary(r, 1e-12)
    assert abs(np.linalg.det(r) - 1) < 1e-12


def test_compose_order_and_identities():
    np.testing.assert_allclose(compose([I2, I2]), I2)
    np.testing.assert_allclose(compose([rotation("x", math.pi), rotation("x", -math.pi)]), I2, atol=1e-15)
    a, b, g = 0.3, -1.1, 2.0
    np.testing.assert_allclose(
        compose([rotation("x", g), rotation("y", b), rotation("z", a)]),
        euler_compose(EulerAngles(0.0, a, b, g, "ZYX")),
        atol=1e-15,
    )
    # First element acts first: compose([A, B]) = B @ A.
    A, B = rotation("x", 0.4), rotation("y", 0.9)
    np.testing.assert_allclose(compose([A, B]), B @ A)
    with pytest.raises(ValueError):
        compose([])


def test_euler_compose_examples():
    np.testing.assert_allclose(euler_compose(EulerAngles(0, 0, 0, 0)), I2, atol=1e-15)
    np.testing.assert_allclose(euler_compose(EulerAngles(math.pi / 2, 0, 0, -math.pi, "ZYX")),
                               [[0, 1], [1, 0]], atol=1e-15)
    np.testing.assert_allclose(euler_compose(EulerAngles(0, 0.8, 0, 0, "ZYX")), rotation("z", 0.8), atol=1e-15)
    np.testing.assert_allclose(euler_compose(EulerAngles(0, 0.8, 0, 0, "XYZ")), rotation("x", 0.8), atol=1e-15)


def test_euler_angles_validation():
    with pytest.raises(ValueError):
        EulerAngles(0, math.nan, 0, 0)
    with pytest.raises(ValueError):
        EulerAngles(0, 0, 0, 0, "ZXZ")


@given(d=angles, a=angles, b=angles, g=angles, order=st.sampled_from(["ZYX", "XYZ"]))
def test_euler_compose_determinant(d, a, b, g, order):
    u = euler_compose(EulerAngles(d, a, b, g, order))
    assert is_unitary(u, 1e-12)
    assert abs(np.linalg.det(u) - np.exp(2j * d)) < 1e-12


def test_decompose_examples():
    assert euler_decompose(I2).as_tuple() == (0.0, 0.0, 0.0, 0.0)
    x = euler_decompose(pauli(1), "ZYX")
    np.testing.assert_allclose(euler_compose(x), pauli(1), atol=1e-12)
    np.testing.assert_allclose(x.as_tuple(), (math.pi / 2, 0.0, 0.0, -math.pi), atol=1e-12)
    y = euler_decompose(rotation("y", 0.7))
    np.testing.assert_allclose(y.as_tuple(), (0.0, 0.0, 0.7, 0.0), atol=1e-12)


def test_decompose_rejects_non_unitary():
    with pytest.raises(NotUnitaryError):
        euler_decompose(np.array([[1, 1], [0, 1]], dtype=complex))
    with pytest.raises(NotUnitaryError):
        euler_decompose(np.eye(3))
    with pytest.raises(ValueError):
        euler_decompose(I2, "ZZZ")


def test_decompose_accepts_slightly_perturbed_unitary():
    u = rotation("x", 0.3) * (1 + 1e-10)
    angles_ = euler_decompose(u)
    assert np.linalg.norm(euler_compose(angles_) - u) < 1e-9


def _check_roundtrip(u, order):
    e = euler_decompose(u, order)
    assert np.linalg.norm(euler_compose(e) - u) < 1e-10
    assert -math.pi / 2 < e.delta <= math.pi / 2 + 1e-15
    assert 0 <= e.alpha < 4 * math.pi
    assert -math.pi / 2 - 1e-12 <= e.beta <= math.pi / 2 + 1e-12
    assert -2 * math.pi < e.gamma <= 2 * math.pi


@pytest.mark.parametrize("order", ["ZYX", "XYZ"])
def test_roundtrip_haar(order):
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        _check_roundtrip(haar_unitary(rng), order)


@pytest.mark.parametrize("order", ["ZYX", "XYZ"])
@given(d=angles, a=angles, b=angles, g=angles)
@settings(max_examples=300)
def test_roundtrip_from_angles(order, d, a, b, g):
    _check_roundtrip(euler_compose(EulerAngles(d, a, b, g, order)), order)


@pytest.mark.parametrize("order", ["ZYX", "XYZ"])
@pytest.mark.parametrize("beta", [math.pi / 2, -math.pi / 2])
def test_gimbal_lock_fixes_gamma(order, beta):
    u = euler_compose(EulerAngles(0.2, 1.0, beta, 0.5, order))
    e = euler_decompose(u, order)
    assert e.gamma == 0.0
    assert np.linalg.norm(euler_compose(e) - u) < 1e-10


def test_haar_unitary_is_unitary_and_seeded():
    a = haar_unitary(np.random.default_rng(5))
    b = haar_unitary(np.random.default_rng(5))
    assert is_unitary(a, 1e-12)
    np.testing.assert_array_equal(a, b)
