"""Algebra of 2x2 unitary gates.

Gates are plain ``(2, 2)`` complex numpy arrays; row index is the output
port and column index the input port. Rotations follow the printed matrix
forms, so ``rotation("x", theta)`` carries ``+j sin(theta/2)`` off the
diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NotUnitaryError

UNITARY_TOL = 1e-9
_LOCK_TOL = 1e-13

_PAULI = (
    np.array([[1, 0], [0, 1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

ORDERS = ("ZYX", "XYZ")


@dataclass(frozen=True)
class EulerAngles:
    """Global phase ``delta`` and three rotation angles, in radians.

    ``ZYX`` means ``exp(j delta) Rz(alpha) Ry(beta) Rx(gamma)``; ``XYZ`` means
    ``exp(j delta) Rx(alpha) Ry(beta) Rz(gamma)``.
    """

    delta: float
    alpha: float
    beta: float
    gamma: float
    order: str = "ZYX"

    def __post_init__(self):
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}, got {self.order!r}")
        for name in ("delta", "alpha", "beta", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def as_tuple(self):
        return (self.delta, self.alpha, self.beta, self.gamma)


def pauli(k: int) -> np.ndarray:
    """Return the Pauli matrix sigma_k (k = 0 is the identity)."""
    if isinstance(k, bool) or k not in (0, 1, 2, 3):
        raise IndexError(f"Pauli index must be 0..3, got {k!r}")
    return _PAULI[k].copy()


def rotation(axis: str, theta: float) -> np.ndarray:
    """Rotation by ``theta`` about ``axis`` ('x', 'y' or 'z')."""
    if not math.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    c = math.cos(theta / 2)
    s = math.sin(theta / 2)
    axis = axis.lower()
    if axis == "x":
        return np.array([[c, 1j * s], [1j * s, c]], dtype=complex)
    if axis == "y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "z":
        return np.array(
            [[complex(c, -s), 0], [0, complex(c, s)]], dtype=complex
        )
    raise ValueError(f"unknown rotation axis {axis!r}")


def compose(gates: Sequence[np.ndarray]) -> np.ndarray:
    """Cascade gates in signal order.

    ``gates[0]`` acts on the input first, so the result is
    ``gates[-1] @ ... @ gates[0]``.
    """
    if len(gates) == 0:
        raise ValueError("compose needs at least one gate")
    out = np.asarray(gates[0], dtype=complex)
    for g in gates[1:]:
        out = np.asarray(g, dtype=complex) @ out
    return out


def euler_compose(angles: EulerAngles) -> np.ndarray:
    phase = np.exp(1j * angles.delta)
    if angles.order == "ZYX":
        first, last = "x", "z"
    else:
        first, last = "z", "x"
    return phase * compose(
        [rotation(first, angles.gamma), rotation("y", angles.beta), rotation(last, angles.alpha)]
    )


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.shape != (2, 2) or not np.all(np.isfinite(u)):
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(2))) <= tol)


def _zyz(w: np.ndarray, negative_b: bool):
    """Split an SU(2) matrix as Rz(a) Ry(b) Rz(c).

    ``b`` lies in [0, pi], or in [-pi, 0] when ``negative_b``. At the
    degenerate points (b = 0 or +-pi) ``c`` is fixed to zero.
    """
    w00, w10 = w[0, 0], w[1, 0]
    half_b = math.atan2(abs(w10), abs(w00))
    if negative_b:
        half_b = -half_b
        w10 = -w10
    if abs(w10) < _LOCK_TOL:
        return -2.0 * np.angle(w00), 2.0 * half_b, 0.0
    if abs(w00) < _LOCK_TOL:
        return 2.0 * np.angle(w10), 2.0 * half_b, 0.0
    p0 = float(np.angle(w00))
    p1 = float(np.angle(w10))
    return p1 - p0, 2.0 * half_b, -p0 - p1


def euler_decompose(u: np.ndarray, order: str = "ZYX") -> EulerAngles:
    """Find Euler angles that rebuild ``u`` through :func:`euler_compose`.

    ``delta`` is half the principal argument of ``det(u)``, so it lies in
    (-pi/2, pi/2]; ``beta`` lies in [-pi/2, pi/2]; ``gamma`` in (-2pi, 2pi];
    ``alpha`` in [0, 4pi), which absorbs the sign left over after removing the
    global phase.
    """
    if order not in ORDERS:
        raise ValueError(f"order must be one of {ORDERS}, got {order!r}")
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u):
        raise NotUnitaryError("input is not a 2x2 unitary within 1e-9")

    delta = float(np.angle(np.linalg.det(u))) / 2.0
    v = np.exp(-1j * delta) * u
    # Rx(t) = Ry(pi/2) Rz(-t) Ry(-pi/2) turns both orders into Z-Y-Z.
    if order == "ZYX":
        a, b, c = _zyz(v @ rotation("y", math.pi / 2), negative_b=False)
        alpha, beta, gamma = a, b - math.pi / 2, -c
    else:
        a, b, c = _zyz(rotation("y", -math.pi / 2) @ v, negative_b=True)
        alpha, beta, gamma = -a, b + math.pi / 2, c
    alpha = float(np.mod(alpha, 4 * math.pi))
    if alpha >= 4 * math.pi:
        alpha = 0.0
    if gamma <= -2 * math.pi:
        gamma += 4 * math.pi
    # + 0.0 folds negative zero
    return EulerAngles(delta + 0.0, alpha + 0.0, float(beta) + 0.0, float(gamma) + 0.0, order)


def haar_unitary(rng: np.random.Generator) -> np.ndarray:
    """Sample a Haar-distributed 2x2 unitary."""
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
