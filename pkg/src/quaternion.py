# src/quaternion.py

from typing import NamedTuple, Sequence
import numpy as np


class Quaternion(NamedTuple):
    """
    A single element of the Hamilton algebra, w + x i + y j + z k.

    Attributes:
        w (float): Real part.
        x (float): Coefficient of i.
        y (float): Coefficient of j.
        z (float): Coefficient of k.
    """

    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other: "Quaternion") -> "Quaternion":  # type: ignore[override]
        return Quaternion(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)

    def __mul__(self, other: "Quaternion") -> "Quaternion":  # type: ignore[override]
        return hamilton_mul(self, other)

    def conjugate(self) -> "Quaternion":
        return conjugate(self)

    def norm_sq(self) -> float:
        return norm_sq(self)


UNIT_ONE = Quaternion(1.0, 0.0, 0.0, 0.0)
UNIT_I = Quaternion(0.0, 1.0, 0.0, 0.0)
UNIT_J = Quaternion(0.0, 0.0, 1.0, 0.0)
UNIT_K = Quaternion(0.0, 0.0, 0.0, 1.0)


def hamilton_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    """
    Hamilton product a·b with i² = j² = k² = ijk = -1.

    Args:
        a (Quaternion): Left factor.
        b (Quaternion): Right factor.

    Returns:
        Quaternion: The (non-commutative) product.
    """
    return Quaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def conjugate(q: Quaternion) -> Quaternion:
    return Quaternion(q.w, -q.x, -q.y, -q.z)


def norm_sq(q: Quaternion) -> float:
    return q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z


def hamilton_mul_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Pointwise Hamilton product of two quaternion arrays.

    Both inputs have shape (4, ...) with components in (w, x, y, z) order;
    broadcasting over the trailing axes follows numpy rules.

    Args:
        a (np.ndarray): Left factor, shape (4, ...).
        b (np.ndarray): Right factor, shape (4, ...).

    Returns:
        np.ndarray: The pointwise product, shape (4, ...).
    """
    aw, ax, ay, az = a[0], a[1], a[2], a[3]
    bw, bx, by, bz = b[0], b[1], b[2], b[3]
    return np.stack([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def basis_array(index: int, shape: Sequence[int] = ()) -> np.ndarray:
    """
    Constant quaternion array holding the basis element 1, i, j or k.

    Args:
        index (int): 0 for 1, 1 for i, 2 for j, 3 for k.
        shape (Sequence[int]): Trailing grid shape to broadcast to.

    Returns:
        np.ndarray: Array of shape (4, *shape).
    """
    e = np.zeros((4,) + tuple(1 for _ in shape))
    e[index] = 1.0
    return np.broadcast_to(e, (4,) + tuple(shape))
