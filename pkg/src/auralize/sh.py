"""Real spherical harmonics (ACN / SN3D), sound-field rotation, speaker grids.

Directions are unit vectors in a right-handed frame: +x front, +y left,
+z up. Azimuth is measured counterclockwise from +x, elevation up from
the horizontal plane.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import lpmv

from .errors import ValidationError


def direction(azimuth: float, elevation: float) -> np.ndarray:
    """Unit vector from azimuth/elevation in radians."""
    ce = math.cos(elevation)
    return np.array(
        [ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)]
    )


def angular_distance(u: np.ndarray, v: np.ndarray) -> float:
    return math.acos(float(np.clip(np.dot(u, v), -1.0, 1.0)))


def sh_matrix(directions: np.ndarray, order: int) -> np.ndarray:
    """Real SH sampling matrix, shape (ndirs, (order+1)^2), ACN order, SN3D.

    No Condon-Shortley phase; Y00 = 1 for every direction.
    """
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    x, y, z = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    az = np.arctan2(y, x)
    n = (order + 1) ** 2
    out = np.empty((len(dirs), n))
    for l in range(order + 1):
        for m in range(-l, l + 1):
            am = abs(m)
            norm = math.sqrt(
                (2.0 if m != 0 else 1.0)
                * math.factorial(l - am)
                / math.factorial(l + am)
            )
            leg = lpmv(am, l, z) * (-1.0) ** am  # strip Condon-Shortley
            ang = np.cos(m * az) if m >= 0 else np.sin(am * az)
            out[:, l * l + l + m] = norm * leg * ang
    return out


def sh_encode(dir_vec, order: int = 3) -> np.ndarray:
    """Encode a single direction; length (order+1)^2 coefficient vector."""
    d = np.asarray(dir_vec, dtype=float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValidationError("direction must be a unit vector")
    return sh_matrix(d[None, :], order)[0]


def rotation_matrix(yaw: float = 0.0, pitch: float = 0.0, roll: float = 0.0) -> np.ndarray:
    """3D rotation Rz(yaw) @ Ry(pitch) @ Rx(roll). Positive yaw turns front toward left."""
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    return rz @ ry @ rx


@lru_cache(maxsize=None)
def _fit_grid(order: int) -> np.ndarray:
    # spherical Fibonacci grid; enough points to overdetermine every order block
    n = max(48, 4 * (order + 1) ** 2)
    i = np.arange(n)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def sh_rotation_blocks(rot3: np.ndarray, order: int) -> np.ndarray:
    """SH-domain rotation matrix, block-diagonal per order, shape (n, n).

    Built by fitting each order block on a spherical grid: the rotated
    field's coefficients satisfy Y(R g) = M Y(g) exactly, and real SH of
    a given order transform among themselves.
    """
    grid = _fit_grid(order)
    y = sh_matrix(grid, order)
    yr = sh_matrix(grid @ rot3.T, order)
    n = (order + 1) ** 2
    m = np.zeros((n, n))
    for l in range(order + 1):
        sl = slice(l * l, (l + 1) * (l + 1))
        block, *_ = np.linalg.lstsq(y[:, sl], yr[:, sl], rcond=None)
        m[sl, sl] = block.T
    return m


def rotate_coefficients(coeffs: np.ndarray, rot3: np.ndarray) -> np.ndarray:
    """Rotate an SH coefficient vector (or (n, samples) matrix) by rot3."""
    coeffs = np.asarray(coeffs, dtype=float)
    n = coeffs.shape[0]
    order = int(round(math.sqrt(n))) - 1
    if (order + 1) ** 2 != n:
        raise ValidationError(f"coefficient count {n} is not a square")
    return sh_rotation_blocks(rot3, order) @ coeffs


_PHI = (1.0 + math.sqrt(5.0)) / 2.0


def dodecahedron_directions() -> np.ndarray:
    """The 20 unit vectors at regular-dodecahedron vertices, fixed order."""
    inv = 1.0 / _PHI
    pts = []
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sz in (-1.0, 1.0):
                pts.append((sx, sy, sz))
    for sa in (-1.0, 1.0):
        for sb in (-1.0, 1.0):
            pts.append((0.0, sa * inv, sb * _PHI))
            pts.append((sa * inv, sb * _PHI, 0.0))
            pts.append((sa * _PHI, 0.0, sb * inv))
    arr = np.array(sorted(pts))
    return arr / np.linalg.norm(arr, axis=1, keepdims=True)
