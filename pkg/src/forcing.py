# src/forcing.py

import math

import numpy as np

from .config import ForcingSpec
from .errors import ConfigurationError
from .field import PHYSICAL, SPECTRAL, GridSpec, QField, forward_transform, leray_project


def perpendicular_direction(xi: np.ndarray) -> np.ndarray:
    """
    Unit vector perpendicular to a nonzero wavevector (2D or 3D).
    """
    if xi.size == 2:
        v = np.array([-xi[1], xi[0]])
    else:
        axis = np.zeros(3)
        axis[int(np.argmin(np.abs(xi)))] = 1.0
        v = np.cross(xi, axis)
    return v / np.linalg.norm(v)


def forcing_eval(spec: ForcingSpec, t: float, grid: GridSpec) -> QField:
    """
    Spectral forcing field f(t).

    The low-mode kinds place a single divergence-free Fourier mode in the
    advecting components: amplitude * v * sin(xi . x) with v perpendicular to
    xi = 2 pi mode / L. The time-decaying kind is scaled by e^{-decay_rate t}.

    Args:
        spec (ForcingSpec): The forcing description.
        t (float): Time.
        grid (GridSpec): Grid to evaluate on.

    Returns:
        QField: Spectral forcing field.

    Raises:
        ConfigurationError: If the mode is zero, has the wrong length or is not
            representable below the dealiasing cutoff.
    """
    if spec.kind == "none" or spec.amplitude == 0.0:
        return QField.zeros(grid, SPECTRAL)

    mode = np.asarray(spec.mode, dtype=np.int64)
    if mode.size != grid.dim or not np.any(mode):
        raise ConfigurationError(f"forcing mode {list(spec.mode)} invalid for a {grid.dim}D grid", keys=["forcing.mode"])
    for k, n in zip(mode, grid.sizes):
        if abs(int(k)) > n // 3:
            raise ConfigurationError(
                f"forcing mode {list(spec.mode)} not representable on grid {list(grid.sizes)}",
                keys=["forcing.mode", "grid.sizes"],
            )

    xi = np.array([2.0 * math.pi * k / L for k, L in zip(mode, grid.domain_length)])
    direction = perpendicular_direction(xi)
    coords = grid.coordinates()
    wave = np.sin(sum(x_m * xi_m for x_m, xi_m in zip(coords, xi)))

    scale = spec.amplitude
    if spec.kind == "time_decaying_low_mode":
        scale *= math.exp(-spec.decay_rate * t)

    data = np.zeros((4,) + grid.sizes)
    for m in range(grid.dim):
        data[1 + m] = scale * direction[m] * wave
    return leray_project(forward_transform(QField(grid, PHYSICAL, data)))
