# src/field.py

from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple
import logging
import os

import numpy as np
import scipy.fft

from .errors import ConfigurationError, RepresentationError, SymmetryError

logger = logging.getLogger(__name__)

PHYSICAL = "physical"
SPECTRAL = "spectral"
COMPONENTS = ("w", "x", "y", "z")

# Coefficients carry Fourier-series normalization: f_hat = (1/N) sum f e^{-ikx}.
FFT_NORM = "forward"
SYMMETRY_TOL = 1e-10


def fft_workers() -> Optional[int]:
    """
    Worker count for scipy.fft, capped by QUATFLOW_THREADS.

    Returns:
        Optional[int]: Number of workers, or None for scipy's default.
    """
    value = os.environ.get("QUATFLOW_THREADS")
    if not value:
        return None
    try:
        workers = int(value)
    except ValueError:
        raise ConfigurationError(f"QUATFLOW_THREADS must be an integer, got '{value}'", keys=["QUATFLOW_THREADS"])
    if workers < 1:
        raise ConfigurationError(f"QUATFLOW_THREADS must be >= 1, got {workers}", keys=["QUATFLOW_THREADS"])
    return workers


@dataclass(frozen=True)
class GridSpec:
    """
    Periodic grid on the n-torus.

    Attributes:
        dim (int): Spatial dimension, 2 or 3.
        sizes (Tuple[int, ...]): Samples per axis, powers of two, at least 8.
        domain_length (Tuple[float, ...]): Period L per axis.
    """

    dim: int
    sizes: Tuple[int, ...]
    domain_length: Tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        if not self.domain_length:
            object.__setattr__(self, "domain_length", tuple(1.0 for _ in self.sizes))
        else:
            object.__setattr__(self, "domain_length", tuple(float(L) for L in self.domain_length))

        if self.dim not in (2, 3):
            raise ConfigurationError(f"grid dim must be 2 or 3, got {self.dim}", keys=["grid.dim"])
        if len(self.sizes) != self.dim:
            raise ConfigurationError(
                f"grid dim {self.dim} does not match sizes {list(self.sizes)}", keys=["grid.dim", "grid.sizes"]
            )
        if len(self.domain_length) != self.dim:
            raise ConfigurationError(
                f"grid domain_length {list(self.domain_length)} does not match dim {self.dim}",
                keys=["grid.domain_length"],
            )
        for n in self.sizes:
            if n < 8 or n & (n - 1):
                raise ConfigurationError(
                    f"grid sizes must be powers of two >= 8, got {list(self.sizes)}", keys=["grid.sizes"]
                )
        for L in self.domain_length:
            if not np.isfinite(L) or L <= 0:
                raise ConfigurationError(
                    f"grid domain_length must be positive, got {list(self.domain_length)}",
                    keys=["grid.domain_length"],
                )

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.sizes

    @property
    def n_points(self) -> int:
        return int(np.prod(self.sizes))

    @property
    def volume(self) -> float:
        return float(np.prod(self.domain_length))

    @property
    def cell_volume(self) -> float:
        return self.volume / self.n_points

    def coordinates(self) -> List[np.ndarray]:
        """
        Physical sample coordinates x_m = i * L_m / N_m, broadcast to the grid.

        Returns:
            List[np.ndarray]: One array of shape `sizes` per axis.
        """
        axes = [np.arange(n) * (L / n) for n, L in zip(self.sizes, self.domain_length)]
        return list(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def integer_wavenumbers(self) -> Tuple[np.ndarray, ...]:
        """Integer wavenumbers k_m in FFT order, broadcast to the grid."""
        ks = [np.fft.fftfreq(n, d=1.0 / n) for n in self.sizes]
        return tuple(np.meshgrid(*ks, indexing="ij"))

    @cached_property
    def wavenumbers(self) -> Tuple[np.ndarray, ...]:
        """Physical wavenumbers xi_m = 2 pi k_m / L_m."""
        return tuple(2.0 * np.pi * k / L for k, L in zip(self.integer_wavenumbers, self.domain_length))

    @cached_property
    def derivative_wavenumbers(self) -> Tuple[np.ndarray, ...]:
        """Physical wavenumbers with the Nyquist index of each axis set to zero."""
        out = []
        for m, (xi, n) in enumerate(zip(self.wavenumbers, self.sizes)):
            k_int = self.integer_wavenumbers[m]
            out.append(np.where(np.abs(k_int) == n // 2, 0.0, xi))
        return tuple(out)

    @cached_property
    def xi_squared(self) -> np.ndarray:
        return sum(xi ** 2 for xi in self.wavenumbers)

    @cached_property
    def xi_magnitude(self) -> np.ndarray:
        return np.sqrt(self.xi_squared)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        mask = np.ones(self.sizes, dtype=bool)
        for k, n in zip(self.integer_wavenumbers, self.sizes):
            mask &= np.abs(k) <= n // 3
        return mask

    def to_dict(self) -> dict:
        return {"dim": self.dim, "sizes": list(self.sizes), "domain_length": list(self.domain_length)}


class QField:
    """
    Quaternion-valued field on a periodic grid.

    Attributes:
        grid (GridSpec): The grid the field lives on.
        repr (str): Either "physical" or "spectral".
        data (np.ndarray): Shape (4, *grid.sizes); float64 when physical,
            complex128 Fourier coefficients when spectral.
    """

    def __init__(self, grid: GridSpec, repr: str, data: np.ndarray) -> None:
        if repr not in (PHYSICAL, SPECTRAL):
            raise RepresentationError(f"unknown representation tag '{repr}'")
        expected = (4,) + grid.sizes
        if data.shape != expected:
            raise RepresentationError(f"field data has shape {data.shape}, expected {expected}")
        self.grid: GridSpec = grid
        self.repr: str = repr
        if repr == PHYSICAL:
            self.data: np.ndarray = np.asarray(data, dtype=np.float64)
        else:
            self.data = np.asarray(data, dtype=np.complex128)

    @classmethod
    def zeros(cls, grid: GridSpec, repr: str = PHYSICAL) -> "QField":
        dtype = np.float64 if repr == PHYSICAL else np.complex128
        return cls(grid, repr, np.zeros((4,) + grid.sizes, dtype=dtype))

    @classmethod
    def from_components(cls, grid: GridSpec, components: Sequence) -> "QField":
        """
        Builds a physical field from four scalar components (arrays or constants).
        """
        data = np.zeros((4,) + grid.sizes)
        for c, value in enumerate(components):
            data[c] = value
        return cls(grid, PHYSICAL, data)

    def copy(self) -> "QField":
        return QField(self.grid, self.repr, self.data.copy())

    def require(self, repr: str) -> None:
        if self.repr != repr:
            raise RepresentationError(f"expected a {repr} field, got {self.repr}")

    def to_spectral(self) -> "QField":
        return self if self.repr == SPECTRAL else forward_transform(self)

    def to_physical(self, check_symmetry: bool = True) -> "QField":
        return self if self.repr == PHYSICAL else inverse_transform(self, check_symmetry=check_symmetry)

    def with_data(self, data: np.ndarray) -> "QField":
        return QField(self.grid, self.repr, data)

    def __add__(self, other: "QField") -> "QField":
        _check_compatible(self, other)
        return self.with_data(self.data + other.data)

    def __sub__(self, other: "QField") -> "QField":
        _check_compatible(self, other)
        return self.with_data(self.data - other.data)

    def __mul__(self, scalar: float) -> "QField":
        return self.with_data(self.data * scalar)

    __rmul__ = __mul__

    def energy(self, component: Optional[int] = None) -> float:
        """
        Kinetic energy 1/2 ||f||^2 over the torus.

        Args:
            component (Optional[int]): Restrict to one quaternion component.

        Returns:
            float: The energy.
        """
        return 0.5 * l2_norm_sq(self, component)

    def __repr__(self) -> str:
        return f"QField(grid={self.grid.sizes}, repr={self.repr})"


def _check_compatible(a: QField, b: QField) -> None:
    if a.grid != b.grid:
        raise RepresentationError(f"grid mismatch: {a.grid.sizes} vs {b.grid.sizes}")
    if a.repr != b.repr:
        raise RepresentationError(f"representation mismatch: {a.repr} vs {b.repr}")


def _spatial_axes(grid: GridSpec) -> Tuple[int, ...]:
    return tuple(range(1, grid.dim + 1))


def forward_transform(f: QField) -> QField:
    """
    Component-wise discrete Fourier transform.

    Coefficients are Fourier-series coefficients, so sum |f|^2 / N equals
    sum |f_hat|^2.

    Args:
        f (QField): Physical field.

    Returns:
        QField: Spectral field.
    """
    f.require(PHYSICAL)
    data = scipy.fft.fftn(f.data, axes=_spatial_axes(f.grid), norm=FFT_NORM, workers=fft_workers())
    return QField(f.grid, SPECTRAL, data)


def hermitian_defect(data: np.ndarray, grid: GridSpec) -> float:
    """
    Largest |c(-k) - conj(c(k))| over all components and wavenumbers.
    """
    axes = _spatial_axes(grid)
    mirrored = np.roll(np.flip(data, axis=axes), shift=1, axis=axes)
    return float(np.max(np.abs(mirrored - np.conj(data)))) if data.size else 0.0


def inverse_transform(f: QField, check_symmetry: bool = True) -> QField:
    """
    Inverse of forward_transform, returning a real physical field.

    Args:
        f (QField): Spectral field with Hermitian-symmetric coefficients.
        check_symmetry (bool): Verify the symmetry before discarding the
            imaginary part.

    Returns:
        QField: Physical field.

    Raises:
        SymmetryError: If the coefficients are not Hermitian to 1e-10.
    """
    f.require(SPECTRAL)
    if check_symmetry:
        scale = max(1.0, float(np.max(np.abs(f.data))))
        defect = hermitian_defect(f.data, f.grid)
        if defect > SYMMETRY_TOL * scale:
            raise SymmetryError(f"coefficients violate Hermitian symmetry by {defect:.3e}")
    data = scipy.fft.ifftn(f.data, axes=_spatial_axes(f.grid), norm=FFT_NORM, workers=fft_workers())
    return QField(f.grid, PHYSICAL, data.real)


def gradient(f: QField) -> List[QField]:
    """
    Spectral partial derivatives d/dx_m of all four components.

    Args:
        f (QField): Spectral field.

    Returns:
        List[QField]: n spectral fields, one per axis.
    """
    f.require(SPECTRAL)
    return [QField(f.grid, SPECTRAL, 1j * xi * f.data) for xi in f.grid.derivative_wavenumbers]


def max_divergence(f: QField) -> float:
    """
    Largest |xi . u_hat(k)| of the advecting components over all modes.
    """
    f.require(SPECTRAL)
    n = f.grid.dim
    div = sum(xi * f.data[1 + m] for m, xi in enumerate(f.grid.derivative_wavenumbers[:n]))
    return float(np.max(np.abs(div)))


def leray_project(f: QField) -> QField:
    """
    Projects the advecting components (x, y[, z]) onto divergence-free fields.

    For every mode with a nonzero derivative wavenumber, u_hat is replaced by
    u_hat - xi (xi . u_hat) / |xi|^2. The scalar part, and the z component in
    2D, pass through unchanged.

    Args:
        f (QField): Spectral field.

    Returns:
        QField: Projected spectral field.
    """
    f.require(SPECTRAL)
    grid = f.grid
    n = grid.dim
    xis = grid.derivative_wavenumbers[:n]
    k2 = sum(xi ** 2 for xi in xis)
    inv_k2 = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    data = f.data.copy()
    xi_dot_u = sum(xi * data[1 + m] for m, xi in enumerate(xis))
    for m, xi in enumerate(xis):
        data[1 + m] -= xi * xi_dot_u * inv_k2
    return QField(grid, SPECTRAL, data)


def dealias(f: QField) -> QField:
    """
    Two-thirds rule: zeroes every coefficient with some |k_m| > floor(N_m / 3).
    """
    f.require(SPECTRAL)
    return QField(f.grid, SPECTRAL, f.data * f.grid.dealias_mask)


def l2_norm_sq(f: QField, component: Optional[int] = None) -> float:
    """
    ||f||^2 over the torus, computed in either representation.

    Args:
        f (QField): The field.
        component (Optional[int]): Restrict to one quaternion component.

    Returns:
        float: The squared L2 norm.
    """
    data = f.data if component is None else f.data[component:component + 1]
    if f.repr == SPECTRAL:
        return float(f.grid.volume * np.sum(np.abs(data) ** 2))
    return float(f.grid.cell_volume * np.sum(data ** 2))


def gradient_norm_sq(f: QField, component: Optional[int] = None) -> float:
    """
    ||grad f||^2 over the torus, evaluated spectrally.
    """
    spec = f.to_spectral()
    k2 = sum(xi ** 2 for xi in spec.grid.derivative_wavenumbers)
    data = spec.data if component is None else spec.data[component:component + 1]
    return float(spec.grid.volume * np.sum(k2 * np.abs(data) ** 2))


def inner_product(a: QField, b: QField) -> float:
    """
    <a, b> = integral of the component-wise dot product over the torus.
    """
    a_hat, b_hat = a.to_spectral(), b.to_spectral()
    _check_compatible(a_hat, b_hat)
    return float(a.grid.volume * np.sum(np.real(a_hat.data * np.conj(b_hat.data))))
