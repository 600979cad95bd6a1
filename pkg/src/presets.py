# src/presets.py

from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional, Sequence, Tuple
import math

import numpy as np
import scipy.fft

from .config import AnalysisOptions, ForcingSpec, SimConfig
from .errors import ConfigurationError
from .field import PHYSICAL, SPECTRAL, FFT_NORM, GridSpec, QField, dealias, fft_workers, forward_transform, leray_project
from .littlewood_paley import CHI_EDGE, CHI_FLAT, build_filter_bank

TWO_PI = 2.0 * math.pi


def taylor_green_field(grid: GridSpec, amplitude: float = 1.0) -> QField:
    """
    Taylor-Green vortex u = A (sin(kx) cos(ky), -cos(kx) sin(ky)) in the x, y components.

    k = 2 pi / L per axis, so the field has one period across the domain.
    In 3D the field does not depend on z and its z component is zero.

    Args:
        grid (GridSpec): The grid.
        amplitude (float): Velocity amplitude A.

    Returns:
        QField: Physical field with zero scalar part.
    """
    coords = grid.coordinates()
    kx = TWO_PI / grid.domain_length[0]
    ky = TWO_PI / grid.domain_length[1]
    x, y = coords[0], coords[1]
    u = amplitude * np.sin(kx * x) * np.cos(ky * y)
    v = -amplitude * np.cos(kx * x) * np.sin(ky * y)
    return QField.from_components(grid, [0.0, u, v, 0.0])


def plateau_mask(grid: GridSpec, j: int) -> np.ndarray:
    """
    Wavenumbers where band j's multiplier is exactly 1 and every other band is 0.
    """
    r = grid.xi_magnitude
    return (r >= 2.0 ** j * CHI_EDGE) & (r <= 2.0 ** j * 2.0 * CHI_FLAT)


def broadband_field(
    grid: GridSpec,
    bands: Optional[Sequence[int]] = None,
    seed: int = 0,
    amplitude: float = 1.0,
) -> QField:
    """
    Seeded random divergence-free velocity with energy on the plateaus of several bands.

    Args:
        grid (GridSpec): The grid.
        bands (Optional[Sequence[int]]): Bands to excite; every band of the grid when omitted.
        seed (int): Seed of the random generator.
        amplitude (float): RMS velocity of the result.

    Returns:
        QField: Physical field, projected and dealiased, with zero scalar part.

    Raises:
        ConfigurationError: If no excited plateau survives dealiasing.
    """
    if bands is None:
        bands = list(build_filter_bank(grid).band_indices)
    mask = np.zeros(grid.sizes, dtype=bool)
    for j in bands:
        mask |= plateau_mask(grid, j)
    mask &= grid.dealias_mask
    if not mask.any():
        raise ConfigurationError(f"no band plateau of {list(bands)} is representable on grid {list(grid.sizes)}")

    rng = np.random.default_rng(seed)
    coeffs = np.zeros((4,) + grid.sizes, dtype=np.complex128)
    for m in range(grid.dim):
        noise = rng.standard_normal(grid.sizes) + 1j * rng.standard_normal(grid.sizes)
        coeffs[1 + m] = noise * mask
    axes = tuple(range(1, grid.dim + 1))
    physical = scipy.fft.ifftn(coeffs, axes=axes, norm=FFT_NORM, workers=fft_workers()).real
    projected = dealias(leray_project(forward_transform(QField(grid, PHYSICAL, physical))))

    energy = projected.energy()
    if energy == 0.0:
        raise ConfigurationError(f"broadband field on grid {list(grid.sizes)} vanished after projection")
    scale = amplitude * math.sqrt(0.5 * grid.volume / energy)
    return QField(grid, SPECTRAL, projected.data * scale).to_physical(check_symmetry=False)


@dataclass(frozen=True)
class Preset:
    """
    A named run shipped with quatflow.

    Attributes:
        name (str): Preset name used on the command line.
        description (str): One-line summary.
        build_config (Callable): Returns the run configuration and analysis options.
        build_field (Callable): Builds the initial field on a given grid.
    """

    name: str
    description: str
    build_config: Callable[[], Tuple[SimConfig, AnalysisOptions]]
    build_field: Callable[[GridSpec], QField]


def _taylor_green_config() -> Tuple[SimConfig, AnalysisOptions]:
    grid = GridSpec(dim=2, sizes=(64, 64), domain_length=(TWO_PI, TWO_PI))
    return SimConfig(grid=grid, nu=0.1, t_end=0.1, dt=1e-3, diag_every=10), AnalysisOptions()


def _broadband_config() -> Tuple[SimConfig, AnalysisOptions]:
    grid = GridSpec(dim=3, sizes=(32, 32, 32), domain_length=(TWO_PI,) * 3)
    return SimConfig(grid=grid, nu=0.05, t_end=0.05, dt=1e-3, diag_every=10), AnalysisOptions()


def _forced_config() -> Tuple[SimConfig, AnalysisOptions]:
    grid = GridSpec(dim=2, sizes=(32, 32), domain_length=(TWO_PI, TWO_PI))
    forcing = ForcingSpec(kind="steady_low_mode", amplitude=1e-3, mode=(0, 1))
    return SimConfig(grid=grid, nu=0.1, t_end=0.1, dt=1e-3, forcing=forcing, diag_every=10), AnalysisOptions()


PRESETS: Dict[str, Preset] = {
    "taylor-green-2d": Preset(
        name="taylor-green-2d",
        description="Decaying 2D Taylor-Green vortex, 64^2, L = 2 pi, nu = 0.1",
        build_config=_taylor_green_config,
        build_field=taylor_green_field,
    ),
    "broadband-3d": Preset(
        name="broadband-3d",
        description="Seeded random divergence-free field on band plateaus, 32^3, nu = 0.05",
        build_config=_broadband_config,
        build_field=lambda grid: broadband_field(grid, seed=7),
    ),
    "forced-low-mode": Preset(
        name="forced-low-mode",
        description="Small Taylor-Green seed under steady forcing on mode (0, 1), 32^2",
        build_config=_forced_config,
        build_field=lambda grid: taylor_green_field(grid, amplitude=1e-3),
    ),
}


def get_preset(name: str) -> Preset:
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset '{name}'; available: {', '.join(sorted(PRESETS))}")
    return PRESETS[name]


def with_forcing_amplitude(cfg: SimConfig, amplitude: float) -> SimConfig:
    """
    Overrides the forcing amplitude, switching an unforced run to steady forcing on mode (1, 0[, 0]).
    """
    forcing = cfg.forcing
    if forcing.kind == "none":
        mode = (1,) + (0,) * (cfg.grid.dim - 1)
        forcing = ForcingSpec(kind="steady_low_mode", amplitude=amplitude, mode=mode)
    else:
        forcing = replace(forcing, amplitude=amplitude)
    return replace(cfg, forcing=forcing)
