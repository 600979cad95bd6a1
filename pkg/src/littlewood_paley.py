# src/littlewood_paley.py

from dataclasses import dataclass
from typing import Dict, Optional, Tuple
import logging
import math

import numpy as np

from .errors import ConfigurationError, RangeError
from .field import PHYSICAL, SPECTRAL, GridSpec, QField, inverse_transform

logger = logging.getLogger(__name__)

# Annulus of the band profile phi, and the ball where the low-pass chi equals 1.
ANNULUS_INNER = 3.0 / 4.0
ANNULUS_OUTER = 8.0 / 3.0
CHI_FLAT = 3.0 / 4.0
CHI_EDGE = 4.0 / 3.0


def smooth_step(t: np.ndarray) -> np.ndarray:
    """
    C-infinity step: 0 for t <= 0, 1 for t >= 1, e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}) between.
    """
    t = np.asarray(t, dtype=np.float64)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.where(inside, t, 0.5)
    a = np.exp(-1.0 / tc)
    b = np.exp(-1.0 / (1.0 - tc))
    return np.where(t >= 1.0, 1.0, np.where(inside, a / (a + b), 0.0))


def chi(r: np.ndarray) -> np.ndarray:
    """
    Radial low-pass profile: 1 on |xi| <= 3/4, 0 on |xi| >= 4/3.
    """
    return 1.0 - smooth_step((np.asarray(r) - CHI_FLAT) / (CHI_EDGE - CHI_FLAT))


def phi(r: np.ndarray) -> np.ndarray:
    """
    Band profile chi(r/2) - chi(r), supported in the annulus 3/4 <= r <= 8/3.
    """
    r = np.asarray(r)
    return chi(r / 2.0) - chi(r)


class FilterBank:
    """
    Discrete Littlewood-Paley filter bank with precomputed multipliers.

    Band j multiplies coefficients by phi(2^-j |xi|) with xi = 2 pi k / L; the
    low block multiplies by chi(2^-j_min |xi|). The sum of all multipliers is
    chi(2^-(j_max+1) |xi|), which equals 1 on every representable wavenumber.

    Attributes:
        grid (GridSpec): Grid the multipliers are built for.
        j_min (int): Lowest band.
        j_max (int): Highest band the grid can represent.
    """

    def __init__(self, grid: GridSpec, j_min: int, j_max: int) -> None:
        self.grid: GridSpec = grid
        self.j_min: int = j_min
        self.j_max: int = j_max
        r = grid.xi_magnitude
        self._low: np.ndarray = chi(r * 2.0 ** (-j_min))
        self._bands: Dict[int, np.ndarray] = {j: phi(r * 2.0 ** (-j)) for j in self.band_indices}
        for m in [self._low, *self._bands.values()]:
            m.setflags(write=False)

    @property
    def band_indices(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def multiplier(self, j: int) -> np.ndarray:
        self.check_band(j)
        return self._bands[j]

    @property
    def low_multiplier(self) -> np.ndarray:
        return self._low

    def check_band(self, j: int) -> None:
        if j < self.j_min or j > self.j_max:
            raise RangeError(f"band {j} outside [{self.j_min}, {self.j_max}]")

    def partition_sum(self) -> np.ndarray:
        """Sum over j of phi(2^-j |xi|) at every grid wavenumber."""
        return sum(self._bands[j] for j in self.band_indices)

    def covered_mask(self) -> np.ndarray:
        """Nonzero wavenumbers where the band sum alone must equal 1."""
        r = self.grid.xi_magnitude
        return (r > 0) & (r >= 2.0 ** self.j_min * CHI_EDGE) & (r <= 2.0 ** self.j_max * 2.0 * CHI_FLAT)

    def partition_deviation(self) -> float:
        """Largest |sum_j phi_j - 1| over covered wavenumbers."""
        mask = self.covered_mask()
        if not mask.any():
            return 0.0
        return float(np.max(np.abs(self.partition_sum()[mask] - 1.0)))

    def frame_bounds(self) -> Tuple[float, float]:
        """
        Bounds (c, C) with c ||f||^2 <= ||low f||^2 + sum_j ||Delta_j f||^2 <= C ||f||^2.

        Returns:
            Tuple[float, float]: min and max of low^2 + sum_j phi_j^2 over the grid.
        """
        total = self._low ** 2 + sum(self._bands[j] ** 2 for j in self.band_indices)
        return float(np.min(total)), float(np.max(total))

    def __repr__(self) -> str:
        return f"FilterBank(grid={self.grid.sizes}, j_min={self.j_min}, j_max={self.j_max})"


def build_filter_bank(grid: GridSpec, j_min: Optional[int] = None) -> FilterBank:
    """
    Chooses the band range for a grid and precomputes the multipliers.

    Args:
        grid (GridSpec): The grid.
        j_min (Optional[int]): Override for the lowest band; modes below it
            fall into the low block.

    Returns:
        FilterBank: The filter bank.

    Raises:
        ConfigurationError: If fewer than two bands fit on the grid.
    """
    r = grid.xi_magnitude
    xi_min = float(np.min(r[r > 0]))
    xi_max = float(np.max(r))
    auto_j_min = int(math.floor(math.log2(CHI_FLAT * xi_min)))
    j_max = int(math.ceil(math.log2(CHI_EDGE * xi_max))) - 1
    if j_min is None:
        j_min = auto_j_min
    if j_max - j_min + 1 < 2:
        raise ConfigurationError(
            f"grid {list(grid.sizes)} hosts bands [{j_min}, {j_max}]; at least 2 are required",
            keys=["grid.sizes"],
        )
    bank = FilterBank(grid, j_min, j_max)
    logger.debug(f"Filter bank built: {bank}")
    return bank


def _apply(f: QField, multiplier: np.ndarray) -> QField:
    spec = f.to_spectral()
    out = QField(f.grid, SPECTRAL, spec.data * multiplier)
    if f.repr == PHYSICAL:
        return inverse_transform(out, check_symmetry=False)
    return out


def project_band(f: QField, bank: FilterBank, j: int) -> QField:
    """
    Littlewood-Paley projection Delta_j f.

    Args:
        f (QField): Field in either representation.
        bank (FilterBank): Filter bank for f's grid.
        j (int): Band index in [j_min, j_max].

    Returns:
        QField: Band-filtered field, in f's representation.

    Raises:
        RangeError: If j is outside the bank.
    """
    return _apply(f, bank.multiplier(j))


def project_low(f: QField, bank: FilterBank) -> QField:
    return _apply(f, bank.low_multiplier)


@dataclass
class BandDecomposition:
    """
    Littlewood-Paley view of a field.

    Attributes:
        bands (Dict[int, QField]): Delta_j f per band, spectral.
        low_block (QField): Frequencies below the lowest annulus, spectral.
        source_grid (GridSpec): Grid of the decomposed field.
        j_min (int): Lowest band of the bank used.
    """

    bands: Dict[int, QField]
    low_block: QField
    source_grid: GridSpec
    j_min: int

    def reconstruct(self) -> QField:
        data = self.low_block.data.copy()
        for j in sorted(self.bands):
            data += self.bands[j].data
        return QField(self.source_grid, SPECTRAL, data)


def decompose(f: QField, bank: FilterBank) -> BandDecomposition:
    """
    Splits f into its low block and every band Delta_j f.

    Args:
        f (QField): Field in either representation.
        bank (FilterBank): Filter bank for f's grid.

    Returns:
        BandDecomposition: Spectral band fields.
    """
    if f.grid != bank.grid:
        raise ConfigurationError(f"filter bank grid {bank.grid.sizes} does not match field grid {f.grid.sizes}")
    spec = f.to_spectral()
    bands = {j: QField(f.grid, SPECTRAL, spec.data * bank.multiplier(j)) for j in bank.band_indices}
    low = QField(f.grid, SPECTRAL, spec.data * bank.low_multiplier)
    return BandDecomposition(bands=bands, low_block=low, source_grid=f.grid, j_min=bank.j_min)
