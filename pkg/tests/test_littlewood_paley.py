# tests/test_littlewood_paley.py

import math

import numpy as np
import pytest
from src.errors import ConfigurationError, RangeError
from src.field import PHYSICAL, SPECTRAL, GridSpec, QField, forward_transform, gradient, l2_norm_sq
from src.littlewood_paley import (
    build_filter_bank,
    chi,
    decompose,
    phi,
    project_band,
    project_low,
    smooth_step,
)


def test_profiles():
    r = np.linspace(0.0, 4.0, 4001)

    # Assertions
    assert np.all(chi(r[r <= 0.75]) == 1.0), "chi should be 1 on the inner ball."
    assert np.all(chi(r[r >= 4.0 / 3.0]) == 0.0), "chi should vanish beyond 4/3."
    assert np.all(np.diff(chi(r)) <= 0), "chi should be non-increasing."
    assert np.all(phi(r[(r < 0.75) | (r > 8.0 / 3.0)]) == 0.0), "phi should be supported in the annulus."
    assert np.all(phi(r) >= 0.0), "phi should be nonnegative."
    assert smooth_step(np.array([0.5]))[0] == pytest.approx(0.5), "Smooth step should be symmetric."


@pytest.mark.parametrize("sizes", [(64, 64), (32, 32, 32)])
def test_partition_of_unity(sizes):
    grid = GridSpec(dim=len(sizes), sizes=sizes)
    bank = build_filter_bank(grid)

    # Assertions
    assert bank.covered_mask().any(), "Some wavenumbers should be covered."
    assert bank.partition_deviation() <= 1e-12, "Band multipliers should sum to 1 on covered wavenumbers."
    total = bank.low_multiplier + bank.partition_sum()
    assert np.max(np.abs(total - 1.0)) <= 1e-12, "Low block plus bands should sum to 1 everywhere."


def test_bank_range_and_errors():
    grid = GridSpec(dim=2, sizes=(64, 64), domain_length=(2 * math.pi, 2 * math.pi))
    bank = build_filter_bank(grid)

    # Assertions
    assert bank.j_min == -1, "Lowest band should sit below |xi| = 1."
    assert bank.j_max == 5, "Highest band should cover the grid corner."
    with pytest.raises(RangeError):
        bank.multiplier(bank.j_max + 1)
    with pytest.raises(RangeError):
        project_band(QField.zeros(grid), bank, bank.j_min - 1)

    # A j_min override larger than j_max leaves too few bands
    with pytest.raises(ConfigurationError):
        build_filter_bank(grid, j_min=bank.j_max)


def test_zero_field_decomposes_to_zeros():
    grid = GridSpec(dim=2, sizes=(16, 16))
    decomp = decompose(QField.zeros(grid), build_filter_bank(grid))

    # Assertions
    assert all(np.all(band.data == 0) for band in decomp.bands.values()), "Every band should be zero."
    assert np.all(decomp.low_block.data == 0), "Low block should be zero."


@pytest.mark.parametrize("sizes", [(32, 32), (16, 16, 16), (64, 64), (32, 32, 32)])
def test_reconstruction(sizes):
    grid = GridSpec(dim=len(sizes), sizes=sizes)
    bank = build_filter_bank(grid)
    rng = np.random.default_rng(11)

    for _ in range(50):
        f = QField(grid, PHYSICAL, rng.standard_normal((4,) + sizes))
        decomp = decompose(f, bank)

        # Relative L2 reconstruction error
        f_hat = forward_transform(f)
        error = l2_norm_sq(decomp.reconstruct() - f_hat) / l2_norm_sq(f_hat)
        assert math.sqrt(error) <= 1e-10, "Bands should reconstruct the field."


def test_pure_mode_concentration():
    grid = GridSpec(dim=2, sizes=(64, 64), domain_length=(2 * math.pi, 2 * math.pi))
    bank = build_filter_bank(grid)
    x, _ = grid.coordinates()

    # |k| = 6 lies on the plateau of band 2
    f = QField.from_components(grid, [np.cos(6 * x), 0.0, 0.0, 0.0])
    decomp = decompose(f, bank)
    energies = {j: l2_norm_sq(band) for j, band in decomp.bands.items()}

    # Assertions
    total = sum(energies.values()) + l2_norm_sq(decomp.low_block)
    assert energies[2] >= 0.99 * total, "Band 2 should hold the mode's energy."
    band = project_band(f, bank, 2)
    assert band.repr == PHYSICAL, "Projection should keep the input representation."
    assert np.max(np.abs(band.data - f.data)) < 1e-12, "Plateau mode should pass band 2 unchanged."


def test_low_block_and_projection_representation():
    grid = GridSpec(dim=2, sizes=(32, 32))
    bank = build_filter_bank(grid)
    constant = QField.from_components(grid, [1.0, 2.0, 0.0, 0.0])

    low = project_low(forward_transform(constant), bank)

    # Assertions
    assert low.repr == SPECTRAL, "Spectral input should give a spectral projection."
    assert np.max(np.abs(low.to_physical().data - constant.data)) < 1e-13, "Constants should live in the low block."
    for j in bank.band_indices:
        assert np.max(np.abs(project_band(constant, bank, j).data)) < 1e-13, "Constants should have no band content."


def test_frame_bounds_bracket_band_energy():
    grid = GridSpec(dim=2, sizes=(32, 32))
    bank = build_filter_bank(grid)
    f = QField(grid, PHYSICAL, np.random.default_rng(2).standard_normal((4, 32, 32)))

    decomp = decompose(f, bank)
    c, C = bank.frame_bounds()
    banded = l2_norm_sq(decomp.low_block) + sum(l2_norm_sq(b) for b in decomp.bands.values())

    # Assertions
    assert 0.0 < c <= C <= 1.0 + 1e-12, "Frame constants should lie in (0, 1]."
    assert c * l2_norm_sq(f) <= banded * (1 + 1e-12), "Lower frame bound should hold."
    assert banded <= C * l2_norm_sq(f) * (1 + 1e-12), "Upper frame bound should hold."


@pytest.mark.parametrize("sizes", [(32, 32), (16, 16, 16)])
def test_gradient_commutes_with_band_projection(sizes):
    grid = GridSpec(dim=len(sizes), sizes=sizes, domain_length=(2 * math.pi,) * len(sizes))
    bank = build_filter_bank(grid)
    rng = np.random.default_rng(21)

    for _ in range(5):
        f_hat = forward_transform(QField(grid, PHYSICAL, rng.standard_normal((4,) + sizes)))
        for j in bank.band_indices:
            # Gradient of the band against the band of each derivative
            lhs = gradient(project_band(f_hat, bank, j))
            rhs = [project_band(d, bank, j) for d in gradient(f_hat)]
            for a, b in zip(lhs, rhs):
                assert np.max(np.abs(a.data - b.data)) <= 1e-12, f"Band {j}: gradient should commute with Delta_j."


def test_double_projection_applies_squared_multiplier():
    grid = GridSpec(dim=2, sizes=(32, 32))
    bank = build_filter_bank(grid)
    spec = forward_transform(QField(grid, PHYSICAL, np.random.default_rng(13).standard_normal((4, 32, 32))))

    for j in bank.band_indices:
        twice = project_band(project_band(spec, bank, j), bank, j)
        once = project_band(spec, bank, j)

        # Assertions
        expected = spec.data * bank.multiplier(j) ** 2
        assert np.max(np.abs(twice.data - expected)) <= 1e-15, f"Band {j}: Delta_j twice should apply phi^2."
        assert np.max(np.abs(once.data - spec.data * bank.multiplier(j))) <= 1e-15, f"Band {j}: once applies phi."

    # The transition zone makes Delta_j a non-projection
    j = bank.j_min + 1
    gap = np.max(np.abs(project_band(project_band(spec, bank, j), bank, j).data - project_band(spec, bank, j).data))
    assert gap > 1e-6, "Delta_j applied twice should differ from Delta_j off the plateau."
