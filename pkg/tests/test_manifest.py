# tests/test_manifest.py

import math

import numpy as np
import pytest
from src.config import ForcingSpec, SimConfig
from src.errors import ConfigurationError
from src.field import GridSpec, forward_transform, max_divergence
from src.littlewood_paley import build_filter_bank
from src.manifest import RunManifest
from src.presets import PRESETS, broadband_field, get_preset, plateau_mask, with_forcing_amplitude


def test_manifest_round_trip(tmp_path):
    manifest = RunManifest(config_digest="ab" * 32)
    manifest.add_file("config.json")
    manifest.add_file("config.json")
    manifest.add_file("final.qfld")
    manifest.finish("blow_up", "energy exceeded")

    manifest.save_to_file(str(tmp_path))
    loaded = RunManifest.load_from_file(str(tmp_path))

    # Assertions
    assert loaded.to_dict() == manifest.to_dict(), "Manifest should survive the round trip."
    assert loaded.files == ["config.json", "final.qfld"], "Files should be listed once, in order."
    assert loaded.censored and loaded.finished_at is not None, "Blow-up should mark the run censored."


def test_manifest_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        RunManifest.load_from_file(str(tmp_path))
    with pytest.raises(ValueError):
        RunManifest(config_digest="00").finish("aborted")


def test_presets_build():
    for name, preset in PRESETS.items():
        cfg, _ = preset.build_config()
        q0 = preset.build_field(cfg.grid)

        # Assertions
        assert q0.grid == cfg.grid, f"{name}: field should live on the preset grid."
        assert max_divergence(forward_transform(q0)) <= 1e-10, f"{name}: field should be divergence-free."
        assert q0.energy() > 0, f"{name}: field should be nonzero."

    with pytest.raises(ConfigurationError):
        get_preset("kelvin-helmholtz")


def test_broadband_field_is_seeded_and_banded():
    grid = GridSpec(dim=2, sizes=(64, 64), domain_length=(2 * math.pi, 2 * math.pi))
    bank = build_filter_bank(grid)
    a = broadband_field(grid, bands=[1, 3], seed=9, amplitude=0.5)
    b = broadband_field(grid, bands=[1, 3], seed=9, amplitude=0.5)

    # Assertions
    assert np.array_equal(a.data, b.data), "Same seed should give the same field."
    assert a.energy() == pytest.approx(0.5 * 0.25 * grid.volume, rel=1e-12), "RMS velocity should match amplitude."
    spectrum = np.sum(np.abs(forward_transform(a).data) ** 2, axis=0)
    support = plateau_mask(grid, 1) | plateau_mask(grid, 3)
    assert np.all(spectrum[~support] <= 1e-20), "Energy should sit on the chosen plateaus."
    assert np.all(bank.multiplier(2)[support] == 0.0), "Plateaus should avoid neighbouring bands."


def test_forcing_amplitude_override():
    grid = GridSpec(dim=3, sizes=(16, 16, 16))
    cfg = SimConfig(grid=grid, nu=0.1, t_end=0.1, dt=0.01)

    forced = with_forcing_amplitude(cfg, 2.0)
    decaying = SimConfig(grid=grid, nu=0.1, t_end=0.1, dt=0.01,
                         forcing=ForcingSpec(kind="time_decaying_low_mode", amplitude=1.0, mode=(0, 1, 0), decay_rate=1.0))

    # Assertions
    assert forced.forcing.kind == "steady_low_mode" and forced.forcing.mode == (1, 0, 0), "Unforced run should gain forcing."
    assert forced.forcing.amplitude == 2.0, "Amplitude should be overridden."
    assert with_forcing_amplitude(decaying, 3.0).forcing.kind == "time_decaying_low_mode", "Kind should be kept."
