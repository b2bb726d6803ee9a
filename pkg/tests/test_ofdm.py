"""OFDM modulation and framing checks."""
import numpy as np
import pytest

from nomalink import ofdm


def random_grid(rng, nsym=4):
    return (
        rng.standard_normal((256, nsym)) + 1j * rng.standard_normal((256, nsym))
    ) / np.sqrt(2.0)


def test_numerology():
    assert ofdm.FRAME_LEN == 2560
    assert ofdm.SYMBOL_LEN == 640
    assert np.isclose(ofdm.SAMPLE_RATE_HZ, 512 / 60e-6)
    bins = ofdm.subcarrier_bins()
    assert bins.shape == (256,)
    assert 0 not in bins  # dc stays empty
    assert bins.min() == -128 and bins.max() == 128
    assert len(set(bins.tolist())) == 256


def test_roundtrip_identity():
    rng = np.random.default_rng(51)
    grid = random_grid(rng)
    out = ofdm.time_to_grid(ofdm.grid_to_time(grid))
    assert out.shape == grid.shape
    assert np.allclose(out, grid, atol=1e-12)


def test_unitary_energy():
    rng = np.random.default_rng(52)
    grid = random_grid(rng)
    x = ofdm.grid_to_time(grid)
    assert x.shape == (2560,)
    useful = x.reshape(4, 640)[:, 128:]
    assert np.isclose(np.sum(np.abs(useful) ** 2), np.sum(np.abs(grid) ** 2))


def test_cp_is_cyclic():
    rng = np.random.default_rng(53)
    x = ofdm.grid_to_time(random_grid(rng, 1))
    assert np.allclose(x[:128], x[512:640])


def test_delay_within_cp_is_phase_ramp():
    rng = np.random.default_rng(54)
    grid = random_grid(rng)
    x = ofdm.grid_to_time(grid)
    d = 37
    delayed = np.concatenate([np.zeros(d, np.complex128), x[:-d]])
    out = ofdm.time_to_grid(delayed)
    ramp = np.exp(-2j * np.pi * ofdm.subcarrier_bins() * d / 512.0)
    assert np.allclose(out, grid * ramp[:, None], atol=1e-10)


def test_single_tone_constant_modulus():
    grid = np.zeros((256, 1), np.complex128)
    grid[7, 0] = 1.0
    x = ofdm.grid_to_time(grid)
    useful = x[128:]
    assert np.allclose(np.abs(useful), 1.0 / np.sqrt(512.0))


def test_zero_dc_component():
    rng = np.random.default_rng(55)
    x = ofdm.grid_to_time(random_grid(rng))
    for t in range(4):
        useful = x[t * 640 + 128 : (t + 1) * 640]
        assert abs(useful.sum()) < 1e-9


def test_extra_symbols_roundtrip():
    # pilots prepend a fifth symbol in some scenarios
    rng = np.random.default_rng(56)
    grid = random_grid(rng, 5)
    assert ofdm.grid_to_time(grid).shape == (3200,)
    assert np.allclose(ofdm.time_to_grid(ofdm.grid_to_time(grid)), grid)


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        ofdm.grid_to_time(np.zeros((128, 4)))
    with pytest.raises(ValueError):
        ofdm.time_to_grid(np.zeros(1000, np.complex128))
