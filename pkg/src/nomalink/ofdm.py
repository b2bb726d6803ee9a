"""OFDM framing: 256 used subcarriers around a null DC, 4 symbols per frame.

The resource grid is indexed [subcarrier, symbol].  Row r maps to signed FFT
bin r - 128 for r < 128 and r - 127 otherwise, so bins -128..-1 and +1..+128
are occupied and bin 0 stays empty.  Transforms are unitary (scaled by
sqrt(FFT_SIZE)), which keeps grid energy equal to useful-sample energy.
"""
import numpy as np

NUM_SUBCARRIERS = 256
NUM_SYMBOLS = 4
FFT_SIZE = 512
CP_LEN = 128
SYMBOL_LEN = FFT_SIZE + CP_LEN
FRAME_LEN = NUM_SYMBOLS * SYMBOL_LEN
SYMBOL_DURATION_S = 60e-6  # useful part, sets 1/60us subcarrier spacing
SAMPLE_RATE_HZ = FFT_SIZE / SYMBOL_DURATION_S


def subcarrier_bins():
    """Signed FFT bin for each grid row."""
    r = np.arange(NUM_SUBCARRIERS)
    return np.where(r < 128, r - 128, r - 127)


def subcarrier_freqs_hz():
    return subcarrier_bins() / SYMBOL_DURATION_S


def grid_to_time(grid):
    """Modulate a (256, nsym) grid into nsym cyclic-prefixed symbols."""
    grid = np.asarray(grid, np.complex128)
    if grid.ndim != 2 or grid.shape[0] != NUM_SUBCARRIERS:
        raise ValueError(f"grid must be ({NUM_SUBCARRIERS}, nsym), got {grid.shape}")
    spec = np.zeros((FFT_SIZE, grid.shape[1]), np.complex128)
    spec[subcarrier_bins() % FFT_SIZE, :] = grid
    x = np.fft.ifft(spec, axis=0) * np.sqrt(FFT_SIZE)
    with_cp = np.concatenate([x[-CP_LEN:, :], x], axis=0)
    return with_cp.T.reshape(-1)


def time_to_grid(samples):
    """Strip prefixes and demodulate; accepts any whole number of symbols."""
    samples = np.asarray(samples, np.complex128)
    if samples.ndim != 1 or samples.shape[0] % SYMBOL_LEN:
        raise ValueError(f"sample count {samples.shape} is not a whole number of symbols")
    nsym = samples.shape[0] // SYMBOL_LEN
    blocks = samples.reshape(nsym, SYMBOL_LEN)[:, CP_LEN:]
    spec = np.fft.fft(blocks, axis=1) / np.sqrt(FFT_SIZE)
    return spec[:, subcarrier_bins() % FFT_SIZE].T
