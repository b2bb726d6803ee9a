"""Gray-mapped QPSK with max-log soft demapping.

Bit pair (b0, b1) maps to ((1-2*b0) + 1j*(1-2*b1)) / sqrt(2): b0 on the real
axis, b1 on the imaginary axis, unit symbol energy.  The demapper takes the
equalized observation together with its effective gain and residual variance,
so one call covers matched-filter, MRC, and MMSE outputs alike.
"""

import numpy as np

_SCALE = 1.0 / np.sqrt(2.0)


def qpsk_map(bits):
    """Map an even-length bit vector to complex symbols, two bits per symbol."""
    b = np.asarray(bits, np.uint8)
    if b.ndim != 1 or b.size % 2:
        raise ValueError(f"bit count {b.size} is not even")
    if b.size and b.max() > 1:
        raise ValueError("bits must be 0/1")
    re = 1.0 - 2.0 * b[0::2]
    im = 1.0 - 2.0 * b[1::2]
    return (re + 1j * im) * _SCALE


def qpsk_soft_demap(obs, gain, noise_var):
    """Max-log LLRs ln(P0/P1), two per symbol, interleaved (b0, b1).

    obs is the equalized observation z = gain * symbol + noise with complex
    noise variance noise_var (gain and noise_var scalar or per-symbol).
    """
    z = np.asarray(obs, complex)
    g = np.asarray(gain, float)
    v = np.asarray(noise_var, float)
    if np.any(v <= 0) or not (np.all(np.isfinite(g)) and np.all(np.isfinite(v))):
        raise ValueError("gain and noise variance must be finite, variance positive")
    scale = 2.0 * np.sqrt(2.0) * g / v
    llr = np.empty(2 * z.size, float)
    llr[0::2] = scale * z.real
    llr[1::2] = scale * z.imag
    return llr


def qpsk_hard_bits(symbols):
    """Minimum-distance decisions back to bits (test and bypass-mode helper)."""
    z = np.asarray(symbols, complex)
    bits = np.empty(2 * z.size, np.uint8)
    bits[0::2] = (z.real < 0).astype(np.uint8)
    bits[1::2] = (z.imag < 0).astype(np.uint8)
    return bits
