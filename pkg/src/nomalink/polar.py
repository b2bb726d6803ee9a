"""Polar coding: construction, CRC, encoding, and CRC-aided list decoding.

Code construction uses Gaussian-approximation density evolution at a fixed
design Es/N0 (0 dB unless overridden) and is cached per block length.  The
outer code is CRC-16-CCITT (x^16 + x^12 + x^5 + 1, zero initial register, no
final xor); the CRC is counted inside the K info positions.  Frozen positions
normally carry zeros, but a per-user frozen-bit signature can replace them so
that the same (N, K) code yields user-separable codebooks: the decoder forces
the signature values while decoding and a wrong signature surfaces as CRC
failure.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import rng as _rng
from ._scl_kernel import scl_run

CRC_LENGTH = 16
_CRC_POLY = 0x1021  # x^16 + x^12 + x^5 + 1, register width 16

_MAX_BLOCK = 8192


# ---------------------------------------------------------------------------
# Gaussian-approximation density evolution

# The exp fit and the asymptotic form cross at m = 14.3943...; switching
# branches there keeps ln(phi) continuous and strictly decreasing, so the
# inverse below is single valued.
_PHI_SWITCH = 14.394352942168425
_LN_PHI_SWITCH = -0.4527 * _PHI_SWITCH ** 0.86 + 0.0218


def _ln_phi(m):
    """ln of phi(m) = 1 - E[tanh(w/2)], w ~ N(m, 2m), piecewise fit."""
    if m < _PHI_SWITCH:
        return -0.4527 * m ** 0.86 + 0.0218
    return 0.5 * (math.log(math.pi) - math.log(m)) - 0.25 * m + math.log1p(-10.0 / (7.0 * m))


def _phi_inv_ln(y):
    """Inverse of _ln_phi.  y is ln(phi); returns the mean m >= 0."""
    if y > _LN_PHI_SWITCH:
        return ((0.0218 - y) / 0.4527) ** (1.0 / 0.86)
    lo, hi = _PHI_SWITCH, max(40.0, -5.0 * y)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _ln_phi(mid) > y:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * hi:
            break
    return 0.5 * (lo + hi)


def _check_mean(m):
    # 1 - (1 - phi)^2 = phi * (2 - phi), evaluated in the log domain
    lp = _ln_phi(m)
    phi = math.exp(lp) if lp > -700.0 else 0.0
    return _phi_inv_ln(lp + math.log(2.0 - phi))


_reliability_cache = {}


def build_reliability_order(block_length, design_esn0_db=0.0):
    """Most-reliable-last index permutation for a given block length.

    Synthesized-channel LLR means evolve from m0 = 2 * 10^(EsN0/10), the
    per-bit LLR mean of unit-energy Gray QPSK at the design SNR.  Index 2i
    descends through the check (degraded) branch, index 2i+1 through the
    variable (upgraded) branch.
    """
    key = (int(block_length), float(design_esn0_db))
    cached = _reliability_cache.get(key)
    if cached is not None:
        return cached.copy()
    N = int(block_length)
    if N < 2 or N & (N - 1):
        raise ValueError(f"block length {N} is not a power of two >= 2")
    m0 = 2.0 * 10.0 ** (design_esn0_db / 10.0)
    means = np.array([m0])
    while means.shape[0] < N:
        nxt = np.empty(2 * means.shape[0])
        for idx in range(means.shape[0]):
            nxt[2 * idx] = _check_mean(means[idx])
            nxt[2 * idx + 1] = 2.0 * means[idx]
        means = nxt
    order = np.argsort(means, kind="stable").astype(np.int64)
    _reliability_cache[key] = order
    return order.copy()


# ---------------------------------------------------------------------------
# CRC-16-CCITT

_crc_matrix_cache = {}


def _crc_matrix(length):
    """GF(2) matrix mapping a length-bit payload to its 16 CRC bits.

    Row i is the remainder of x^(16 + length - 1 - i) modulo the generator,
    built by stepping a 17-bit register; payloads then reduce to one matmul.
    """
    mat = _crc_matrix_cache.get(length)
    if mat is not None:
        return mat
    rems = np.empty((length, CRC_LENGTH), np.uint8)
    r = 1 << CRC_LENGTH  # x^16
    full = (1 << CRC_LENGTH) | _CRC_POLY
    for k in range(length):
        if r >> CRC_LENGTH:
            r ^= full
        # store remainder of x^(16+k), MSB of the register first
        for b in range(CRC_LENGTH):
            rems[k, b] = (r >> (CRC_LENGTH - 1 - b)) & 1
        r <<= 1
    mat = rems[::-1].copy()  # row 0 = highest power = first payload bit
    _crc_matrix_cache[length] = mat
    return mat


def crc16(payload_bits):
    """CRC-16-CCITT of a bit vector (MSB-first), zero init, no final xor."""
    bits = np.asarray(payload_bits, np.uint8)
    if bits.ndim != 1 or bits.size == 0:
        raise ValueError("payload must be a non-empty bit vector")
    return (bits @ _crc_matrix(bits.size)) % 2


def crc16_attach(payload_bits):
    bits = np.asarray(payload_bits, np.uint8)
    return np.concatenate([bits, crc16(bits)])


def crc16_check(block_bits):
    block = np.asarray(block_bits, np.uint8)
    if block.size <= CRC_LENGTH:
        raise ValueError(f"block of {block.size} bits has no room for a {CRC_LENGTH}-bit CRC")
    return bool(np.array_equal(crc16(block[:-CRC_LENGTH]), block[-CRC_LENGTH:]))


# ---------------------------------------------------------------------------
# Code configuration

@dataclass(frozen=True)
class PolarCodeConfig:
    """Frozen-set description of one (N, K) polar code.

    info_length counts info+CRC bits.  crc_length may be zero for raw test
    codes (decoding then selects purely on path metric).
    """
    block_length: int
    info_length: int
    design_esn0_db: float
    crc_length: int
    reliability_order: np.ndarray
    frozen_positions: np.ndarray
    info_positions: np.ndarray
    frozen_mask: np.ndarray

    @property
    def num_frozen(self):
        return self.block_length - self.info_length

    @property
    def payload_length(self):
        return self.info_length - self.crc_length


def make_code_config(block_length, info_length, design_esn0_db=0.0, crc_length=CRC_LENGTH):
    N, K = int(block_length), int(info_length)
    if N < 2 or N > _MAX_BLOCK or N & (N - 1):
        raise ValueError(f"block length {N} must be a power of two in [2, {_MAX_BLOCK}]")
    if not 0 < K < N:
        raise ValueError(f"info length {K} out of range for N={N}")
    if crc_length not in (0, CRC_LENGTH):
        raise ValueError(f"crc length must be 0 or {CRC_LENGTH}")
    if crc_length and K <= crc_length:
        raise ValueError(f"info length {K} leaves no payload after a {crc_length}-bit CRC")
    order = build_reliability_order(N, design_esn0_db)
    frozen = np.sort(order[: N - K])
    info = np.sort(order[N - K:])
    mask = np.zeros(N, bool)
    mask[frozen] = True
    return PolarCodeConfig(
        block_length=N,
        info_length=K,
        design_esn0_db=float(design_esn0_db),
        crc_length=crc_length,
        reliability_order=order,
        frozen_positions=frozen,
        info_positions=info,
        frozen_mask=mask,
    )


# ---------------------------------------------------------------------------
# Frozen-bit signatures

@dataclass(frozen=True)
class FrozenSignature:
    """Per-user values for the frozen positions, aligned with their sorted order."""
    user_id: int
    values: np.ndarray


def make_signature(user_id, seed, cfg, mode="random"):
    """Draw a user's frozen-bit signature (or the all-zero conventional one)."""
    n = cfg.num_frozen
    if mode == "conventional":
        values = np.zeros(n, np.uint8)
    elif mode == "random":
        gen = _rng.stream(seed, _rng.SIGNATURE, user=user_id)
        values = gen.integers(0, 2, size=n).astype(np.uint8)
    else:
        raise ValueError(f"unknown signature mode {mode!r}")
    return FrozenSignature(user_id=int(user_id), values=values)


def _frozen_values(cfg, sig):
    vals = np.zeros(cfg.block_length, np.uint8)
    if sig is not None:
        sv = sig.values if isinstance(sig, FrozenSignature) else np.asarray(sig, np.uint8)
        if sv.shape[0] != cfg.num_frozen:
            raise ValueError(
                f"signature has {sv.shape[0]} values, code has {cfg.num_frozen} frozen positions")
        vals[cfg.frozen_positions] = sv
    return vals


# ---------------------------------------------------------------------------
# Encoding

def polar_transform(u_bits):
    """Multiply by the n-fold Kronecker power of [[1,0],[1,1]] over GF(2)."""
    x = np.asarray(u_bits, np.uint8).copy()
    N = x.shape[0]
    if N & (N - 1):
        raise ValueError(f"transform length {N} is not a power of two")
    h = 1
    while h < N:
        x = x.reshape(-1, 2 * h)
        x[:, :h] ^= x[:, h:]
        x = x.ravel()
        h *= 2
    return x


def polar_encode(payload_bits, cfg, sig=None):
    """Encode one payload block; the CRC is attached here when configured.

    Frozen positions carry the signature values (zeros when sig is None).
    """
    bits = np.asarray(payload_bits, np.uint8)
    if bits.shape[0] != cfg.payload_length:
        raise ValueError(
            f"expected {cfg.payload_length} payload bits, got {bits.shape[0]}"
        )
    if cfg.crc_length:
        bits = crc16_attach(bits)
    u = _frozen_values(cfg, sig)
    u[cfg.info_positions] = bits
    return polar_transform(u)


# ---------------------------------------------------------------------------
# Decoding

@dataclass
class DecodeResult:
    info: np.ndarray      # K decided info+CRC bits
    crc_ok: bool
    codeword: np.ndarray  # re-encoded decision, signature included


def scl_decode(llrs, cfg, sig=None, list_size=16):
    """CRC-aided successive-cancellation list decoding.

    llrs follow the ln(P0/P1) convention.  Among final paths sorted by path
    metric (ties to the lower path index), the first CRC-passing one wins; if
    none passes, the best-metric path is returned with crc_ok False.  The
    returned codeword is the re-encoded decision, which a canceling receiver
    can subtract directly.
    """
    llr = np.ascontiguousarray(np.asarray(llrs, np.float64))
    if llr.shape[0] != cfg.block_length:
        raise ValueError(f"expected {cfg.block_length} LLRs, got {llr.shape[0]}")
    if not np.all(np.isfinite(llr)):
        raise ValueError("channel LLRs must be finite")
    L = int(list_size)
    if L < 1 or L & (L - 1):
        raise ValueError(f"list size {L} must be a power of two >= 1")
    frozen_val = _frozen_values(cfg, sig)
    paths, metrics, nact = scl_run(
        llr, cfg.frozen_mask.astype(np.uint8), frozen_val, L)
    ranking = np.argsort(metrics[:nact], kind="stable")
    best = ranking[0]
    chosen, crc_ok = best, False
    if cfg.crc_length:
        for p in ranking:
            if crc16_check(paths[p, cfg.info_positions]):
                chosen, crc_ok = p, True
                break
    info = paths[chosen, cfg.info_positions].copy()
    return DecodeResult(info=info, crc_ok=crc_ok, codeword=polar_transform(paths[chosen]))
