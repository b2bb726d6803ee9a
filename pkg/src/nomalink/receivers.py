"""Multi-user detection: linear filters with CRC-gated SIC, and MPA for SCMA.

Receiver pairing follows the scheme family: spread sequences and the two
direct mappings go through MMSE-SIC, RDMA's cyclic repetitions through a
matched-filter MRC front end with SIC, and SCMA's sparse codebooks through
log-domain message passing.  Every detector consumes the received grid
(A, 256, 4), an effective per-user CSI array (U, A, 256) with power offsets
folded in, and the per-RE complex noise variance.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import polar
from .ofdm import NUM_SUBCARRIERS, NUM_SYMBOLS
from .qpsk import qpsk_map, qpsk_soft_demap
from .schemes import GROUP_SIZE, NUM_GROUPS, map_user

RECEIVER_FOR = {
    "musa": "mmse-sic",
    "pdma": "mmse-sic",
    "pcbma": "mmse-sic",
    "ofdm": "mmse-sic",
    "rdma": "mf-sic",
    "scma": "mpa",
}
RECEIVER_NAMES = ("mmse-sic", "mf-sic", "mpa")

_LLR_CLIP = 60.0


def receiver_for(scheme_name):
    try:
        return RECEIVER_FOR[scheme_name]
    except KeyError:
        raise ValueError(f"no receiver pairing for scheme {scheme_name!r}")


# ---------------------------------------------------------------------------
# linear front ends

def mmse_filters(sigs, noise_var):
    """Batched LMMSE filters for signature rows sigs (..., U, D).

    Returns (weights, gains, sinrs) with weights[..., u, :] = R^-1 s_u where
    R = sum_u s_u s_u^H + noise_var I.  gain = s_u^H R^-1 s_u lies in (0, 1);
    the filter output z = w^H y has conditional variance gain * (1 - gain)
    given the symbol, and SINR gain / (1 - gain).
    """
    s = np.asarray(sigs, np.complex128)
    if noise_var <= 0:
        raise ValueError("noise variance must be positive")
    d = s.shape[-1]
    cov = np.einsum("...ud,...ue->...de", s, s.conj())
    cov[..., np.arange(d), np.arange(d)] += noise_var
    cols = np.linalg.solve(cov, np.swapaxes(s, -1, -2))  # (..., D, U)
    gains = np.einsum("...du,...du->...u", np.swapaxes(s, -1, -2).conj(), cols).real
    gains = np.clip(gains, 1e-15, 1.0 - 1e-12)
    weights = np.swapaxes(cols, -1, -2)
    return weights, gains, gains / (1.0 - gains)


def mf_filters(sigs, noise_var):
    """Matched filters w = s / |s|^2 with cross-correlation noise terms.

    The SINR counts every other row of sigs as live interference; callers
    drop canceled users from sigs before asking again.
    """
    s = np.asarray(sigs, np.complex128)
    if noise_var <= 0:
        raise ValueError("noise variance must be positive")
    norms = np.maximum(np.sum(np.abs(s) ** 2, axis=-1), 1e-300)
    weights = s / norms[..., None]
    gram = np.einsum("...ud,...vd->...uv", s.conj(), s)
    cross = np.sum(np.abs(gram) ** 2, axis=-1) - norms**2
    var = noise_var / norms + cross / norms**2
    gains = np.ones_like(var)
    return weights, gains, 1.0 / var


# ---------------------------------------------------------------------------
# per-family symbol detection on the residual grid

def _spread_signatures(scheme, csi, users):
    # effective per-group signatures, antenna-major stacking (a * 4 + i)
    seq = scheme.sequences[users]  # (Ua, 4)
    h = csi[users].reshape(len(users), -1, NUM_GROUPS, GROUP_SIZE)
    eff = seq[:, None, None, :] * h  # (Ua, A, 64, 4)
    return eff.transpose(2, 0, 1, 3).reshape(NUM_GROUPS, len(users), -1)


def _group_observations(residual):
    a = residual.shape[0]
    blocks = residual.reshape(a, NUM_GROUPS, GROUP_SIZE, NUM_SYMBOLS)
    return blocks.transpose(1, 0, 2, 3).reshape(NUM_GROUPS, a * GROUP_SIZE, NUM_SYMBOLS)


def detect_symbols(residual, csi, scheme, users, noise_var, receiver):
    """Filter outputs for every user in users against the given residual.

    Returns (z, gain, var, mean_sinr), each (Ua, nsym) except mean_sinr
    (Ua,).  All listed users are treated as live interference.
    """
    if receiver == "mmse-sic" and not scheme.is_direct:
        sigs = _spread_signatures(scheme, csi, users)  # (64, Ua, 4A)
        w, g, snr = mmse_filters(sigs, noise_var)
        obs = _group_observations(residual)
        z = np.einsum("gud,gdt->gut", w.conj(), obs)  # (64, Ua, T)
        zs = z.transpose(1, 2, 0).reshape(len(users), -1)  # k = 64 t + g
        gs = np.broadcast_to(
            g.T[:, None, :], (len(users), NUM_SYMBOLS, NUM_GROUPS)
        ).reshape(len(users), -1)
        return zs, gs, gs * (1.0 - gs), snr.mean(axis=0)
    if receiver == "mmse-sic":
        sigs = csi[users].transpose(2, 0, 1)  # (256, Ua, A)
        w, g, snr = mmse_filters(sigs, noise_var)
        z = np.einsum("fua,fat->fut", w.conj(), residual.transpose(1, 0, 2))
        zs = z.transpose(1, 2, 0).reshape(len(users), -1)  # k = 256 t + f
        gs = np.broadcast_to(
            g.T[:, None, :], (len(users), NUM_SYMBOLS, NUM_SUBCARRIERS)
        ).reshape(len(users), -1)
        return zs, gs, gs * (1.0 - gs), snr.mean(axis=0)
    if receiver == "mf-sic":
        return _detect_rdma(residual, csi, scheme, users, noise_var)
    raise ValueError(f"unknown receiver {receiver!r}")


def _detect_rdma(residual, csi, scheme, users, noise_var):
    # MRC over the 4 cyclic repetitions; interference from other live rows
    # decorrelates across repetitions because their shifts differ.
    a, _, t_count = residual.shape
    amp2 = 0.25
    total = amp2 * np.sum(np.abs(csi[users]) ** 2, axis=0)  # (A, 256)
    n_u = len(users)
    zs = np.empty((n_u, NUM_SUBCARRIERS), np.complex128)
    var = np.empty((n_u, NUM_SUBCARRIERS))
    for j, u in enumerate(users):
        c = 0.5 * csi[u]  # (A, 256)
        interf = total - amp2 * np.abs(csi[u]) ** 2
        idx = (np.arange(NUM_SUBCARRIERS)[None, :]
               + int(scheme.shifts[u]) * np.arange(t_count)[:, None]) % NUM_SUBCARRIERS
        cg = c[:, idx]  # (A, T, 256)
        yg = residual[:, idx, np.arange(t_count)[:, None]]
        den = np.sum(np.abs(cg) ** 2, axis=(0, 1))
        zs[j] = np.einsum("atk,atk->k", cg.conj(), yg) / den
        var[j] = np.sum(np.abs(cg) ** 2 * (noise_var + interf[:, idx]), axis=(0, 1)) / den**2
    gains = np.ones_like(var)
    return zs, gains, var, np.mean(1.0 / var, axis=1)


def reconstruct(scheme, user, codeword_bits, csi):
    """Per-antenna grid contribution of a decided codeword through the CSI."""
    syms = qpsk_map(codeword_bits)
    if syms.size < scheme.symbols_per_user:
        syms = np.pad(syms, (0, scheme.symbols_per_user - syms.size))
    grid = map_user(scheme, user, syms)
    return csi[user][:, :, None] * grid[None, :, :]


# ---------------------------------------------------------------------------
# message passing for the SCMA codebooks

def _logsumexp(arr, axis):
    m = np.max(arr, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(arr - m), axis=axis))
    return out + np.squeeze(m, axis=axis)


def mpa_detect(rx_grid, csi, scheme, noise_var, active=None, max_iters=8,
               tol=1e-6, return_posteriors=False):
    """Log-domain sum-product detection over the sparse codebook graph.

    Returns bit LLRs (num_users, 512) in the ln(P0/P1) convention; rows of
    inactive users stay zero.  Iterations stop once every per-slot posterior
    moves less than tol between sweeps.
    """
    rx = np.asarray(rx_grid, np.complex128)
    if rx.ndim == 2:
        rx = rx[None]
    if scheme.codebooks is None:
        raise ValueError("mpa needs a codebook scheme")
    if noise_var <= 0:
        raise ValueError("noise variance must be positive")
    users = sorted(active) if active is not None else list(range(scheme.num_users))
    n_slots = NUM_GROUPS * NUM_SYMBOLS
    k = np.arange(n_slots)
    g_of = k % NUM_GROUPS
    t_of = k // NUM_GROUPS

    occupants = {
        r: [u for u in users if np.any(np.abs(scheme.codebooks[u, :, r]) > 0)]
        for r in range(GROUP_SIZE)
    }
    log_lik = {}
    for r, occ in occupants.items():
        if not occ:
            continue
        f = GROUP_SIZE * g_of + r
        y = rx[:, f, t_of]  # (A, S)
        acc = y.astype(np.complex128)
        for i, u in enumerate(occ):
            eff = scheme.codebooks[u][:, r][:, None, None] * csi[u][None, :, f]
            shape = [1] * len(occ) + list(eff.shape[1:])
            shape[i] = 4
            acc = acc - eff.reshape(shape)
        log_lik[r] = -np.sum(np.abs(acc) ** 2, axis=-2) / noise_var  # (4...,S)

    user_res = {u: [r for r in range(GROUP_SIZE) if u in occupants[r]] for u in users}
    if any(len(rs) != 2 for rs in user_res.values()):
        raise ValueError("each codebook column must occupy exactly two resources")
    v2f = {(u, r): np.full((4, n_slots), -math.log(4.0)) for u in users for r in user_res[u]}
    posteriors = None
    iters_run = 0
    for _ in range(max_iters):
        iters_run += 1
        f2v = {}
        for r, occ in occupants.items():
            if not occ:
                continue
            for i, u in enumerate(occ):
                msg = log_lik[r]
                for j, v in enumerate(occ):
                    if j == i:
                        continue
                    shape = [1] * len(occ) + [n_slots]
                    shape[j] = 4
                    msg = msg + v2f[(v, r)].reshape(shape)
                axes = tuple(j for j in range(len(occ)) if j != i)
                f2v[(r, u)] = _logsumexp(msg, axes) if axes else msg
        new_post = {}
        delta = 0.0
        for u in users:
            r0, r1 = user_res[u]
            v2f[(u, r1)] = f2v[(r0, u)] - _logsumexp(f2v[(r0, u)], 0)
            v2f[(u, r0)] = f2v[(r1, u)] - _logsumexp(f2v[(r1, u)], 0)
            p = f2v[(r0, u)] + f2v[(r1, u)]
            p = p - _logsumexp(p, 0)
            if posteriors is not None:
                delta = max(delta, np.max(np.abs(np.exp(p) - np.exp(posteriors[u]))))
            new_post[u] = p
        converged = posteriors is not None and delta < tol
        posteriors = new_post
        if converged:
            break

    llrs = np.zeros((scheme.num_users, 2 * n_slots))
    for u in users:
        p = posteriors[u]
        b0 = _logsumexp(p[[0, 1]], 0) - _logsumexp(p[[2, 3]], 0)
        b1 = _logsumexp(p[[0, 2]], 0) - _logsumexp(p[[1, 3]], 0)
        llrs[u, 0::2] = np.clip(b0, -_LLR_CLIP, _LLR_CLIP)
        llrs[u, 1::2] = np.clip(b1, -_LLR_CLIP, _LLR_CLIP)
    if return_posteriors:
        return llrs, {u: np.exp(posteriors[u]) for u in users}, iters_run
    return llrs


# ---------------------------------------------------------------------------
# SIC driver

@dataclass
class SicResult:
    payloads: np.ndarray  # (U, payload_length) decided bits, best effort
    crc_ok: np.ndarray    # (U,) bool
    order: list           # cancellation order (successfully decoded users)
    rounds: int


def _check_inputs(rx, csi, scheme, cfg):
    if rx.ndim != 3 or rx.shape[1:] != (NUM_SUBCARRIERS, NUM_SYMBOLS):
        raise ValueError(f"received grid has shape {rx.shape}")
    if csi.shape != (scheme.num_users, rx.shape[0], NUM_SUBCARRIERS):
        raise ValueError(f"csi shape {csi.shape} does not match grid/users")
    nsym = cfg.block_length // 2
    if nsym > scheme.symbols_per_user:
        raise ValueError(
            f"code needs {nsym} symbols, scheme carries {scheme.symbols_per_user}")
    return nsym


def sic_detect(rx_grid, csi, scheme, noise_var, cfg, signatures=None,
               receiver=None, outer_iters=2, list_size=16, mpa_iters=8):
    """CRC-gated successive interference cancellation over the full frame.

    Greedy order: highest mean SINR among not-yet-attempted users, with
    filters and SINRs recomputed after every cancellation.  Failed users
    stay in the interference model and are retried in a second outer round
    whenever the first one made progress.
    """
    rx = np.asarray(rx_grid, np.complex128)
    if rx.ndim == 2:
        rx = rx[None]
    csi = np.asarray(csi, np.complex128)
    nsym = _check_inputs(rx, csi, scheme, cfg)
    if receiver is None:
        receiver = receiver_for(scheme.name)
    num_users = scheme.num_users
    sigs = list(signatures) if signatures is not None else [None] * num_users
    if len(sigs) != num_users:
        raise ValueError("one signature entry per user required")

    payloads = np.zeros((num_users, cfg.payload_length), np.uint8)
    crc_ok = np.zeros(num_users, bool)
    order = []
    residual = rx.copy()
    active = list(range(num_users))
    rounds = 0
    for _ in range(max(1, outer_iters)):
        rounds += 1
        progress = False
        if receiver == "mpa":
            llrs = mpa_detect(residual, csi, scheme, noise_var, active=active,
                              max_iters=mpa_iters)
            decoded = []
            for u in list(active):
                res = polar.scl_decode(llrs[u], cfg, sigs[u], list_size)
                payloads[u] = res.info[: cfg.payload_length]
                if res.crc_ok:
                    decoded.append((u, res.codeword))
            for u, cw in decoded:
                crc_ok[u] = True
                residual = residual - reconstruct(scheme, u, cw, csi)
                active.remove(u)
                order.append(u)
                progress = True
        else:
            pending = set(active)
            while pending:
                z, g, v, mean_sinr = detect_symbols(
                    residual, csi, scheme, active, noise_var, receiver)
                ranked = sorted(pending,
                                key=lambda u: -mean_sinr[active.index(u)])
                cancelled = False
                for u in ranked:
                    j = active.index(u)
                    llr = qpsk_soft_demap(z[j, :nsym], g[j, :nsym], v[j, :nsym])
                    llr = np.clip(llr, -_LLR_CLIP * 10, _LLR_CLIP * 10)
                    res = polar.scl_decode(llr, cfg, sigs[u], list_size)
                    payloads[u] = res.info[: cfg.payload_length]
                    pending.discard(u)
                    if res.crc_ok:
                        crc_ok[u] = True
                        residual = residual - reconstruct(scheme, u, res.codeword, csi)
                        active.remove(u)
                        order.append(u)
                        progress = cancelled = True
                        break
                if not cancelled:
                    break
        if not active or not progress:
            break
    return SicResult(payloads=payloads, crc_ok=crc_ok, order=order, rounds=rounds)
