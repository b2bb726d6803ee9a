"""Channel scenarios: AWGN power spread, AWGN with CFO, TDL-A 30 ns, COST207 BU.

Fading is quasi-static per frame: tap gains are redrawn every trial and held
over the 4 (or 5, with a pilot) OFDM symbols.  All taps sit well inside the
15 us cyclic prefix, so non-CFO scenarios apply the channel as a per-bin
multiplication of the exact tap DFT; only CFO runs the time-domain path.
"""
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import ofdm
from . import rng as _rng

CHANNEL_NAMES = ("awgn", "awgn_cfo", "tdla", "bu")
POWER_MODES = ("none", "interval_2dB", "wide_range")

CARRIER_HZ = 2000e6
CFO_PPM = 0.1
WIDE_RANGE_DB = (-7.0, 17.0)


@dataclass(frozen=True)
class PowerDelayProfile:
    name: str
    delays_s: np.ndarray  # ascending
    powers: np.ndarray    # linear, unit total

    @property
    def rms_delay_spread_s(self):
        m1 = np.sum(self.powers * self.delays_s)
        m2 = np.sum(self.powers * self.delays_s ** 2)
        return math.sqrt(m2 - m1 * m1)


def load_profile(path, name=None):
    """Read "delay_ns power_dB" rows; powers are normalized to unit total."""
    delays, powers = [], []
    with open(path) as f:
        for ln, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{ln}: expected 'delay_ns power_dB'")
            delays.append(float(parts[0]) * 1e-9)
            powers.append(10.0 ** (float(parts[1]) / 10.0))
    if not delays:
        raise ValueError(f"{path}: empty profile")
    delays = np.array(delays)
    powers = np.array(powers)
    if np.any(delays < 0) or np.any(np.diff(np.sort(delays)) < 0):
        raise ValueError(f"{path}: delays must be non-negative")
    order = np.argsort(delays, kind="stable")
    return PowerDelayProfile(
        name or str(path), delays[order], powers[order] / powers.sum()
    )


def _load_packaged_profile(fname, name):
    with resources.as_file(resources.files(__package__).joinpath("data", fname)) as p:
        return load_profile(p, name)


def tdla_profile(rms_target_s=30e-9):
    """TDL-A rescaled so the profile RMS delay spread is exactly the target."""
    if rms_target_s <= 0:
        raise ValueError("rms target must be positive")
    prof = _load_packaged_profile("tdla.txt", "tdla")
    scale = rms_target_s / prof.rms_delay_spread_s
    return PowerDelayProfile("tdla", prof.delays_s * scale, prof.powers)


def bu_profile():
    return _load_packaged_profile("cost207_bu.txt", "bu")


def profile_for(channel):
    if channel in ("awgn", "awgn_cfo"):
        return PowerDelayProfile(channel, np.zeros(1), np.ones(1))
    if channel == "tdla":
        return tdla_profile()
    if channel == "bu":
        return bu_profile()
    raise ValueError(f"unknown channel {channel!r}; valid: {', '.join(CHANNEL_NAMES)}")


# ---------------------------------------------------------------------------
# per-trial draws


def draw_user_powers(num_users, mode, rng, interval_width_db=2.0):
    """Per-user power draws in dB.

    interval_2dB: offsets around the mean SNR, uniform on +-width/2.
    wide_range: absolute per-user SNR values, uniform on [-7, +17] dB;
    the caller subtracts its mean SNR to get offsets.
    """
    if num_users < 1:
        raise ValueError("need at least one user")
    if mode == "none":
        return np.zeros(num_users)
    if mode == "interval_2dB":
        half = interval_width_db / 2.0
        return rng.uniform(-half, half, num_users)
    if mode == "wide_range":
        return rng.uniform(WIDE_RANGE_DB[0], WIDE_RANGE_DB[1], num_users)
    raise ValueError(f"unknown power mode {mode!r}; valid: {', '.join(POWER_MODES)}")


def draw_cfo(rng, num_users=1, carrier_hz=CARRIER_HZ, ppm=CFO_PPM):
    bound = carrier_hz * ppm * 1e-6
    return rng.uniform(-bound, bound, num_users)


@dataclass(frozen=True)
class ChannelRealization:
    channel: str
    tap_delays_s: np.ndarray      # (L,)
    tap_gains: np.ndarray         # (U, A, L) complex
    freq_responses: np.ndarray    # (U, A, 256) at the used bins
    power_offsets_db: np.ndarray  # (U,)
    cfo_hz: np.ndarray            # (U,)

    @property
    def num_users(self):
        return self.tap_gains.shape[0]

    @property
    def num_antennas(self):
        return self.tap_gains.shape[1]

    @property
    def amplitudes(self):
        return 10.0 ** (self.power_offsets_db / 20.0)


def freq_response(tap_gains, tap_delays_s):
    """Tap DFT at the used-bin frequencies; tap_gains (..., L)."""
    f = ofdm.subcarrier_freqs_hz()
    steer = np.exp(-2j * np.pi * f[:, None] * tap_delays_s[None, :])  # (256, L)
    return np.asarray(tap_gains) @ steer.T


def draw_realization(
    channel,
    num_users,
    num_antennas,
    master_seed,
    trial,
    power_mode=None,
    mean_esn0_db=0.0,
    interval_width_db=2.0,
):
    """Quasi-static per-frame realization, reproducibly keyed per stream.

    Independent streams per (trial, user, antenna) keep results identical
    under any worker split.  Default power modes follow the scenarios:
    AWGN family uses the 2 dB interval, fading channels rely on the fading
    itself.  In wide_range mode the draws are absolute per-user SNRs, so
    the mean SNR is subtracted here.
    """
    if channel not in CHANNEL_NAMES:
        raise ValueError(f"unknown channel {channel!r}; valid: {', '.join(CHANNEL_NAMES)}")
    if power_mode is None:
        power_mode = "interval_2dB" if channel.startswith("awgn") else "none"
    prof = profile_for(channel)
    L = prof.delays_s.shape[0]
    gains = np.zeros((num_users, num_antennas, L), np.complex128)
    fading = channel in ("tdla", "bu")
    for u in range(num_users):
        for a in range(num_antennas):
            if fading:
                g = _rng.stream(master_seed, _rng.TAPS, trial=trial, user=u, antenna=a)
                gains[u, a] = (
                    g.standard_normal(L) + 1j * g.standard_normal(L)
                ) * np.sqrt(prof.powers / 2.0)
            else:
                gains[u, a, 0] = 1.0

    offsets = draw_user_powers(
        num_users,
        power_mode,
        _rng.stream(master_seed, _rng.POWER, trial=trial),
        interval_width_db,
    )
    if power_mode == "wide_range":
        offsets = offsets - mean_esn0_db

    if channel == "awgn_cfo":
        cfo = draw_cfo(_rng.stream(master_seed, _rng.CFO, trial=trial), num_users)
    else:
        cfo = np.zeros(num_users)

    return ChannelRealization(
        channel=channel,
        tap_delays_s=prof.delays_s,
        tap_gains=gains,
        freq_responses=freq_response(gains, prof.delays_s),
        power_offsets_db=offsets,
        cfo_hz=cfo,
    )


def genie_csi(realization):
    """Exact per-user frequency responses, power offsets folded in."""
    return realization.amplitudes[:, None, None] * realization.freq_responses


# ---------------------------------------------------------------------------
# application


def apply_cfo(signal, cfo_hz, sample_rate=ofdm.SAMPLE_RATE_HZ):
    if not np.isfinite(cfo_hz):
        raise ValueError("cfo must be finite")
    if cfo_hz == 0.0:
        return np.asarray(signal, np.complex128)
    n = np.arange(len(signal))
    return np.asarray(signal) * np.exp(2j * np.pi * cfo_hz * n / sample_rate)


def apply_channel(user_grids, realization, noise_var, noise_rngs):
    """Superpose users through their channels; returns (A, 256, T) + noise.

    noise_rngs: one Generator per receive antenna.  The frequency-domain
    per-bin product is exact for all shipped profiles (delays inside the
    CP); any nonzero CFO switches to the time-domain path where the
    rotation happens between channel and demodulation.
    """
    grids = [np.asarray(g, np.complex128) for g in user_grids]
    U, A = realization.num_users, realization.num_antennas
    if len(grids) != U:
        raise ValueError(f"{len(grids)} grids for {U} users")
    T = grids[0].shape[1]
    if any(g.shape != (ofdm.NUM_SUBCARRIERS, T) for g in grids):
        raise ValueError("grid dimensions differ")
    if len(noise_rngs) != A:
        raise ValueError("one noise stream per antenna required")
    amps = realization.amplitudes
    use_time_path = np.any(realization.cfo_hz != 0.0)
    out = np.zeros((A, ofdm.NUM_SUBCARRIERS, T), np.complex128)
    for a in range(A):
        if use_time_path:
            total = np.zeros(T * ofdm.SYMBOL_LEN, np.complex128)
            for u in range(U):
                faded = amps[u] * realization.freq_responses[u, a][:, None] * grids[u]
                total += apply_cfo(ofdm.grid_to_time(faded), realization.cfo_hz[u])
            out[a] = ofdm.time_to_grid(total)
        else:
            for u in range(U):
                out[a] += amps[u] * realization.freq_responses[u, a][:, None] * grids[u]
        if noise_var > 0:
            g = noise_rngs[a]
            out[a] += np.sqrt(noise_var / 2.0) * (
                g.standard_normal(out[a].shape) + 1j * g.standard_normal(out[a].shape)
            )
    return out


# ---------------------------------------------------------------------------
# pilot-based estimation (CFO scenario)


@dataclass(frozen=True)
class PilotLayout:
    num_users: int

    @property
    def stride(self):
        return ofdm.NUM_SUBCARRIERS // self.num_users

    def bins(self, user):
        if not 0 <= user < self.num_users:
            raise ValueError(f"user {user} out of range")
        if self.num_users > self.stride:
            raise ValueError(
                f"{self.num_users} users exceed the comb capacity "
                f"(stride {self.stride})"
            )
        return np.arange(user, ofdm.NUM_SUBCARRIERS, self.stride)


def pilot_grid(layout, user):
    """The user's unit-amplitude pilot column (one OFDM symbol)."""
    col = np.zeros(ofdm.NUM_SUBCARRIERS, np.complex128)
    col[layout.bins(user)] = 1.0
    return col


def freq_correlation(profile, rows, cols):
    """Channel frequency-correlation prior R[i,j] between two bin sets."""
    f = ofdm.subcarrier_freqs_hz()
    df = f[rows][:, None] - f[cols][None, :]
    return np.exp(-2j * np.pi * df[..., None] * profile.delays_s) @ profile.powers


def mmse_channel_estimate(pilot_rx, layout, user, profile, noise_var):
    """Wiener-smoothed LS estimate on the user's comb, plus its error variance.

    pilot_rx: the received pilot OFDM symbol, (256,) for one antenna or
    (A, 256).  Returns (estimates (A, 256), error_variance scalar).
    Other users' pilots live on disjoint bins, so LS sees only noise.
    """
    if noise_var <= 0:
        raise ValueError("noise variance must be positive (regularizes the prior)")
    pilot_rx = np.atleast_2d(np.asarray(pilot_rx, np.complex128))
    if pilot_rx.shape[1] != ofdm.NUM_SUBCARRIERS:
        raise ValueError(f"pilot symbol must have {ofdm.NUM_SUBCARRIERS} bins")
    bins = layout.bins(user)
    all_bins = np.arange(ofdm.NUM_SUBCARRIERS)
    r_pp = freq_correlation(profile, bins, bins)
    r_fp = freq_correlation(profile, all_bins, bins)
    gain = r_fp @ np.linalg.inv(r_pp + noise_var * np.eye(len(bins)))
    ls = pilot_rx[:, bins]  # unit pilots: LS = raw observation
    est = ls @ gain.T
    # posterior variance, averaged over the band
    r_ff_diag = freq_correlation(profile, all_bins, all_bins).diagonal().real
    err = r_ff_diag - np.einsum("ij,ij->i", gain, r_fp.conj()).real
    err_var = float(np.mean(np.maximum(err, 0.0)))
    return est, err_var


# ---------------------------------------------------------------------------
# diagnostics used by tests and the harness manifest


def empirical_rms_delay_spread(tap_gains, tap_delays_s):
    """Pooled power-weighted RMS delay spread across realizations."""
    p = np.abs(np.asarray(tap_gains).reshape(-1, len(tap_delays_s))) ** 2
    w = p.sum(axis=0)
    w = w / w.sum()
    m1 = np.sum(w * tap_delays_s)
    m2 = np.sum(w * tap_delays_s ** 2)
    return math.sqrt(m2 - m1 * m1)


def coherence_bandwidth_hz(freq_responses, level=0.5):
    """Smallest frequency lag where the mean correlation drops below level."""
    H = np.asarray(freq_responses).reshape(-1, ofdm.NUM_SUBCARRIERS)
    spacing = 1.0 / ofdm.SYMBOL_DURATION_S
    power = np.mean(np.abs(H) ** 2)
    for lag in range(1, ofdm.NUM_SUBCARRIERS):
        rho = np.mean(H[:, lag:] * H[:, :-lag].conj()) / power
        if abs(rho) < level:
            return lag * spacing
    return ofdm.NUM_SUBCARRIERS * spacing
