"""Monte Carlo harness: scenario configs, seeded execution, sweeps, output.

A scenario fixes scheme, channel, antenna count, SE target, and receiver
knobs; sweeps run over an SNR list or an overload list.  Trials are fully
determined by (config, master_seed, trial_index) through counter-based
streams, and aggregation consumes fixed-size trial chunks in index order, so
the emitted CSV is byte-identical for any worker count.

SNR convention: Es/N0 per resource element per receive antenna, where Es is
the unit reference symbol energy of the grid (stated in the run manifest).
"""
import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import channel, polar, receivers, schemes
from . import rng as _rng
from .qpsk import qpsk_hard_bits, qpsk_map

CHUNK_TRIALS = 100
SE_CHOICES = {"1/4": 256, "1/6": 171}
CSI_MODES = ("ideal", "mmse")
FEC_MODES = ("polar", "bypass")
CSV_HEADER = "scenario,scheme,snr_db,overload_pct,user,bler,trials,stderr"
SNR_DEFINITION = "Es/N0 per resource element per receive antenna (dB)"


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "run"
    scheme: str = "musa"
    channel: str = "awgn"
    num_users: int = 6
    se: str = "1/4"
    num_antennas: int = 1
    power_mode: str = None        # default: per-channel rule
    csi: str = None               # default: mmse for awgn_cfo, else ideal
    snr_db: tuple = (4.0,)
    overload_pct: tuple = None    # overload sweep at snr_db[0]
    trials: int = 10000
    master_seed: int = 0
    list_size: int = 16
    mpa_iters: int = 8
    sic_outer_iters: int = 2
    early_stop: bool = True
    min_errors: int = 100
    min_trials: int = 1000
    fec: str = "polar"
    block_length: int = None      # override; default 512 spread / 2048 direct
    workers: int = 1

    @property
    def resolved_csi(self):
        if self.csi is not None:
            return self.csi
        return "mmse" if self.channel == "awgn_cfo" else "ideal"

    @property
    def resolved_power_mode(self):
        return self.power_mode  # channel module applies its per-channel rule


def validate_config(cfg):
    """Collect every schema violation; raise with all of them at once."""
    problems = []
    if cfg.scheme not in schemes.SCHEME_NAMES:
        problems.append(
            f"unknown scheme {cfg.scheme!r}; valid: {', '.join(schemes.SCHEME_NAMES)}")
    if cfg.channel not in channel.CHANNEL_NAMES:
        problems.append(
            f"unknown channel {cfg.channel!r}; valid: {', '.join(channel.CHANNEL_NAMES)}")
    if cfg.se not in SE_CHOICES:
        problems.append(f"se must be one of {sorted(SE_CHOICES)}, got {cfg.se!r}")
    if cfg.num_antennas not in (1, 2):
        problems.append(f"num_antennas must be 1 or 2, got {cfg.num_antennas}")
    if cfg.csi is not None and cfg.csi not in CSI_MODES:
        problems.append(f"csi must be one of {CSI_MODES}, got {cfg.csi!r}")
    elif cfg.resolved_csi == "mmse" and cfg.channel != "awgn_cfo":
        problems.append("mmse channel estimation is defined for the awgn_cfo "
                        "scenario only; other channels assume ideal csi")
    if cfg.power_mode is not None and cfg.power_mode not in channel.POWER_MODES:
        problems.append(
            f"power_mode must be one of {channel.POWER_MODES}, got {cfg.power_mode!r}")
    elif cfg.power_mode == "wide_range" and cfg.channel != "awgn":
        problems.append("wide_range power spread belongs to the awgn scenario")
    if cfg.fec not in FEC_MODES:
        problems.append(f"fec must be one of {FEC_MODES}, got {cfg.fec!r}")
    if cfg.num_users < 1:
        problems.append("num_users must be at least 1")
    users_to_check = [cfg.num_users]
    if cfg.overload_pct is not None:
        if not cfg.overload_pct:
            problems.append("overload_pct list is empty")
        for pct in cfg.overload_pct or ():
            try:
                users_to_check.append(schemes.users_for_overload(pct))
            except ValueError as e:
                problems.append(str(e))
    if cfg.scheme == "scma":
        for u in users_to_check:
            if u > 6:
                problems.append(
                    f"scma at {schemes.overload_factor(u):.0f}% overload rejected: "
                    "the scma codebook pairing is restricted to 150% (6 users "
                    "on 4 resources)")
                break
    if cfg.resolved_csi == "mmse":
        for u in users_to_check:
            if u > 16:
                problems.append(
                    f"pilot comb supports at most 16 users, got {u}")
                break
    if not cfg.snr_db:
        problems.append("snr_db list is empty")
    if cfg.trials < 1:
        problems.append("trials must be positive")
    if cfg.workers < 1:
        problems.append("workers must be positive")
    if cfg.list_size < 1 or cfg.list_size & (cfg.list_size - 1):
        problems.append(f"list_size must be a power of two, got {cfg.list_size}")
    if cfg.min_errors < 1 or cfg.min_trials < 1:
        problems.append("early-stop thresholds must be positive")
    if cfg.block_length is not None:
        n = cfg.block_length
        if n < 2 or n & (n - 1):
            problems.append(f"block_length must be a power of two, got {n}")
        elif cfg.se in SE_CHOICES and SE_CHOICES[cfg.se] >= n:
            problems.append(f"block_length {n} cannot carry {SE_CHOICES[cfg.se]} info bits")
    if problems:
        raise ValueError("invalid scenario config:\n  " + "\n  ".join(problems))
    return cfg


@dataclass
class BlerRecord:
    scenario: str
    scheme: str
    snr_db: float
    overload_pct: float
    per_user_bler: tuple
    avg_bler: float
    trials: int
    wall_time: float = field(compare=False, default=0.0)


def stderr_of(bler, trials):
    return math.sqrt(max(bler * (1.0 - bler), 0.0) / trials)


# ---------------------------------------------------------------------------
# per-trial chain

class _Runtime:
    """Objects shared by all trials of one (config, code) point."""

    def __init__(self, cfg):
        validate_config(cfg)
        self.cfg = cfg
        self.scheme = schemes.make_scheme(cfg.scheme, cfg.num_users,
                                          seed=cfg.master_seed)
        n = cfg.block_length
        if n is None:
            n = 2048 if self.scheme.is_direct else 512
        k = SE_CHOICES[cfg.se]
        self.code = polar.make_code_config(n, k)
        # payload-parity audit: every user carries the SE target's K bits
        assert self.code.info_length == k
        self.nsym = self.code.block_length // 2
        if self.nsym > self.scheme.symbols_per_user:
            raise ValueError(
                f"block_length {n} needs {self.nsym} symbols, {cfg.scheme} "
                f"carries {self.scheme.symbols_per_user}")
        if cfg.scheme == "pcbma":
            self.signatures = [polar.make_signature(u, cfg.master_seed, self.code)
                               for u in range(cfg.num_users)]
        else:
            self.signatures = None
        self.csi_mode = cfg.resolved_csi
        self.layout = (channel.PilotLayout(cfg.num_users)
                       if self.csi_mode == "mmse" else None)
        self.profile = channel.profile_for(cfg.channel)
        # average transmitted energy per RE, for estimation-error inflation
        self.energy_per_re = self.scheme.symbols_per_user / schemes.DIRECT_SYMBOLS


_RUNTIME_CACHE = {}


def _runtime(cfg):
    rt = _RUNTIME_CACHE.get(cfg)
    if rt is None:
        rt = _RUNTIME_CACHE[cfg] = _Runtime(cfg)
    return rt


def _payload_bits(cfg, trial, user, length):
    gen = _rng.stream(cfg.master_seed, _rng.PAYLOAD, trial=trial, user=user)
    return gen.integers(0, 2, size=length).astype(np.uint8)


def run_trial(cfg, snr_db, trial):
    """One full chain execution; per-user error indicators.

    Polar mode returns 0/1 block errors; bypass mode returns per-user raw
    bit error fractions on hard QPSK decisions.
    """
    rt = _runtime(cfg)
    scheme, code = rt.scheme, rt.code
    num_users, num_ant = cfg.num_users, cfg.num_antennas
    noise_var = 10.0 ** (-snr_db / 10.0)
    real = channel.draw_realization(
        cfg.channel, num_users, num_ant, cfg.master_seed, trial,
        power_mode=cfg.power_mode, mean_esn0_db=snr_db)

    tx_bits, grids = [], []
    pilot_col = rt.csi_mode == "mmse"
    for u in range(num_users):
        if cfg.fec == "bypass":
            bits = _payload_bits(cfg, trial, u, 2 * scheme.symbols_per_user)
            syms = qpsk_map(bits)
        else:
            bits = _payload_bits(cfg, trial, u, code.payload_length)
            sig = rt.signatures[u] if rt.signatures else None
            syms = qpsk_map(polar.polar_encode(bits, code, sig))
            if syms.size < scheme.symbols_per_user:
                syms = np.pad(syms, (0, scheme.symbols_per_user - syms.size))
        tx_bits.append(bits)
        grid = schemes.map_user(scheme, u, syms)
        if pilot_col:
            grid = np.concatenate(
                [channel.pilot_grid(rt.layout, u)[:, None], grid], axis=1)
        grids.append(grid)

    noise_rngs = [_rng.stream(cfg.master_seed, _rng.NOISE, trial=trial, antenna=a)
                  for a in range(num_ant)]
    rx = channel.apply_channel(grids, real, noise_var, noise_rngs)

    if pilot_col:
        est = np.empty((num_users, num_ant, schemes.NUM_SUBCARRIERS), np.complex128)
        err_sum = 0.0
        for u in range(num_users):
            e, err = channel.mmse_channel_estimate(
                rx[:, :, 0], rt.layout, u, rt.profile, noise_var)
            est[u] = e
            err_sum += err
        csi = est
        detect_var = noise_var + err_sum * rt.energy_per_re
        rx = rx[:, :, 1:]
    else:
        csi = channel.genie_csi(real)
        detect_var = noise_var

    if cfg.fec == "bypass":
        return _bypass_errors(rx, csi, scheme, detect_var, tx_bits, cfg)

    res = receivers.sic_detect(
        rx, csi, scheme, detect_var, code, signatures=rt.signatures,
        outer_iters=cfg.sic_outer_iters, list_size=cfg.list_size,
        mpa_iters=cfg.mpa_iters)
    errors = np.empty(num_users)
    for u in range(num_users):
        errors[u] = 0.0 if (res.crc_ok[u]
                            and np.array_equal(res.payloads[u], tx_bits[u])) else 1.0
    return errors


def _bypass_errors(rx, csi, scheme, noise_var, tx_bits, cfg):
    users = list(range(cfg.num_users))
    errors = np.empty(cfg.num_users)
    rec = receivers.receiver_for(scheme.name)
    if rec == "mpa":
        llrs = receivers.mpa_detect(rx, csi, scheme, noise_var,
                                    max_iters=cfg.mpa_iters)
        for u in users:
            hard = (llrs[u] < 0).astype(np.uint8)
            errors[u] = np.mean(hard != tx_bits[u])
    else:
        z, _, _, _ = receivers.detect_symbols(rx, csi, scheme, users,
                                              noise_var, rec)
        for u in users:
            hard = qpsk_hard_bits(z[u])
            errors[u] = np.mean(hard != tx_bits[u])
    return errors


# ---------------------------------------------------------------------------
# aggregation

def _chunk(cfg, snr_db, chunk_index, total_trials):
    start = chunk_index * CHUNK_TRIALS
    stop = min(start + CHUNK_TRIALS, total_trials)
    out = np.zeros((stop - start, cfg.num_users))
    for i, trial in enumerate(range(start, stop)):
        out[i] = run_trial(cfg, snr_db, trial)
    return out


def _chunk_star(args):
    return _chunk(*args)


def run_point(cfg, snr_db, trials=None, pool=None):
    """Aggregate trials at one SNR into a BlerRecord.

    Chunks are consumed strictly in index order and the early-stop rule is
    applied only at chunk boundaries, so the result is identical no matter
    how many workers computed the chunks.
    """
    validate_config(cfg)
    total = cfg.trials if trials is None else int(trials)
    if total < 1:
        raise ValueError("trials must be positive")
    t0 = time.perf_counter()
    num_chunks = (total + CHUNK_TRIALS - 1) // CHUNK_TRIALS
    err_sum = np.zeros(cfg.num_users)
    done = 0

    def _stop():
        return (cfg.early_stop and done >= cfg.min_trials
                and err_sum.sum() >= cfg.min_errors)

    if pool is None:
        for c in range(num_chunks):
            block = _chunk(cfg, snr_db, c, total)
            err_sum += block.sum(axis=0)
            done += block.shape[0]
            if _stop():
                break
    else:
        args = [(cfg, snr_db, c, total) for c in range(num_chunks)]
        for block in pool.map(_chunk_star, args):
            err_sum += block.sum(axis=0)
            done += block.shape[0]
            if _stop():
                break
    per_user = tuple(float(e / done) for e in err_sum)
    return BlerRecord(
        scenario=cfg.name,
        scheme=cfg.scheme,
        snr_db=float(snr_db),
        overload_pct=schemes.overload_factor(cfg.num_users),
        per_user_bler=per_user,
        avg_bler=float(np.mean(per_user)),
        trials=done,
        wall_time=time.perf_counter() - t0,
    )


def run_sweep(cfg):
    """SNR sweep, or overload sweep at snr_db[0] when overload_pct is set."""
    validate_config(cfg)
    points = []
    if cfg.overload_pct is not None:
        snr = cfg.snr_db[0]
        for pct in cfg.overload_pct:
            users = schemes.users_for_overload(pct)
            points.append((replace(cfg, num_users=users, overload_pct=None), snr))
    else:
        points = [(cfg, snr) for snr in cfg.snr_db]
    records = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for pcfg, snr in points:
                records.append(run_point(pcfg, snr, pool=pool))
    else:
        for pcfg, snr in points:
            records.append(run_point(pcfg, snr))
    return records


# ---------------------------------------------------------------------------
# emission

def _fmt(x):
    return repr(float(x))


def csv_text(records):
    if not records:
        raise ValueError("no records to emit")
    lines = [CSV_HEADER]
    for rec in records:
        for u, b in enumerate(rec.per_user_bler):
            lines.append(",".join([
                rec.scenario, rec.scheme, _fmt(rec.snr_db), _fmt(rec.overload_pct),
                str(u), _fmt(b), str(rec.trials), _fmt(stderr_of(b, rec.trials)),
            ]))
    return "\n".join(lines) + "\n"


def emit_csv(records, path):
    with open(path, "w", newline="") as f:
        f.write(csv_text(records))


def load_csv(path_or_text):
    """Parse emit_csv output back into BlerRecords (wall_time is not stored)."""
    if "\n" in str(path_or_text):
        f = io.StringIO(path_or_text)
    else:
        f = open(path_or_text)
    with f:
        rows = list(csv.reader(f))
    if not rows or ",".join(rows[0]) != CSV_HEADER:
        raise ValueError("not a harness CSV file")
    records = []
    current = None
    for row in rows[1:]:
        scen, scheme, snr, ov, user, bler, trials, _ = row
        key = (scen, scheme, float(snr), float(ov), int(trials))
        if current is None or current[0] != key:
            if current is not None:
                records.append(_finish_record(current))
            current = [key, []]
        if int(user) != len(current[1]):
            raise ValueError("user rows out of order")
        current[1].append(float(bler))
    if current is not None:
        records.append(_finish_record(current))
    return records


def _finish_record(current):
    (scen, scheme, snr, ov, trials), blers = current
    return BlerRecord(scenario=scen, scheme=scheme, snr_db=snr, overload_pct=ov,
                      per_user_bler=tuple(blers), avg_bler=float(np.mean(blers)),
                      trials=trials)


def emit_plot(records, path):
    """One log-BLER curve per scheme against SNR (or overload, if swept)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not records:
        raise ValueError("no records to plot")
    snrs = {rec.snr_db for rec in records}
    overload_axis = len(snrs) == 1 and len({r.overload_pct for r in records}) > 1
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    by_scheme = {}
    for rec in records:
        by_scheme.setdefault(rec.scheme, []).append(rec)
    for scheme, recs in sorted(by_scheme.items()):
        xs = [r.overload_pct if overload_axis else r.snr_db for r in recs]
        ys = [max(r.avg_bler, 1.0 / (10.0 * r.trials)) for r in recs]
        pairs = sorted(zip(xs, ys))
        ax.semilogy([p[0] for p in pairs], [p[1] for p in pairs],
                    marker="o", label=scheme)
    ax.set_xlabel("overload [%]" if overload_axis else "Es/N0 per RE [dB]")
    ax.set_ylabel("avg BLER")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def manifest_text(cfg):
    lines = ["resolved scenario configuration"]
    for f in fields(cfg):
        lines.append(f"{f.name}: {getattr(cfg, f.name)}")
    lines.append(f"csi (resolved): {cfg.resolved_csi}")
    lines.append(f"snr definition: {SNR_DEFINITION}")
    lines.append(f"chunk size: {CHUNK_TRIALS} trials")
    return "\n".join(lines) + "\n"


def emit_manifest(cfg, path):
    with open(path, "w") as f:
        f.write(manifest_text(cfg))


# ---------------------------------------------------------------------------
# config files

_LIST_FIELDS = {"snr_db", "overload_pct"}
_INT_FIELDS = {"num_users", "num_antennas", "trials", "master_seed", "list_size",
               "mpa_iters", "sic_outer_iters", "min_errors", "min_trials",
               "block_length", "workers"}
_BOOL_FIELDS = {"early_stop"}
_STR_FIELDS = {"name", "scheme", "channel", "se", "power_mode", "csi", "fec"}


def parse_snr_spec(text):
    """Parse 'a:b:step' (inclusive ends) or a comma list into a float tuple."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"snr range must be a:b:step, got {text!r}")
        a, b, step = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise ValueError(f"bad snr range {text!r}")
        n = int(round((b - a) / step))
        return tuple(a + i * step for i in range(n + 1))
    return tuple(float(p) for p in text.split(",") if p.strip())


def config_from_dict(raw, base=None):
    """Build a validated ScenarioConfig from a plain dict; all errors listed."""
    cfg = base if base is not None else ScenarioConfig()
    known = {f.name for f in fields(ScenarioConfig)}
    problems = []
    updates = {}
    for key, value in (raw or {}).items():
        if key not in known:
            problems.append(f"unknown config key {key!r}")
            continue
        try:
            if key in _LIST_FIELDS and value is not None:
                if isinstance(value, str):
                    value = parse_snr_spec(value)
                elif isinstance(value, (int, float)):
                    value = (float(value),)
                else:
                    value = tuple(float(v) for v in value)
            elif key in _INT_FIELDS and value is not None:
                value = int(value)
            elif key in _BOOL_FIELDS:
                value = bool(value)
            elif key in _STR_FIELDS and value is not None:
                value = str(value)
        except (TypeError, ValueError):
            problems.append(f"bad value for {key!r}: {value!r}")
            continue
        updates[key] = value
    if problems:
        raise ValueError("invalid scenario config:\n  " + "\n  ".join(problems))
    return validate_config(replace(cfg, **updates))


def parse_config(path):
    """Load a YAML mapping of ScenarioConfig fields; defaults documented there."""
    import yaml

    with open(path) as f:
        raw = yaml.safe_load(f)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a mapping of fields")
    return config_from_dict(raw)
