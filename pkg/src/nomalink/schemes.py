"""Scheme signatures and their mappings onto the shared 256x4 resource grid.

The spread family (MUSA, PDMA, SCMA) sends 256 QPSK symbols per user and
frame, one per 4-subcarrier group: symbol k lands on group k mod 64 of OFDM
symbol k // 64, weighted by the user's length-4 signature (or, for SCMA,
replaced by the user's sparse codeword).  RDMA sends 256 symbols as a full
subcarrier row repeated on each OFDM symbol under per-repetition cyclic
shifts.  PCBMA and the superposed-OFDM baseline map 1024 symbols directly,
subcarrier-first; their users are told apart by polar frozen-bit signatures
(or not at all), not by the grid layout.

Per-user grid energy: 256 for the spread family and RDMA (unit energy per
data symbol), 1024 for direct mapping (unit energy per RE).
"""
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import rng as _rng
from .ofdm import NUM_SUBCARRIERS, NUM_SYMBOLS

GROUP_SIZE = 4
NUM_GROUPS = NUM_SUBCARRIERS // GROUP_SIZE
SPREAD_SYMBOLS = NUM_GROUPS * NUM_SYMBOLS  # 256
DIRECT_SYMBOLS = NUM_SUBCARRIERS * NUM_SYMBOLS  # 1024

SPREAD_SCHEMES = ("scma", "pdma", "rdma", "musa")
DIRECT_SCHEMES = ("pcbma", "ofdm")
SCHEME_NAMES = SPREAD_SCHEMES + DIRECT_SCHEMES

# gray-labeled QPSK points indexed by m = 2*b0 + b1
_QPSK_POINTS = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / math.sqrt(2.0)


def load_complex_table(path):
    """Parse a plain-text table of whitespace-separated "re,im" entries.

    Lines starting with # are comments; every data line must have the same
    number of entries.  Returns a 2-d complex array, one row per line.
    """
    rows = []
    with open(path) as f:
        for ln, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                row = [complex(*map(float, tok.split(","))) for tok in line.split()]
            except (TypeError, ValueError) as e:
                raise ValueError(f"{path}:{ln}: bad entry ({e})")
            rows.append(row)
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ValueError(f"{path}: empty or ragged table")
    return np.array(rows, np.complex128)


def _packaged(name):
    return resources.files(__package__).joinpath("data", name)


def _load_packaged_table(name):
    with resources.as_file(_packaged(name)) as p:
        return load_complex_table(p)


@dataclass(frozen=True)
class Scheme:
    name: str
    num_users: int
    sequences: np.ndarray = None   # (U, 4) unit-norm, spread schemes
    codebooks: np.ndarray = None   # (U, 4, 4) [user, codeword, re], scma
    shifts: np.ndarray = None      # (U,) cyclic shifts, rdma

    @property
    def is_direct(self):
        return self.name in DIRECT_SCHEMES

    @property
    def symbols_per_user(self):
        return DIRECT_SYMBOLS if self.is_direct else SPREAD_SYMBOLS


def _musa_sequences(num_users, seed):
    """Random draws from {+-1 +-1j}/(2 sqrt 2); redrawn until distinct."""
    seqs = np.zeros((num_users, GROUP_SIZE), np.complex128)
    seen = set()
    for u in range(num_users):
        g = _rng.stream(seed, _rng.SPREAD_SEQ, user=u)
        while True:
            signs = g.integers(0, 2, (GROUP_SIZE, 2)) * 2 - 1
            key = signs.tobytes()
            if key not in seen:
                seen.add(key)
                break
        seqs[u] = (signs[:, 0] + 1j * signs[:, 1]) / (2.0 * math.sqrt(2.0))
    return seqs


_PDMA_EXTRA = ["0,0 1,0 0,0 0,0", "0,0 0,0 1,0 0,0", "0,0 0,0 0,0 1,0"]


def _pdma_sequences(num_users, pattern_file=None):
    if pattern_file is not None:
        table = load_complex_table(pattern_file)
    elif num_users <= 6:
        table = _load_packaged_table("pdma_patterns_150.txt")
    else:
        table = _load_packaged_table("pdma_patterns_300.txt")
        if num_users > table.shape[0]:
            # complete the set with the remaining weight-1 patterns
            extra = np.array(
                [[complex(*map(float, t.split(","))) for t in row.split()] for row in _PDMA_EXTRA]
            )
            table = np.concatenate([table, extra], axis=0)
    if num_users > table.shape[0]:
        raise ValueError(
            f"pdma supports at most {table.shape[0]} users, requested {num_users}"
        )
    pats = table[:num_users].real
    if not np.all((pats == 0) | (pats == 1)) or np.any(table.imag):
        raise ValueError("pdma patterns must be binary occupancy masks")
    weights = pats.sum(axis=1)
    if np.any(weights == 0):
        raise ValueError("pdma pattern with zero weight")
    return pats / np.sqrt(weights)[:, None]


def _scma_codebooks(num_users, codebook_file=None):
    if num_users > 6:
        raise ValueError("scma codebook supports 6 users on 4 resources (150% max)")
    if codebook_file is not None:
        table = load_complex_table(codebook_file)
    else:
        table = _load_packaged_table("scma_codebook_6x4.txt")
    if table.shape != (24, 4):
        raise ValueError(f"scma codebook must be 24x4 (6 users x 4 codewords), got {table.shape}")
    books = table.reshape(6, 4, GROUP_SIZE)
    energies = np.sum(np.abs(books) ** 2, axis=2)
    if not np.allclose(energies, 1.0, atol=1e-9):
        raise ValueError("scma codewords must have unit energy")
    return books[:num_users].copy()


def make_scheme(name, num_users, seed=0, data_file=None):
    """Build the signature material for num_users of the named scheme."""
    if name not in SCHEME_NAMES:
        raise ValueError(f"unknown scheme {name!r}; valid: {', '.join(SCHEME_NAMES)}")
    if num_users < 1:
        raise ValueError("need at least one user")
    if name == "musa":
        if num_users > 256:
            raise ValueError("musa sequence alphabet supports at most 256 distinct users")
        return Scheme(name, num_users, sequences=_musa_sequences(num_users, seed))
    if name == "pdma":
        return Scheme(name, num_users, sequences=_pdma_sequences(num_users, data_file))
    if name == "scma":
        return Scheme(name, num_users, codebooks=_scma_codebooks(num_users, data_file))
    if name == "rdma":
        if num_users > NUM_SUBCARRIERS:
            raise ValueError(f"rdma supports at most {NUM_SUBCARRIERS} users")
        stride = NUM_SUBCARRIERS // num_users
        shifts = (np.arange(num_users) * stride) % NUM_SUBCARRIERS
        return Scheme(name, num_users, shifts=shifts)
    return Scheme(name, num_users)  # pcbma / ofdm


# ---------------------------------------------------------------------------
# grid mappings


def _check_symbols(symbols, expected):
    symbols = np.asarray(symbols, np.complex128)
    if symbols.shape != (expected,):
        raise ValueError(f"expected {expected} symbols, got {symbols.shape}")
    return symbols


def map_spread(sequence, symbols):
    symbols = _check_symbols(symbols, SPREAD_SYMBOLS)
    s = symbols.reshape(NUM_SYMBOLS, NUM_GROUPS)  # [t, g]
    # grid[4g + i, t] = seq[i] * symbol(64t + g)
    return (np.asarray(sequence)[None, :, None] * s.T[:, None, :]).reshape(
        NUM_SUBCARRIERS, NUM_SYMBOLS
    )


def unmap_spread(sequence, grid):
    seq = np.asarray(sequence)
    blocks = np.asarray(grid).reshape(NUM_GROUPS, GROUP_SIZE, NUM_SYMBOLS)
    vals = np.einsum("i,git->gt", seq.conj(), blocks) / np.sum(np.abs(seq) ** 2)
    return vals.T.reshape(SPREAD_SYMBOLS)


def _scma_indices(symbols):
    # recover the gray codeword index from the QPSK point signs
    return ((symbols.real < 0) * 2 + (symbols.imag < 0)).astype(np.int64)


def map_codebook(codebook, symbols):
    """SCMA: replace each QPSK symbol with the matching sparse codeword."""
    symbols = _check_symbols(symbols, SPREAD_SYMBOLS)
    cws = codebook[_scma_indices(symbols)]  # (256, 4)
    blocks = cws.reshape(NUM_SYMBOLS, NUM_GROUPS, GROUP_SIZE)  # [t, g, i]
    return blocks.transpose(1, 2, 0).reshape(NUM_SUBCARRIERS, NUM_SYMBOLS)


def unmap_codebook(codebook, grid):
    blocks = np.asarray(grid).reshape(NUM_GROUPS, GROUP_SIZE, NUM_SYMBOLS)
    slots = blocks.transpose(2, 0, 1).reshape(SPREAD_SYMBOLS, GROUP_SIZE)
    dists = np.abs(slots[:, None, :] - codebook[None, :, :]).sum(axis=2)
    return _QPSK_POINTS[np.argmin(dists, axis=1)]


def map_rdma(shift, symbols):
    symbols = _check_symbols(symbols, SPREAD_SYMBOLS)
    grid = np.empty((NUM_SUBCARRIERS, NUM_SYMBOLS), np.complex128)
    for t in range(NUM_SYMBOLS):
        grid[:, t] = np.roll(symbols, t * shift)
    return 0.5 * grid


def unmap_rdma(shift, grid):
    grid = np.asarray(grid)
    acc = np.zeros(NUM_SUBCARRIERS, np.complex128)
    for t in range(NUM_SYMBOLS):
        acc += np.roll(grid[:, t], -t * shift)
    return acc / (NUM_SYMBOLS * 0.5)


def map_direct(symbols):
    symbols = _check_symbols(symbols, DIRECT_SYMBOLS)
    return symbols.reshape(NUM_SYMBOLS, NUM_SUBCARRIERS).T


def unmap_direct(grid):
    return np.asarray(grid).T.reshape(DIRECT_SYMBOLS)


def map_user(scheme, user, symbols):
    """Map one user's QPSK symbols to its (256, 4) grid contribution."""
    if not 0 <= user < scheme.num_users:
        raise ValueError(f"user {user} out of range")
    if scheme.name == "scma":
        return map_codebook(scheme.codebooks[user], symbols)
    if scheme.name == "rdma":
        return map_rdma(scheme.shifts[user], symbols)
    if scheme.is_direct:
        return map_direct(symbols)
    return map_spread(scheme.sequences[user], symbols)


def unmap_user(scheme, user, grid):
    """Exact inverse of map_user on the user's own clean grid."""
    if scheme.name == "scma":
        return unmap_codebook(scheme.codebooks[user], grid)
    if scheme.name == "rdma":
        return unmap_rdma(scheme.shifts[user], grid)
    if scheme.is_direct:
        return unmap_direct(grid)
    return unmap_spread(scheme.sequences[user], grid)


def superpose(user_grids, power_offsets_db=None):
    """Element-wise sum of user grids, amplitudes scaled by 10^(dB/20)."""
    grids = [np.asarray(g) for g in user_grids]
    if not grids:
        raise ValueError("no grids to superpose")
    shape = grids[0].shape
    if any(g.shape != shape for g in grids):
        raise ValueError("grid dimensions differ")
    if power_offsets_db is None:
        power_offsets_db = np.zeros(len(grids))
    scales = 10.0 ** (np.asarray(power_offsets_db, np.float64) / 20.0)
    if scales.shape[0] != len(grids):
        raise ValueError("one power offset per grid required")
    out = np.zeros(shape, np.complex128)
    for g, a in zip(grids, scales):
        out += a * g
    return out


def overload_factor(num_users, scheme_name=None):
    """Users relative to the 4-user orthogonal capacity, in percent.

    Direct-mapped schemes spend 4x the REs per user at the same payload,
    so the same formula applies across families.
    """
    if num_users < 1:
        raise ValueError("need at least one user")
    return 100.0 * num_users / GROUP_SIZE


def users_for_overload(percent):
    users = percent * GROUP_SIZE / 100.0
    if abs(users - round(users)) > 1e-9 or round(users) < 1:
        raise ValueError(f"overload {percent}% is not a whole number of users")
    return int(round(users))
