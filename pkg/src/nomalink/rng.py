"""Deterministic random-stream derivation.

Every random draw in the simulator comes from a counter-based Philox stream
keyed by (master_seed, trial, user, antenna, purpose).  Streams are stateless
functions of the key, so a sweep produces bitwise-identical results no matter
how trials are scheduled across worker processes.
"""

import numpy as np

# purpose tags; fixed integers, never reordered (python hash() is salted and
# must not leak into keys)
PAYLOAD = 1
SIGNATURE = 2
SPREAD_SEQ = 3
POWER = 4
CFO = 5
TAPS = 6
NOISE = 7
PILOT = 8

_TRIAL_BITS = 34
_USER_BITS = 14
_ANT_BITS = 4
_PURPOSE_BITS = 8


def stream_key(master_seed, purpose, trial=0, user=0, antenna=0):
    """Pack the key fields into one 128-bit Philox key."""
    if not 0 <= trial < (1 << _TRIAL_BITS):
        raise ValueError(f"trial {trial} out of key range")
    if not 0 <= user < (1 << _USER_BITS):
        raise ValueError(f"user {user} out of key range")
    if not 0 <= antenna < (1 << _ANT_BITS):
        raise ValueError(f"antenna {antenna} out of key range")
    if not 0 <= purpose < (1 << _PURPOSE_BITS):
        raise ValueError(f"purpose {purpose} out of key range")
    low = trial
    low = (low << _USER_BITS) | user
    low = (low << _ANT_BITS) | antenna
    low = (low << _PURPOSE_BITS) | purpose
    return (int(master_seed) << 64) | low


def stream(master_seed, purpose, trial=0, user=0, antenna=0):
    """Generator for one (seed, trial, user, antenna, purpose) draw stream."""
    key = stream_key(master_seed, purpose, trial=trial, user=user, antenna=antenna)
    return np.random.Generator(np.random.Philox(key=key))
