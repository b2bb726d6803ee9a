"""Link-level Monte Carlo simulator for uplink non-orthogonal multiple access.

Multiple users' polar-coded QPSK signals share a 256-subcarrier x 4-symbol
OFDM resource grid through scheme-specific signatures (spreading sequences,
sparse patterns, codebooks, repetition shifts, or frozen-bit codebooks) and
are recovered by interference-cancelling or message-passing receivers.
"""

__version__ = "0.1.0"

from . import channel, harness, ofdm, polar, qpsk, receivers, schemes  # noqa: E402,F401
from .harness import ScenarioConfig, run_point, run_sweep  # noqa: E402,F401
