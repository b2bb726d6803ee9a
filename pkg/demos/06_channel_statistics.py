"""Channel model statistics: why TDL-A and Bad Urban behave so differently.

Draws 2000 realizations of each fading profile and prints delay spread,
coherence bandwidth, and the spread of per-user wideband powers.  The
wideband power spread is what hands SIC its decoding order; the coherence
bandwidth says how selective each channel is across the 256 subcarriers.
"""
import numpy as np

from nomalink import channel


def main():
    for name in ("tdla", "bu"):
        prof = channel.profile_for(name)
        reals = [channel.draw_realization(name, 1, 1, 99, t) for t in range(2000)]
        gains = np.stack([r.tap_gains for r in reals])
        H = np.stack([r.freq_responses for r in reals])
        rms = channel.empirical_rms_delay_spread(gains, prof.delays_s)
        cb = channel.coherence_bandwidth_hz(H)
        wideband_db = 10.0 * np.log10(np.mean(np.abs(H) ** 2, axis=(1, 2, 3)))
        lo, hi = np.percentile(wideband_db, [5, 95])
        print(f"{name}:")
        print(f"  taps                    : {prof.delays_s.size}")
        print(f"  max excess delay        : {prof.delays_s.max() * 1e9:8.1f} ns")
        print(f"  empirical rms spread    : {rms * 1e9:8.1f} ns")
        print(f"  coherence bandwidth     : {cb / 1e3:8.1f} kHz")
        print(f"  wideband power 5/95%    : [{lo:+.2f}, {hi:+.2f}] dB")
        print()
    print("TDL-A is nearly flat: whole-frame power varies a lot user to user")
    print("(a natural SIC ladder).  Bad Urban averages over many taps, so")
    print("every user lands near 0 dB and SIC loses its ordering.")


if __name__ == "__main__":
    main()
