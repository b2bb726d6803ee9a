"""Pilot-based channel estimation in the CFO scenario.

The awgn_cfo scenario is the one place the receiver does not get genie
CSI: each user sends a comb pilot in an extra leading OFDM symbol and the
receiver runs a per-user MMSE estimator.  This demo prints the pilot
layout, then compares BLER with estimated versus ideal CSI at 150%
overload, spectral efficiency 1/6.
"""
import argparse

from nomalink import channel, harness


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    layout = channel.PilotLayout(6)
    print(f"pilot comb for 6 users: stride {layout.stride}, "
          f"{layout.bins(0).size} tones per user")
    for u in range(3):
        print(f"  user {u} tones: {layout.bins(u)[:6].tolist()} ...")

    print("\nEs/N0 (dB)   estimated CSI   ideal CSI")
    for snr in (2.0, 4.0, 6.0):
        row = []
        for csi in ("mmse", "ideal"):
            cfg = harness.ScenarioConfig(
                name="csi-demo", scheme="musa", channel="awgn_cfo",
                num_users=6, se="1/6", num_antennas=1, csi=csi,
                snr_db=(snr,), trials=args.trials, master_seed=args.seed,
                min_errors=60, min_trials=100)
            row.append(harness.run_point(cfg, snr))
        print(f"{snr:10.1f}   {row[0].avg_bler:13.4f}   {row[1].avg_bler:9.4f}")
    print("\nestimated CSI costs about a dB near the waterfall and nothing")
    print("above it: the comb pilots are dense enough for these nearly flat")
    print("responses, and the estimator feeds its residual error back into")
    print("the detector noise so weak estimates widen the LLRs instead of")
    print("biasing them.")


if __name__ == "__main__":
    main()
