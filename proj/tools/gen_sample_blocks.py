#!/usr/bin/env python3
"""Synthetic block/witness extract with the same columns as a mainnet export.

Every quantity follows the dependency structure of the BlockCreation and
WitnessCreation sub-models:

    difficulty -> gas_limit -> tx_count -> state_entries_updated
    tx_count, difficulty -> block_creation_time_s
    difficulty, state_entries_updated -> witness_size_bytes -> witness_creation_time_s

The numbers are plausible for pre-London mainnet but are not real data.
"""

import argparse
import csv

import numpy as np


def generate(n, seed):
    rng = np.random.default_rng(seed)
    difficulty = np.clip(rng.normal(2.55e15, 0.35e15, n), 1.6e15, None)
    z_diff = (difficulty - 2.55e15) / 0.35e15

    gas_limit = np.clip(11.2e6 + 0.55e6 * z_diff + rng.normal(0, 0.6e6, n), 9.5e6, 12.5e6)
    tx_count = np.clip(np.rint(25 + (gas_limit - 9.5e6) / 1e6 * 60 + rng.normal(0, 38, n)), 0, None)
    state_entries = np.clip(np.rint(700 + 17.0 * tx_count + rng.normal(0, 650, n)), 0, None)

    scale = 13.0 * np.sqrt(difficulty / 2.55e15) * (1.0 + 0.0015 * (tx_count - 150))
    block_time = np.round(rng.exponential(1.0, n) * np.clip(scale, 4.0, None), 3)

    witness = 250e3 + 480.0 * state_entries + 0.12e6 * z_diff + rng.lognormal(11.5, 0.9, n)
    witness = np.clip(np.rint(witness), 20e3, None)
    witness_time = np.round(0.3 + witness / 1e6 * 1.55 * rng.lognormal(0.0, 0.35, n), 3)

    rows = []
    for i in range(n):
        rows.append([
            11_000_000 + i,
            int(difficulty[i]),
            int(gas_limit[i]),
            int(tx_count[i]),
            int(state_entries[i]),
            f"{block_time[i]:.3f}",
            int(witness[i]),
            f"{witness_time[i]:.3f}",
        ])
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=500)
    ap.add_argument("--seed", type=int, default=20210611)
    ap.add_argument("--out", default="data/sample_blocks.csv")
    args = ap.parse_args()

    header = ["block_number", "difficulty", "gas_limit", "tx_count", "state_entries_updated",
              "block_creation_time_s", "witness_size_bytes", "witness_creation_time_s"]
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(generate(args.rows, args.seed))


if __name__ == "__main__":
    main()
