"""Connectivity diagnostics and the observation-noise sweep.

First-layer interconnect selections reveal which observation dimensions and
which threshold levels the trained circuit actually consults; counting them
is the whole analysis. Results are emitted as CSV for external plotting.
"""

from __future__ import annotations

import csv
import hashlib
import os

import numpy as np

from .sac import evaluate


def input_connection_histogram(policy):
    """Outgoing connections per observation dimension.

    Counts, for every first-layer LUT input slot, which dimension's
    threshold-bit block the argmax selection falls in. Returns
    (counts array of length d_in, number of dimensions with zero
    connections). Hard selections only; table contents do not matter.
    """
    first = policy.layers[0]
    sel = first.selections().ravel()
    dims = sel // policy.spec.bits
    counts = np.bincount(dims, minlength=policy.d_in)
    return counts, int(np.sum(counts == 0))


def bit_index_histogram(policy):
    """Connections per threshold index 0..bits-1, aggregated over dimensions."""
    first = policy.layers[0]
    sel = first.selections().ravel()
    return np.bincount(sel % policy.spec.bits, minlength=policy.spec.bits)


def noise_sweep(policy, env, sigmas, episodes: int, seed: int = 0, mode=None):
    """Evaluation return per observation-noise level.

    Returns a list of (sigma, mean, std) rows; delegates each row to
    `evaluate`, which injects the noise into normalized observations.
    """
    rows = []
    for sigma in sigmas:
        mean, std, _ = evaluate(policy, env, episodes, noise_sigma=float(sigma),
                                seed=seed, mode=mode)
        rows.append((float(sigma), mean, std))
    return rows


def config_hash(config_dict: dict) -> str:
    """Stable 8-hex-digit tag for output filenames."""
    text = repr(sorted(config_dict.items()))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:8]


def write_connection_csv(path: str, counts: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dimension", "connections"])
        for dim, count in enumerate(counts):
            writer.writerow([dim, int(count)])


def write_bit_csv(path: str, counts: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bit_index", "connections"])
        for idx, count in enumerate(counts):
            writer.writerow([idx, int(count)])


def write_noise_csv(path: str, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sigma", "mean_return", "std_return"])
        for sigma, mean, std in rows:
            writer.writerow([sigma, mean, std])


def diag_filename(out_dir: str, what: str, tag: str) -> str:
    return os.path.join(out_dir, f"{what}_{tag}.csv")
