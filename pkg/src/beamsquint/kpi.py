"""Statistics over simulation records: throughput, percentiles, CDFs, MCS usage.

Pure post-processing.  Percentiles use the nearest-rank rule so every
reported value is an actual sample and results are oracle-checkable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .ran import KpiRecord

__all__ = [
    "CdfSeries",
    "cdf",
    "ue_throughput",
    "percentile",
    "mcs_histogram",
    "write_cdf_throughput",
    "write_percentiles_vs_offset",
    "write_mcs_hist",
]


@dataclass(frozen=True)
class CdfSeries:
    values: np.ndarray  # ascending samples
    probs: np.ndarray   # k/n, so F(min) = 1/n and F(max) = 1


def cdf(values: Sequence[float]) -> CdfSeries:
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("empty sample")
    probs = np.arange(1, v.size + 1, dtype=float) / v.size
    return CdfSeries(v, probs)


def ue_throughput(
    records: Iterable[KpiRecord], sim_duration_s: float
) -> Dict[Tuple[int, int], float]:
    """Delivered bits per (drop, ue) divided by the simulated duration."""
    if sim_duration_s <= 0:
        raise ValueError("duration must be positive")
    bits: Dict[Tuple[int, int], int] = {}
    for r in records:
        key = (r.drop, r.ue)
        bits[key] = bits.get(key, 0) + r.bits
    return {k: b / sim_duration_s for k, b in sorted(bits.items())}


def percentile(series: Sequence[float], p: float) -> float:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest sample."""
    if not 0 <= p <= 100:
        raise ValueError(f"percentile {p} outside [0, 100]")
    s = sorted(series)
    if not s:
        raise ValueError("empty series")
    if p == 0:
        return s[0]
    rank = math.ceil(p / 100.0 * len(s))
    return s[rank - 1]


def mcs_histogram(records: Sequence[KpiRecord], n_mcs: int = 15) -> Tuple[np.ndarray, float]:
    """Usage shares per MCS among ACKed transmissions plus a NACK bin.

    Shares and the NACK fraction together sum to one.
    """
    if not records:
        raise ValueError("empty records")
    shares = np.zeros(n_mcs, dtype=float)
    nacks = 0
    for r in records:
        if r.ack:
            shares[r.mcs] += 1
        else:
            nacks += 1
    total = len(records)
    return shares / total, nacks / total


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _write_rows(path, header: List[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def write_cdf_throughput(path, cells: Dict[Tuple[str, float, int], CdfSeries]) -> None:
    """cells: (mode, delta_f_hz, array) -> per-UE throughput CDF."""
    rows = []
    for (mode, df, arr), series in sorted(cells.items()):
        for v, p in zip(series.values, series.probs):
            rows.append([mode, df, arr, float(v), float(p)])
    _write_rows(path, ["mode", "delta_f_hz", "array", "throughput_bps", "cdf"], rows)


def write_percentiles_vs_offset(path, rows: List[dict]) -> None:
    """One row per (delta_f, mode, array) cell with throughput and SINR
    percentiles side by side."""
    header = [
        "delta_f_hz", "mode", "array",
        "tput_p10", "tput_p50", "tput_p90",
        "sinr_p10", "sinr_p50", "sinr_p90",
    ]
    ordered = sorted(rows, key=lambda r: (r["delta_f_hz"], r["mode"], r["array"]))
    _write_rows(path, header, [[r[k] for k in header] for r in ordered])


def write_mcs_hist(path, cells: Dict[Tuple[str, float, int], Tuple[np.ndarray, float]]) -> None:
    """cells: (mode, delta_f_hz, array) -> (per-MCS shares, NACK fraction)."""
    rows = []
    for (mode, df, arr), (shares, nack) in sorted(cells.items()):
        for mcs, share in enumerate(shares):
            rows.append([mode, df, arr, str(mcs), float(share)])
        rows.append([mode, df, arr, "nack", float(nack)])
    _write_rows(path, ["mode", "delta_f_hz", "array", "mcs", "share"], rows)
