"""Command line front end: pattern traces, offset sweeps, the drop matrix.

Everything here emits CSV only; rendering lives in a separate package.
Output bytes are a pure function of config plus seed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Tuple

import numpy as np

from .config import ConfigError, RunConfig, load_config, load_mcs_table
from .geometry import Direction, ula_geometry
from .kpi import (
    cdf,
    mcs_histogram,
    percentile,
    ue_throughput,
    write_cdf_throughput,
    write_mcs_hist,
    write_percentiles_vs_offset,
)
from .patterns import SECTOR, dft_codebook, find_peak, gain_db, ula_beam_sines
from .ran import Simulation, run_drop
from .scenario import build_scenario, write_node_table
from .squint import (
    FrequencyPlan,
    apply_compensation,
    compensation_vector,
    disambiguate_peak,
    find_all_main_directions,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

PATTERN_BEAM_TARGETS_DEG = (15.0, 35.0, 66.0)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _nearest_beam(sines: np.ndarray, target_deg: float) -> int:
    return int(np.argmin(np.abs(sines - np.sin(np.radians(target_deg)))))


def _compensated(geom, pattern, weights, f1, delta_f, nominal_deg):
    """Weights corrected for operation at f1 + delta_f."""
    mains = find_all_main_directions(geom, pattern, weights, f1, threshold_db=3.0)
    target = disambiguate_peak(mains, Direction(nominal_deg, 90.0))
    comp = compensation_vector(geom, FrequencyPlan(f1, delta_f), target)
    return apply_compensation(weights, comp)


def cmd_pattern(cfg: RunConfig, out_dir: str) -> int:
    """Gain-vs-angle traces per (beam, frequency, compensation flag).

    Fine 0.01 deg sampling near each beam's lobe, 0.1 deg elsewhere."""
    if not cfg.rf.delta_f_hz:
        print("pattern: empty frequency offset list, nothing to do", file=sys.stderr)
        return EXIT_OK
    os.makedirs(out_dir, exist_ok=True)
    f1 = cfg.rf.f1_hz
    n = max(cfg.arrays.gnb_elements)
    geom = ula_geometry(n, f1)
    cb = dft_codebook(n, cfg.arrays.oversampling)
    sines = ula_beam_sines(n, cfg.arrays.oversampling)
    freqs = sorted({f1 + s * d for d in cfg.rf.delta_f_hz for s in (-1.0, 1.0)})

    for target in PATTERN_BEAM_TARGETS_DEG:
        k = _nearest_beam(sines, target)
        w = cb[k]
        nominal = float(np.degrees(np.arcsin(np.clip(sines[k], -1.0, 1.0))))
        coarse = np.arange(-90.0, 90.0 + 1e-9, 0.1)
        fine = np.arange(nominal - 8.0, nominal + 8.0 + 1e-9, 0.01)
        angles = np.unique(np.round(np.concatenate([coarse, fine]), 6))
        angles = angles[(angles >= -90.0) & (angles <= 90.0)]
        rows = []
        for f in freqs:
            for comp in (0, 1):
                if comp:
                    wf = _compensated(geom, SECTOR, w, f1, f - f1, nominal)
                else:
                    wf = w
                g = gain_db(geom, SECTOR, wf, f, angles, 90.0)
                rows.extend(
                    [f, comp, float(a), float(v)] for a, v in zip(angles, g)
                )
        _write_csv(
            os.path.join(out_dir, f"pattern_beam{int(round(target))}.csv"),
            ["freq_hz", "compensated", "angle_deg", "gain_db"],
            rows,
        )
    return EXIT_OK


def cmd_sweep_offset(cfg: RunConfig, out_dir: str) -> int:
    """Gain at each beam's f1 peak direction versus frequency offset."""
    os.makedirs(out_dir, exist_ok=True)
    f1 = cfg.rf.f1_hz
    n = max(cfg.arrays.gnb_elements)
    geom = ula_geometry(n, f1)
    cb = dft_codebook(n, cfg.arrays.oversampling)
    sines = ula_beam_sines(n, cfg.arrays.oversampling)
    deltas = np.arange(-1e9, 1e9 + 1.0, 50e6)
    rows = []
    for target in PATTERN_BEAM_TARGETS_DEG:
        k = _nearest_beam(sines, target)
        w = cb[k]
        nominal = float(np.degrees(np.arcsin(np.clip(sines[k], -1.0, 1.0))))
        peak = find_peak(geom, SECTOR, w, f1, grid_step_deg=0.05)
        for d in deltas:
            az, zen = peak.azimuth_deg, peak.zenith_deg
            g_raw = float(gain_db(geom, SECTOR, w, f1 + d, az, zen))
            wc = _compensated(geom, SECTOR, w, f1, float(d), nominal)
            g_comp = float(gain_db(geom, SECTOR, wc, f1 + d, az, zen))
            rows.append([target, float(d), 0, float(g_raw)])
            rows.append([target, float(d), 1, float(g_comp)])
    _write_csv(
        os.path.join(out_dir, "sweep_offset.csv"),
        ["beam_deg", "delta_f_hz", "compensated", "gain_db"],
        rows,
    )
    return EXIT_OK


def _cell_name(mode: str, delta_f: float, n: int) -> str:
    return f"{mode}_df{int(round(delta_f / 1e6))}_ula{n}"


def _records_rows(sims: List[Simulation]):
    for sim in sims:
        for r in sim.records:
            yield [
                r.drop, r.tti, r.ue, r.path, r.mode, r.n_rbs,
                float(r.sinr_db), r.mcs, int(r.ack), r.bits,
            ]


def _summary_rows(sims: List[Simulation], delta_f: float, n: int, duration_s: float):
    """Per-(drop, ue) rollup.  Mode is deliberately not a column so equal
    physics produces equal bytes."""
    for sim in sims:
        per_ue: Dict[int, List] = {}
        for r in sim.records:
            per_ue.setdefault(r.ue, []).append(r)
        for ue in sorted(per_ue):
            rs = per_ue[ue]
            bits = sum(r.bits for r in rs)
            nacks = sum(1 for r in rs if not r.ack)
            mean_sinr = sum(r.sinr_db for r in rs) / len(rs)
            yield [
                float(delta_f), n, sim.drop, ue,
                float(bits / duration_s), float(mean_sinr),
                float(nacks / len(rs)),
            ]


def run_matrix(
    cfg: RunConfig, mcs_table, threads: int = 1
) -> Dict[Tuple[str, float, int], List[Simulation]]:
    cells = [
        (mode, df, n)
        for mode in cfg.rf.modes
        for df in cfg.rf.delta_f_hz
        for n in cfg.arrays.gnb_elements
    ]
    tasks = [(m, d, n, drop) for (m, d, n) in cells for drop in range(cfg.run.drops)]
    results: Dict[Tuple[str, float, int, int], Simulation] = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = {
                t: pool.submit(run_drop, cfg, mcs_table, t[0], t[1], t[2], t[3])
                for t in tasks
            }
            for t, fut in futs.items():
                results[t] = fut.result()
    else:
        for t in tasks:
            results[t] = run_drop(cfg, mcs_table, t[0], t[1], t[2], t[3])
    return {
        cell: [results[(*cell, drop)] for drop in range(cfg.run.drops)]
        for cell in cells
    }


def write_matrix_outputs(cfg: RunConfig, out_dir: str, matrix) -> None:
    duration_s = cfg.run.ttis * cfg.ran.slot_s
    runs_dir = os.path.join(out_dir, "runs")
    os.makedirs(runs_dir, exist_ok=True)

    tput_cells = {}
    hist_cells = {}
    pct_rows = []
    for (mode, df, n), sims in sorted(matrix.items()):
        cell_dir = os.path.join(runs_dir, _cell_name(mode, df, n))
        os.makedirs(cell_dir, exist_ok=True)
        _write_csv(
            os.path.join(cell_dir, "records.csv"),
            ["drop", "tti", "ue", "path", "mode", "n_rbs", "sinr_db", "mcs", "ack", "bits"],
            _records_rows(sims),
        )
        _write_csv(
            os.path.join(cell_dir, "summary.csv"),
            ["delta_f_hz", "array", "drop", "ue", "tput_bps", "mean_sinr_db", "nack_ratio"],
            _summary_rows(sims, df, n, duration_s),
        )
        # initial placement; walkers have not moved yet in a fresh build
        write_node_table(build_scenario(cfg, n), os.path.join(cell_dir, "nodes.csv"))

        records = [r for sim in sims for r in sim.records]
        tputs = ue_throughput(records, duration_s)
        tput_cells[(mode, df, n)] = cdf(list(tputs.values()))
        hist_cells[(mode, df, n)] = mcs_histogram(records)
        sinrs = [r.sinr_db for r in records]
        pct_rows.append(
            {
                "delta_f_hz": df, "mode": mode, "array": n,
                "tput_p10": percentile(list(tputs.values()), 10),
                "tput_p50": percentile(list(tputs.values()), 50),
                "tput_p90": percentile(list(tputs.values()), 90),
                "sinr_p10": percentile(sinrs, 10),
                "sinr_p50": percentile(sinrs, 50),
                "sinr_p90": percentile(sinrs, 90),
            }
        )

    write_cdf_throughput(os.path.join(out_dir, "cdf_throughput.csv"), tput_cells)
    write_percentiles_vs_offset(os.path.join(out_dir, "percentiles_vs_offset.csv"), pct_rows)
    write_mcs_hist(os.path.join(out_dir, "mcs_hist.csv"), hist_cells)


def cmd_simulate(cfg: RunConfig, mcs_table, out_dir: str, threads: int = 1) -> int:
    os.makedirs(out_dir, exist_ok=True)
    matrix = run_matrix(cfg, mcs_table, threads)
    write_matrix_outputs(cfg, out_dir, matrix)
    return EXIT_OK


def _resolve_mcs_path(config_path: str, cfg: RunConfig) -> str:
    p = cfg.ran.mcs_table
    if os.path.isabs(p):
        return p
    return os.path.join(os.path.dirname(os.path.abspath(config_path)), p)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="beamsquint",
        description="Subband beam squint experiments: pattern traces, "
        "offset sweeps, and the system simulation matrix.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="YAML config path")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("pattern", help="gain-vs-angle traces")
    common(p)
    p = sub.add_parser("sweep-offset", help="gain at the design direction vs offset")
    common(p)
    p = sub.add_parser("simulate", help="run the mode/offset/array drop matrix")
    common(p)
    p.add_argument("--seed", type=int, default=None, help="override run.seed")
    p.add_argument("--drops", type=int, default=None, help="override run.drops")
    p.add_argument("--threads", type=int, default=1, help="parallel drop workers")
    p = sub.add_parser("validate-config", help="parse and validate a config")
    p.add_argument("--config", required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate-config":
        print("config ok")
        return EXIT_OK

    try:
        if args.command == "pattern":
            return cmd_pattern(cfg, args.out)
        if args.command == "sweep-offset":
            return cmd_sweep_offset(cfg, args.out)
        if args.command == "simulate":
            run = cfg.run
            if args.seed is not None:
                run = dataclasses.replace(run, seed=args.seed)
            if args.drops is not None:
                run = dataclasses.replace(run, drops=args.drops)
            cfg = dataclasses.replace(cfg, run=run)
            try:
                table = load_mcs_table(_resolve_mcs_path(args.config, cfg))
            except (ConfigError, OSError) as e:
                print(f"config error: {e}", file=sys.stderr)
                return EXIT_CONFIG
            return cmd_simulate(cfg, table, args.out, threads=args.threads)
    except Exception as e:  # any drop failure is a runtime error
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
