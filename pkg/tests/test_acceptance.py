"""Release gate: one test per shipped guarantee, link level first, then the
full desk matrix. Run with -v to get a pass/fail line per criterion.

Link-level numbers are checked against the published reference figures for a
256-element array at 28 GHz. System-level checks run the desk scenario matrix
once into a session tmp dir and read only its CSV outputs, the same files the
plotting package consumes.
"""

import csv
import shutil
import subprocess
import time
from pathlib import Path

import numpy as np
import pytest

from beamsquint.channel import PathLossModel, path_loss, path_loss_delta
from beamsquint.cli import main
from beamsquint.config import load_mcs_table
from beamsquint.geometry import Direction, ula_geometry, ura_geometry
from beamsquint.patterns import (
    SECTOR,
    conjugate_steering,
    dft_codebook,
    find_peak,
    gain_db,
    ula_beam_sines,
)
from beamsquint.ran import OllaState, link_adapt, olla_update, transmit
from beamsquint.squint import (
    FrequencyPlan,
    apply_compensation,
    compensation_vector,
    disambiguate_peak,
    find_all_main_directions,
    predict_squint,
)

REPO = Path(__file__).resolve().parents[1]
DESK = REPO / "configs" / "desk.yaml"
F1 = 28e9


def _beam_near(sines: np.ndarray, target_deg: float) -> int:
    return int(np.argmin(np.abs(sines - np.sin(np.radians(target_deg)))))


def _endfire_adjacent(sines: np.ndarray) -> int:
    """Entry with the largest sine that still has a unique main lobe."""
    ks = [k for k, s in enumerate(sines) if 0.0 < s < 1.0]
    return max(ks, key=lambda k: sines[k])


def _first_local_min(g: np.ndarray, start: int, stepdir: int):
    j = start + stepdir
    while 0 < j < len(g) - 1:
        if g[j] < g[j - 1] and g[j] < g[j + 1]:
            return j
        j += stepdir
    return None


def _percentile_rows(matrix_dir: Path):
    with open(matrix_dir / "percentiles_vs_offset.csv") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="session")
def desk_matrix(tmp_path_factory):
    """One full desk-matrix run; returns (output dir, wall seconds)."""
    out = tmp_path_factory.mktemp("desk") / "matrix"
    t0 = time.monotonic()
    rc = main(["simulate", "--config", str(DESK), "--out", str(out)])
    elapsed = time.monotonic() - t0
    assert rc == 0
    return out, elapsed


def test_01_peak_shift_256ula():
    t0 = time.monotonic()
    geom = ula_geometry(256, F1)
    cb = dft_codebook(256)
    sines = ula_beam_sines(256)
    failures = []

    k = _beam_near(sines, 15.0)
    p1 = find_peak(geom, SECTOR, cb[k], F1).azimuth_deg
    p2 = find_peak(geom, SECTOR, cb[k], F1 + 1e9).azimuth_deg
    shift = p1 - p2
    if abs(shift - 0.57) > 0.1:
        failures.append(f"boresight-adjacent shift {shift:.4f} outside 0.57 +/- 0.1")

    k = _endfire_adjacent(sines)
    p1 = find_peak(geom, SECTOR, cb[k], F1).azimuth_deg
    p2 = find_peak(geom, SECTOR, cb[k], F1 + 1e9).azimuth_deg
    shift = p1 - p2
    if abs(shift - 5.34) > 0.3:
        failures.append(
            f"endfire-adjacent (sine {sines[k]:.4f}, {p1:.2f} deg) shift "
            f"{shift:.4f} outside 5.34 +/- 0.3"
        )

    elapsed = time.monotonic() - t0
    assert elapsed < 10.0, f"took {elapsed:.1f} s"
    assert not failures, "; ".join(failures)


def test_02_hpbw_endfire_beam():
    geom = ula_geometry(256, F1)
    sines = ula_beam_sines(256)
    w = dft_codebook(256)[_endfire_adjacent(sines)]
    failures = []
    for freq, expected in ((28e9, 1.33), (29e9, 1.11), (27e9, 1.99)):
        pk = find_peak(geom, SECTOR, w, freq).azimuth_deg
        g0 = float(gain_db(geom, SECTOR, w, freq, pk, 90.0))
        az = np.arange(pk - 6.0, min(pk + 6.0, 90.0), 0.001)
        g = np.asarray(gain_db(geom, SECTOR, w, freq, az, 90.0))
        above = g >= g0 - 3.0
        i = int(np.argmin(np.abs(az - pk)))
        lo, hi = i, i
        while lo > 0 and above[lo - 1]:
            lo -= 1
        while hi < len(az) - 1 and above[hi + 1]:
            hi += 1
        width = az[hi] - az[lo]
        if abs(width - expected) > 0.15:
            failures.append(
                f"{freq / 1e9:g} GHz: hpbw {width:.4f} outside {expected} +/- 0.15"
            )
    assert not failures, "; ".join(failures)


def test_03_first_order_shift_vs_brute_force():
    geom = ula_geometry(256, F1)
    worst = 0.0
    for theta in (5.0, 15.0, 25.0, 35.0):
        w = conjugate_steering(geom, F1, Direction(theta, 90.0)) / 16.0
        for df in (-500e6, -250e6, 250e6, 500e6):
            predicted = predict_squint(theta, F1, df)
            measured = find_peak(geom, SECTOR, w, F1 + df).azimuth_deg - theta
            worst = max(worst, abs(predicted - measured))
    assert worst <= 0.1, f"worst prediction error {worst:.4f} deg"


def _check_lobe_restoration(geom, w, angles, deltas, u_star_builder):
    """Compare the compensated lobe at f1+df against the f1 lobe on a fixed
    angle grid: peak angle, peak gain, first null either side.

    Returns a list of (df, peak_err_deg, gain_err_db, null_err_deg)."""
    g1 = np.asarray(gain_db(geom, SECTOR, w, F1, *angles))
    i1 = int(np.argmax(g1))
    out = []
    for df in deltas:
        comp = compensation_vector(geom, FrequencyPlan(F1, df), u_star_builder(i1))
        wc = apply_compensation(w, comp)
        g2 = np.asarray(gain_db(geom, SECTOR, wc, F1 + df, *angles))
        i2 = int(np.argmax(g2))
        axis = angles[0] if np.ndim(angles[0]) else angles[1]
        peak_err = abs(axis[i2] - axis[i1])
        gain_err = abs(g2[i2] - g1[i1])
        null_err = 0.0
        for stepdir in (-1, 1):
            j1 = _first_local_min(g1, i1, stepdir)
            j2 = _first_local_min(g2, i2, stepdir)
            if j1 is not None and j2 is not None:
                null_err = max(null_err, abs(axis[j2] - axis[j1]))
        out.append((df, peak_err, gain_err, null_err))
    return out


def test_04_compensation_restores_lobe():
    deltas = (-1e9, -500e6, -100e6, 100e6, 500e6, 1e9)
    t0 = time.monotonic()
    violations = []
    checked = 0

    for n in (64, 128, 256):
        geom = ula_geometry(n, F1)
        cb = dft_codebook(n)
        sines = ula_beam_sines(n)
        for k, s in enumerate(sines):
            if abs(s) >= 1.0:
                continue  # endfire pair, handled by the disambiguation test
            du = 2.0 / n
            ugrid = np.linspace(s - 3 * du, s + 3 * du, 4001)
            ugrid = ugrid[np.abs(ugrid) < 0.999999]
            ang = np.degrees(np.arcsin(ugrid))
            res = _check_lobe_restoration(
                geom, cb[k], (ang, 90.0), deltas,
                lambda i, a=ang: Direction(a[i], 90.0),
            )
            for df, dpk, dg, dnull in res:
                checked += 1
                if dpk > 0.05 or dg > 0.1 or dnull > 0.1:
                    violations.append((f"ula{n} entry {k}", df, dpk, dg, dnull))

    # one representative planar beam, azimuth and zenith cuts
    geom = ura_geometry(32, 32, F1)
    w = np.kron(dft_codebook(32)[9], dft_codebook(32)[2])
    az0 = float(np.degrees(np.arcsin((18 / 32) / np.sin(np.arccos(4 / 32)))))
    zen0 = float(np.degrees(np.arccos(4 / 32)))
    az_cut = np.arange(az0 - 6.0, az0 + 6.0, 0.002)
    zen_cut = np.arange(zen0 - 6.0, zen0 + 6.0, 0.002)
    for cut, angles in (("az", (az_cut, zen0)), ("zen", (az0, zen_cut))):
        res = _check_lobe_restoration(
            geom, w, angles, deltas,
            lambda i, c=cut, a=angles: Direction(a[0][i], zen0)
            if c == "az"
            else Direction(az0, a[1][i]),
        )
        for df, dpk, dg, dnull in res:
            checked += 1
            if dpk > 0.05 or dg > 0.1 or dnull > 0.1:
                violations.append((f"ura32x32 {cut} cut", df, dpk, dg, dnull))

    elapsed = time.monotonic() - t0
    assert elapsed < 300.0, f"took {elapsed:.0f} s"
    if violations:
        worst = max(violations, key=lambda v: v[4])
        pytest.fail(
            f"{len(violations)} of {checked} (beam, offset) checks violate "
            f"peak<=0.05 deg / gain<=0.1 dB / nulls<=0.1 deg; worst null error "
            f"{worst[4]:.3f} deg at {worst[0]}, df {worst[1] / 1e6:+.0f} MHz"
        )


def test_05_subband_pathloss_delta():
    delta = path_loss_delta(20.0, F1, 1e9)
    assert abs(delta - 0.3048) <= 0.001, f"delta {delta:.6f}"

    model = PathLossModel(28.0, 22.0, 20.0)
    rng = np.random.default_rng(5)
    for _ in range(100):
        d = rng.uniform(5.0, 500.0)
        f = rng.uniform(24e9, 30e9)
        df = rng.uniform(0.0, 2e9)
        lhs = path_loss_delta(model.c, f, df)
        rhs = path_loss(model, d, f + df) - path_loss(model, d, f)
        # identical up to log-subtraction roundoff
        assert abs(lhs - rhs) < 1e-9


def test_06_endfire_disambiguation():
    geom = ula_geometry(64, F1)
    sines = ula_beam_sines(64)
    k = int(np.argmin(np.abs(sines - 1.0)))
    w = dft_codebook(64)[k]

    mains = find_all_main_directions(geom, SECTOR, w, F1, threshold_db=3.0)
    assert len(mains) == 2, f"expected a mirror pair, got {mains}"
    assert mains[0].azimuth_deg == pytest.approx(-mains[1].azimuth_deg, abs=0.01)

    served = disambiguate_peak(mains, Direction(80.0, 90.0))
    assert served.azimuth_deg > 0
    mirror = next(m for m in mains if m is not served)

    df = 1e9
    comp = compensation_vector(geom, FrequencyPlan(F1, df), served)
    wc = apply_compensation(w, comp)

    g1 = float(gain_db(geom, SECTOR, w, F1, served.azimuth_deg, 90.0))
    raw = float(gain_db(geom, SECTOR, w, F1 + df, served.azimuth_deg, 90.0))
    restored = float(gain_db(geom, SECTOR, wc, F1 + df, served.azimuth_deg, 90.0))
    leak = float(gain_db(geom, SECTOR, wc, F1 + df, mirror.azimuth_deg, 90.0))
    g1_mirror = float(gain_db(geom, SECTOR, w, F1, mirror.azimuth_deg, 90.0))

    assert g1 - raw > 3.0, "squint did not break the uncorrected endfire beam"
    assert abs(restored - g1) <= 0.5, f"served side {restored:.2f} vs f1 {g1:.2f}"
    assert g1_mirror - leak >= 10.0, f"mirror side restored too: {leak:.2f} dB"


def test_07_zero_offset_mode_equivalence(desk_matrix):
    out, _ = desk_matrix
    for n in (64, 128, 256):
        summaries = [
            (out / "runs" / f"{mode}_df0_ula{n}" / "summary.csv").read_bytes()
            for mode in ("baseline", "squint", "compensated")
        ]
        assert summaries[0] == summaries[1] == summaries[2], f"ula{n} differs"


def test_08_monotone_sinr_degradation(desk_matrix):
    out, _ = desk_matrix
    rows = _percentile_rows(out)
    offsets = [0.0, 100e6, 500e6, 1e9]
    degradation = {}
    for n in (64, 128, 256):
        p10 = {
            float(r["delta_f_hz"]): float(r["sinr_p10"])
            for r in rows
            if r["mode"] == "squint" and int(r["array"]) == n
        }
        series = [p10[d] for d in offsets]
        assert all(
            a >= b for a, b in zip(series, series[1:])
        ), f"ula{n} 10th percentile SINR not non-increasing: {series}"
        degradation[n] = series[0] - series[-1]
    assert degradation[256] > degradation[64], (
        f"1 GHz degradation: 256 el {degradation[256]:.2f} dB "
        f"vs 64 el {degradation[64]:.2f} dB"
    )


def test_09_compensation_matches_baseline_throughput(desk_matrix):
    out, _ = desk_matrix
    rows = _percentile_rows(out)
    by_cell = {(r["mode"], r["delta_f_hz"], r["array"]): r for r in rows}
    worst = 0.0
    for (mode, df, arr), row in by_cell.items():
        if mode != "compensated":
            continue
        base = by_cell[("baseline", df, arr)]
        for col in ("tput_p10", "tput_p50", "tput_p90"):
            b, c = float(base[col]), float(row[col])
            rel = abs(c - b) / b
            worst = max(worst, rel)
            assert rel <= 0.05, f"df {df} ula{arr} {col}: {c} vs baseline {b}"
    assert worst <= 0.05


def test_10_nack_overshoot(desk_matrix):
    out, _ = desk_matrix
    with open(out / "mcs_hist.csv") as fh:
        rows = list(csv.DictReader(fh))
    nack = {
        (r["mode"], float(r["delta_f_hz"]), int(r["array"])): float(r["share"])
        for r in rows
        if r["mcs"] == "nack"
    }
    for df in (500e6, 1e9):
        assert nack[("squint", df, 256)] > 0.10, (
            f"squint nack at {df / 1e6:.0f} MHz: {nack[('squint', df, 256)]:.3f}"
        )
        assert nack[("compensated", df, 256)] <= 0.11
    worst_comp = max(v for k, v in nack.items() if k[0] == "compensated")
    assert worst_comp <= 0.11, f"compensated nack up to {worst_comp:.3f}"


def test_11_olla_equilibrium():
    table = load_mcs_table(REPO / "configs" / "mcs_table.csv")
    olla = OllaState(step_ack_db=0.1, step_nack_db=1.0)
    sinr = 10.9  # strictly between two ladder thresholds
    n = 100_000
    nacks = 0
    for _ in range(n):
        mcs = link_adapt(sinr, olla, table)
        ack, _ = transmit(mcs, sinr, table)
        olla = olla_update(olla, ack)
        nacks += not ack
    assert abs(nacks / n - 1 / 11) <= 0.02, f"nack fraction {nacks / n:.4f}"


def test_12_matrix_determinism_and_runtime(desk_matrix, tmp_path):
    first, elapsed_first = desk_matrix
    out = tmp_path / "again"
    t0 = time.monotonic()
    rc = main(["simulate", "--config", str(DESK), "--out", str(out)])
    elapsed = time.monotonic() - t0
    assert rc == 0
    assert elapsed_first < 900.0 and elapsed < 900.0, (
        f"matrix took {elapsed_first:.0f} s / {elapsed:.0f} s"
    )

    first_files = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
    again_files = sorted(p.relative_to(out) for p in out.rglob("*") if p.is_file())
    assert first_files == again_files
    for rel in first_files:
        assert (first / rel).read_bytes() == (out / rel).read_bytes(), f"{rel} differs"


def test_13_plots_over_matrix_output(desk_matrix, tmp_path):
    if shutil.which("plot_all") is None:
        pytest.skip("plotting package not installed")
    out, _ = desk_matrix

    figs = tmp_path / "figs"
    r = subprocess.run(
        ["plot_all", "--in", str(out), "--out", str(figs)],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0, r.stderr
    for stem in ("cdf_throughput", "percentiles_vs_offset", "mcs_hist"):
        assert list(figs.glob(f"{stem}.*")), f"no figure for {stem}"

    # dropping a required input fails loudly and writes nothing
    partial = tmp_path / "partial"
    shutil.copytree(out, partial)
    (partial / "cdf_throughput.csv").unlink()
    figs2 = tmp_path / "figs2"
    r = subprocess.run(
        ["plot_all", "--in", str(partial), "--out", str(figs2)],
        capture_output=True,
        text=True,
    )
    assert r.returncode != 0
    assert "cdf_throughput.csv" in r.stderr
    assert not figs2.exists() or not any(figs2.iterdir())
