"""One figure per CSV file; axis labels are the CSV column names."""

from typing import Dict, List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

MODE_COLOR = {"baseline": "tab:blue", "squint": "tab:red", "compensated": "tab:green"}
ARRAY_STYLE = ["-", "--", ":", "-."]
FALLBACK = plt.rcParams["axes.prop_cycle"].by_key()["color"]


def _mode_color(mode: str, modes: List[str]) -> str:
    return MODE_COLOR.get(mode, FALLBACK[modes.index(mode) % len(FALLBACK)])


def _uniq(rows, key):
    return sorted({r[key] for r in rows})


def render_cdf_throughput(rows) -> plt.Figure:
    """Per-array panels of throughput CDFs, one line per (mode, offset)."""
    arrays = _uniq(rows, "array")
    modes = _uniq(rows, "mode")
    offsets = _uniq(rows, "delta_f_hz")
    fig, axes = plt.subplots(
        1, len(arrays), figsize=(4.2 * len(arrays), 3.4), sharey=True, squeeze=False
    )
    for ax, arr in zip(axes[0], arrays):
        for mode in modes:
            for df in offsets:
                pts = [
                    (r["throughput_bps"], r["cdf"])
                    for r in rows
                    if r["array"] == arr and r["mode"] == mode and r["delta_f_hz"] == df
                ]
                if not pts:
                    continue
                pts.sort()
                ax.plot(
                    [p[0] for p in pts],
                    [p[1] for p in pts],
                    drawstyle="steps-post",
                    color=_mode_color(mode, modes),
                    alpha=0.35 + 0.65 * (offsets.index(df) + 1) / len(offsets),
                    label=f"{mode} df={df / 1e6:g}M",
                )
        ax.set_title(f"array {arr:g}")
        ax.set_xlabel("throughput_bps")
        ax.grid(True, alpha=0.3)
    axes[0][0].set_ylabel("cdf")
    axes[0][0].legend(fontsize=5, ncol=len(modes))
    fig.tight_layout()
    return fig


def render_percentiles_vs_offset(rows) -> plt.Figure:
    """One panel per percentile column, one line per (mode, array)."""
    cols = ("tput_p10", "tput_p50", "tput_p90", "sinr_p10", "sinr_p50", "sinr_p90")
    modes = _uniq(rows, "mode")
    arrays = _uniq(rows, "array")
    fig, axes = plt.subplots(2, 3, figsize=(12.0, 6.4), squeeze=False)
    for ax, col in zip(axes.ravel(), cols):
        for mode in modes:
            for arr in arrays:
                pts = sorted(
                    (r["delta_f_hz"], r[col])
                    for r in rows
                    if r["mode"] == mode and r["array"] == arr
                )
                ax.plot(
                    [p[0] for p in pts],
                    [p[1] for p in pts],
                    color=_mode_color(mode, modes),
                    linestyle=ARRAY_STYLE[arrays.index(arr) % len(ARRAY_STYLE)],
                    marker="o",
                    markersize=2.5,
                    label=f"{mode} {arr:g}el",
                )
        ax.set_xlabel("delta_f_hz")
        ax.set_ylabel(col)
        ax.grid(True, alpha=0.3)
    axes[0][0].legend(fontsize=5, ncol=len(modes))
    fig.tight_layout()
    return fig


def render_mcs_hist(rows) -> plt.Figure:
    """Grid of per-cell MCS share bars, NACK as the last category."""
    arrays = _uniq(rows, "array")
    offsets = _uniq(rows, "delta_f_hz")
    modes = _uniq(rows, "mode")
    cats = sorted({str(r["mcs"]) for r in rows}, key=lambda c: (c == "nack", len(c), c))
    fig, axes = plt.subplots(
        len(arrays),
        len(offsets),
        figsize=(3.2 * len(offsets), 2.4 * len(arrays)),
        sharex=True,
        sharey=True,
        squeeze=False,
    )
    width = 0.8 / len(modes)
    for i, arr in enumerate(arrays):
        for j, df in enumerate(offsets):
            ax = axes[i][j]
            for m, mode in enumerate(modes):
                share = {
                    str(r["mcs"]): r["share"]
                    for r in rows
                    if r["array"] == arr and r["delta_f_hz"] == df and r["mode"] == mode
                }
                xs = [k + (m - (len(modes) - 1) / 2) * width for k in range(len(cats))]
                ax.bar(
                    xs,
                    [share.get(c, 0.0) for c in cats],
                    width=width,
                    color=_mode_color(mode, modes),
                    label=mode if (i, j) == (0, 0) else None,
                )
            if i == 0:
                ax.set_title(f"df={df / 1e6:g}M", fontsize=8)
            if j == 0:
                ax.set_ylabel(f"array {arr:g}\nshare", fontsize=8)
            if i == len(arrays) - 1:
                ax.set_xlabel("mcs")
            ticks = list(range(0, len(cats), 4))
            if len(cats) - 1 not in ticks:
                ticks.append(len(cats) - 1)
            ax.set_xticks(ticks)
            ax.set_xticklabels([cats[t] for t in ticks], fontsize=7)
    axes[0][0].legend(fontsize=6)
    fig.tight_layout()
    return fig


def render_pattern(rows, title: str) -> plt.Figure:
    """Gain versus angle, one trace per (frequency, compensation flag)."""
    freqs = _uniq(rows, "freq_hz")
    fig, ax = plt.subplots(figsize=(7.2, 4.2))
    for f in freqs:
        for comp, style in ((0.0, "--"), (1.0, "-")):
            pts = sorted(
                (r["angle_deg"], r["gain_db"])
                for r in rows
                if r["freq_hz"] == f and r["compensated"] == comp
            )
            if not pts:
                continue
            ax.plot(
                [p[0] for p in pts],
                [p[1] for p in pts],
                style,
                color=FALLBACK[freqs.index(f) % len(FALLBACK)],
                linewidth=0.9,
                label=f"{f / 1e9:g} GHz {'comp' if comp else 'raw'}",
            )
    ax.set_xlabel("angle_deg")
    ax.set_ylabel("gain_db")
    ax.set_ylim(bottom=max(-40.0, min(r["gain_db"] for r in rows)))
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=6)
    fig.tight_layout()
    return fig


def render_sweep_offset(rows) -> plt.Figure:
    """Gain at the design-frequency peak versus offset, per beam."""
    beams = _uniq(rows, "beam_deg")
    fig, ax = plt.subplots(figsize=(7.2, 4.2))
    for b in beams:
        for comp, style in ((0.0, "--"), (1.0, "-")):
            pts = sorted(
                (r["delta_f_hz"], r["gain_db"])
                for r in rows
                if r["beam_deg"] == b and r["compensated"] == comp
            )
            if not pts:
                continue
            ax.plot(
                [p[0] for p in pts],
                [p[1] for p in pts],
                style,
                color=FALLBACK[beams.index(b) % len(FALLBACK)],
                label=f"beam {b:g} deg {'comp' if comp else 'raw'}",
            )
    ax.set_xlabel("delta_f_hz")
    ax.set_ylabel("gain_db")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=6)
    fig.tight_layout()
    return fig


def render_all(inputs: Dict[str, list]) -> Dict[str, plt.Figure]:
    """Figure per input file, keyed by output filename."""
    out: Dict[str, plt.Figure] = {}
    for name, rows in sorted(inputs.items()):
        stem = name.rsplit(".", 1)[0]
        if name == "cdf_throughput.csv":
            out[stem + ".pdf"] = render_cdf_throughput(rows)
        elif name == "percentiles_vs_offset.csv":
            out[stem + ".pdf"] = render_percentiles_vs_offset(rows)
        elif name == "mcs_hist.csv":
            out[stem + ".pdf"] = render_mcs_hist(rows)
        elif name == "sweep_offset.csv":
            out[stem + ".pdf"] = render_sweep_offset(rows)
        elif name.startswith("pattern_beam"):
            out[stem + ".pdf"] = render_pattern(rows, stem)
    return out
