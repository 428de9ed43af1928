import pytest

from squintplots.cli import main
from squintplots.inputs import InputError, SCHEMAS, load_inputs
from squintplots.render import (
    render_cdf_throughput,
    render_mcs_hist,
    render_pattern,
    render_percentiles_vs_offset,
    render_sweep_offset,
)

MODES = ("baseline", "squint", "compensated")
OFFSETS = (0.0, 100e6, 500e6, 1e9)
ARRAYS = (64, 128)


def write_inputs(d, with_optional=False):
    lines = ["mode,delta_f_hz,array,throughput_bps,cdf"]
    for mode in MODES:
        for df in OFFSETS:
            for arr in ARRAYS:
                for i, t in enumerate((1e6, 2e6, 3e6, 4e6)):
                    lines.append(f"{mode},{df:g},{arr},{t:g},{(i + 1) / 4}")
    (d / "cdf_throughput.csv").write_text("\n".join(lines) + "\n")

    lines = [
        "delta_f_hz,mode,array,tput_p10,tput_p50,tput_p90,sinr_p10,sinr_p50,sinr_p90"
    ]
    for df in OFFSETS:
        for mode in MODES:
            for arr in ARRAYS:
                lines.append(
                    f"{df:g},{mode},{arr},1e6,2e6,3e6,10.0,15.0,20.0"
                )
    (d / "percentiles_vs_offset.csv").write_text("\n".join(lines) + "\n")

    lines = ["mode,delta_f_hz,array,mcs,share"]
    for mode in MODES:
        for df in OFFSETS:
            for arr in ARRAYS:
                for mcs in [str(i) for i in range(15)] + ["nack"]:
                    lines.append(f"{mode},{df:g},{arr},{mcs},{1 / 16}")
    (d / "mcs_hist.csv").write_text("\n".join(lines) + "\n")

    if with_optional:
        lines = ["freq_hz,compensated,angle_deg,gain_db"]
        for f in (27.5e9, 28e9):
            for comp in (0, 1):
                for a in (-10.0, 0.0, 10.0):
                    lines.append(f"{f:g},{comp},{a},{-abs(a):g}")
        (d / "pattern_beam15.csv").write_text("\n".join(lines) + "\n")

        lines = ["beam_deg,delta_f_hz,compensated,gain_db"]
        for b in (15.0, 35.0):
            for df in (-1e9, 0.0, 1e9):
                for comp in (0, 1):
                    lines.append(f"{b},{df:g},{comp},{-abs(df) / 1e9:g}")
        (d / "sweep_offset.csv").write_text("\n".join(lines) + "\n")


@pytest.fixture()
def results(tmp_path):
    d = tmp_path / "results"
    d.mkdir()
    write_inputs(d)
    return d


class TestCli:
    def test_renders_one_figure_per_family(self, results, tmp_path):
        figs = tmp_path / "figs"
        assert main(["--in", str(results), "--out", str(figs)]) == 0
        names = sorted(p.name for p in figs.iterdir())
        assert names == [
            "cdf_throughput.pdf",
            "mcs_hist.pdf",
            "percentiles_vs_offset.pdf",
        ]
        for p in figs.iterdir():
            assert p.read_bytes()[:5] == b"%PDF-"

    def test_optional_families_render_when_present(self, results, tmp_path):
        write_inputs(results, with_optional=True)
        figs = tmp_path / "figs"
        assert main(["--in", str(results), "--out", str(figs)]) == 0
        names = {p.name for p in figs.iterdir()}
        assert "pattern_beam15.pdf" in names and "sweep_offset.pdf" in names
        assert len(names) == 5

    def test_deterministic_output(self, results, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["--in", str(results), "--out", str(a)]) == 0
        assert main(["--in", str(results), "--out", str(b)]) == 0
        for p in a.iterdir():
            assert p.read_bytes() == (b / p.name).read_bytes()

    def test_missing_required_input(self, results, tmp_path, capsys):
        (results / "cdf_throughput.csv").unlink()
        figs = tmp_path / "figs"
        assert main(["--in", str(results), "--out", str(figs)]) == 2
        err = capsys.readouterr().err
        assert "cdf_throughput.csv" in err
        assert "expected columns: mode, delta_f_hz, array, throughput_bps, cdf" in err
        assert not figs.exists()

    def test_empty_directory(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        figs = tmp_path / "figs"
        assert main(["--in", str(empty), "--out", str(figs)]) == 2
        err = capsys.readouterr().err
        for name in SCHEMAS:
            assert name in err
        assert not figs.exists()

    def test_wrong_header(self, results, tmp_path, capsys):
        path = results / "mcs_hist.csv"
        body = path.read_text().splitlines()
        body[0] = "mode,delta_f_hz,array,mcs_index,share"
        path.write_text("\n".join(body) + "\n")
        assert main(["--in", str(results), "--out", str(tmp_path / "f")]) == 2
        err = capsys.readouterr().err
        assert "mcs_hist.csv" in err and "expected columns" in err

    def test_non_numeric_cell(self, results, tmp_path, capsys):
        path = results / "percentiles_vs_offset.csv"
        body = path.read_text().splitlines()
        body[1] = body[1].replace("1e6", "fast", 1)
        path.write_text("\n".join(body) + "\n")
        assert main(["--in", str(results), "--out", str(tmp_path / "f")]) == 2
        err = capsys.readouterr().err
        assert "line 2" in err and "'fast'" in err and "tput_p10" in err

    def test_missing_in_dir(self, tmp_path, capsys):
        assert main(["--in", str(tmp_path / "nope"), "--out", str(tmp_path / "f")]) == 2
        assert "not a directory" in capsys.readouterr().err


class TestLoadInputs:
    def test_row_count_and_coercion(self, results):
        inputs = load_inputs(results)
        assert set(inputs) == set(SCHEMAS)
        row = inputs["percentiles_vs_offset.csv"][0]
        assert isinstance(row["tput_p10"], float) and isinstance(row["mode"], str)

    def test_empty_data_rows(self, results):
        (results / "mcs_hist.csv").write_text("mode,delta_f_hz,array,mcs,share\n")
        with pytest.raises(InputError, match="no data rows"):
            load_inputs(results)

    def test_malformed_optional_is_still_an_error(self, results):
        (results / "sweep_offset.csv").write_text("beam,df\n1,2\n")
        with pytest.raises(InputError, match="sweep_offset.csv"):
            load_inputs(results)


class TestAxisLabels:
    """Axis labels come from the CSV column names."""

    def test_labels(self, results):
        inputs = load_inputs(results)
        fig = render_cdf_throughput(inputs["cdf_throughput.csv"])
        ax = fig.axes[0]
        assert ax.get_xlabel() == "throughput_bps" and ax.get_ylabel() == "cdf"

        fig = render_percentiles_vs_offset(inputs["percentiles_vs_offset.csv"])
        labels = {(a.get_xlabel(), a.get_ylabel()) for a in fig.axes}
        assert ("delta_f_hz", "tput_p50") in labels
        assert ("delta_f_hz", "sinr_p90") in labels

        fig = render_mcs_hist(inputs["mcs_hist.csv"])
        assert any(a.get_xlabel() == "mcs" for a in fig.axes)
        assert any("share" in a.get_ylabel() for a in fig.axes)

    def test_pattern_and_sweep_labels(self, results):
        write_inputs(results, with_optional=True)
        inputs = load_inputs(results)
        fig = render_pattern(inputs["pattern_beam15.csv"], "pattern_beam15")
        assert fig.axes[0].get_xlabel() == "angle_deg"
        assert fig.axes[0].get_ylabel() == "gain_db"

        fig = render_sweep_offset(inputs["sweep_offset.csv"])
        assert fig.axes[0].get_xlabel() == "delta_f_hz"
        assert fig.axes[0].get_ylabel() == "gain_db"
