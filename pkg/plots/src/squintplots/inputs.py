"""CSV loading against the simulator's documented output schemas.

Every problem is reported as an InputError naming the file and the expected
columns, so a typo in a hand-edited results directory fails loudly instead
of producing a half-rendered figure set.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple


class InputError(Exception):
    pass


@dataclass(frozen=True)
class Schema:
    columns: Tuple[str, ...]
    numeric: Tuple[str, ...]

    def expected(self) -> str:
        return "expected columns: " + ", ".join(self.columns)


# required: always produced by a simulate run
SCHEMAS: Dict[str, Schema] = {
    "cdf_throughput.csv": Schema(
        ("mode", "delta_f_hz", "array", "throughput_bps", "cdf"),
        ("delta_f_hz", "array", "throughput_bps", "cdf"),
    ),
    "percentiles_vs_offset.csv": Schema(
        (
            "delta_f_hz",
            "mode",
            "array",
            "tput_p10",
            "tput_p50",
            "tput_p90",
            "sinr_p10",
            "sinr_p50",
            "sinr_p90",
        ),
        (
            "delta_f_hz",
            "array",
            "tput_p10",
            "tput_p50",
            "tput_p90",
            "sinr_p10",
            "sinr_p50",
            "sinr_p90",
        ),
    ),
    "mcs_hist.csv": Schema(
        ("mode", "delta_f_hz", "array", "mcs", "share"),
        ("delta_f_hz", "array", "share"),
    ),
}

# optional: present only when the pattern / sweep commands were run
PATTERN_SCHEMA = Schema(
    ("freq_hz", "compensated", "angle_deg", "gain_db"),
    ("freq_hz", "compensated", "angle_deg", "gain_db"),
)
SWEEP_SCHEMA = Schema(
    ("beam_deg", "delta_f_hz", "compensated", "gain_db"),
    ("beam_deg", "delta_f_hz", "compensated", "gain_db"),
)

Rows = List[Dict[str, object]]


def read_rows(path: Path, schema: Schema) -> Rows:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = tuple(reader.fieldnames or ())
        if header != schema.columns:
            raise InputError(
                f"{path.name}: unexpected header {list(header)}; {schema.expected()}"
            )
        rows: Rows = []
        for i, raw in enumerate(reader, start=2):
            row: Dict[str, object] = dict(raw)
            for col in schema.numeric:
                try:
                    row[col] = float(raw[col])
                except (TypeError, ValueError):
                    raise InputError(
                        f"{path.name}: line {i}: non-numeric value {raw[col]!r} "
                        f"in column {col}; {schema.expected()}"
                    )
            rows.append(row)
    if not rows:
        raise InputError(f"{path.name}: no data rows; {schema.expected()}")
    return rows


def load_inputs(in_dir: Path) -> Dict[str, Rows]:
    """Parse and validate every known CSV in in_dir.

    All required files must parse before anything is rendered; optional
    pattern/sweep files are validated only when present.
    """
    if not in_dir.is_dir():
        raise InputError(f"{in_dir}: not a directory")
    missing = [name for name in SCHEMAS if not (in_dir / name).is_file()]
    if missing:
        raise InputError(
            "; ".join(
                f"missing required input {name}: {SCHEMAS[name].expected()}"
                for name in missing
            )
        )
    out: Dict[str, Rows] = {}
    for name, schema in SCHEMAS.items():
        out[name] = read_rows(in_dir / name, schema)
    for path in sorted(in_dir.glob("pattern_beam*.csv")):
        out[path.name] = read_rows(path, PATTERN_SCHEMA)
    sweep = in_dir / "sweep_offset.csv"
    if sweep.is_file():
        out[sweep.name] = read_rows(sweep, SWEEP_SCHEMA)
    return out
