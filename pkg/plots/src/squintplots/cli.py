"""plot_all: render every known CSV in a results directory to PDF.

Validation happens before any file is written, so a broken input directory
produces a named schema error and no partial figure set.
"""

import argparse
import sys
from pathlib import Path

import matplotlib.pyplot as plt

from .inputs import InputError, load_inputs
from .render import render_all


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot_all",
        description="Render figures from simulator CSV outputs.",
    )
    parser.add_argument("--in", dest="in_dir", required=True, help="CSV directory")
    parser.add_argument("--out", dest="out_dir", required=True, help="figure directory")
    args = parser.parse_args(argv)

    try:
        inputs = load_inputs(Path(args.in_dir))
    except InputError as e:
        print(f"plot_all: {e}", file=sys.stderr)
        return 2

    figures = render_all(inputs)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, fig in figures.items():
        # CreationDate would otherwise make identical runs differ
        fig.savefig(out_dir / name, metadata={"CreationDate": None})
        plt.close(fig)
        print(f"wrote {out_dir / name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
