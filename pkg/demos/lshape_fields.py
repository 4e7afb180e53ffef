"""Corner-singular flow on the L-shape through the command line.

Runs one level and writes the report plus the nodal field CSV to
``demos/out``.
"""
from pathlib import Path

from stokes_fdm.cli import main

OUT = Path(__file__).parent / "out"

if __name__ == "__main__":
    raise SystemExit(main(["run", "--example", "3", "--level", "5", "--no-kappa", "--format", "csv,md",
                           "--out", str(OUT), "--dump-fields", str(OUT)]))
