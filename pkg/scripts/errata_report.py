"""Run the closed-form verification on the default grid and write the ledger and errata summary."""

import argparse
from pathlib import Path

from ctrlgeom.verify import default_grid, errata_markdown, ledger_csv, verify


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="errata_out")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    records = verify(default_grid(), args.workers)
    (out / "ledger.csv").write_text(ledger_csv(records))
    md = errata_markdown(records)
    (out / "errata.md").write_text(md)
    print(md)


if __name__ == "__main__":
    main()
