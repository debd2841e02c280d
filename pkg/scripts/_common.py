"""Shared CSV output for the experiment scripts."""

import argparse
import csv
import sys
from pathlib import Path


def parser(doc: str, default_name: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=doc.strip().splitlines()[0])
    p.add_argument("--out", default=f"results/{default_name}", help="CSV destination, '-' for stdout")
    p.add_argument("--threads", type=int, default=1)
    return p


def write_rows(rows: list, out: str):
    if not rows:
        raise SystemExit("no rows produced")
    fields = list(rows[0])
    if out == "-":
        fh = sys.stdout
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        fh = open(out, "w", newline="")
    try:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    finally:
        if fh is not sys.stdout:
            fh.close()
    if out != "-":
        print(f"wrote {len(rows)} rows to {out}", file=sys.stderr)
