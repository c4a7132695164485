"""CSV output shared by the command line and the library."""

from __future__ import annotations

import csv
import io

from . import __version__

STATS_COLUMNS = ("index", "Z", "Z_stderr", "K", "H", "Z_hat", "K_hat", "H_hat", "frozen")
TRIAL_COLUMNS = ("trial", "frame_errors", "bit_errors", "decoded_ok")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def header_line(**fields) -> str:
    parts = " ".join(f"{k}={v}" for k, v in fields.items())
    return f"# {parts} version={__version__}"


def render(rows, columns, **meta) -> str:
    buf = io.StringIO()
    buf.write(header_line(**meta) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def stats_rows(stats, frozen_mask=None):
    for j, s in enumerate(stats):
        yield {
            "index": s.index, "Z": float(s.Z), "Z_stderr": float(s.err("Z")), "K": float(s.K),
            "H": float(s.H), "Z_hat": float(s.Z_hat), "K_hat": float(s.K_hat), "H_hat": float(s.H_hat),
            "frozen": int(bool(frozen_mask[j])) if frozen_mask is not None else 0,
        }


def stats_csv(stats, frozen_mask=None, **meta) -> str:
    return render(stats_rows(stats, frozen_mask), STATS_COLUMNS, **meta)


def read_csv(text: str):
    """Parse a report: returns ``(meta, rows)`` with ``meta`` from the comment line."""
    lines = text.splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
        elif line.strip():
            body.append(line)
    rows = list(csv.DictReader(body))
    return meta, rows
