"""Atomic text output and the versioned CSV header convention."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

CSV_VERSION = 1


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_csv(kind: str, header: list, rows, meta: dict | None = None) -> str:
    """CSV text whose first line is ``# rbas <kind> v<N>``, then ``# key=value`` lines."""
    buf = io.StringIO()
    buf.write(f"# rbas {kind} v{CSV_VERSION}\n")
    for key, val in (meta or {}).items():
        buf.write(f"# {key}={val}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def read_csv(path):
    """Return ``(meta, header, rows)`` of a file written by :func:`render_csv`."""
    meta, body = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, sep, val = line[1:].strip().partition("=")
                if sep:
                    meta[key.strip()] = val.strip()
                else:
                    meta["schema"] = key.strip()
            else:
                body.append(line)
    rows = list(csv.reader(body))
    return meta, rows[0], rows[1:]
