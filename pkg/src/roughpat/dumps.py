"""Grid dumps (delimited text with a '#' header), convergence tables and
PNG heatmaps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import DumpFormatError

REQUIRED_HEADER = ("nX", "nY", "L")


def _format_value(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return "[" + ";".join(_format_value(x) for x in v) + "]"
    s = str(v)
    if any(c in s for c in "\n="):
        raise DumpFormatError(f"header value {s!r} contains a newline or '='")
    return s


def _parse_value(s):
    s = s.strip()
    if s.startswith("[") and s.endswith("]"):
        inner = s[1:-1]
        return tuple(_parse_value(x) for x in inner.split(";")) if inner else ()
    if s in ("true", "false"):
        return s == "true"
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


@dataclass
class GridDump:
    header: dict
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    field: str = "z"
    extra: dict = dc_field(default_factory=dict)  # additional named columns

    @property
    def nx(self):
        return int(self.header["nX"])

    @property
    def ny(self):
        return int(self.header["nY"])

    def as_2d(self):
        return np.asarray(self.values).reshape(self.ny, self.nx)

    def __eq__(self, other):
        if not isinstance(other, GridDump):
            return NotImplemented
        return (
            self.header == other.header
            and self.field == other.field
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.values, other.values)
            and self.extra.keys() == other.extra.keys()
            and all(np.array_equal(self.extra[k], other.extra[k]) for k in self.extra)
        )


def make_dump(grid, values, field_name="z", **header):
    h = {"nX": grid.nx, "nY": grid.ny, "L": grid.L, "field": field_name}
    h.update(header)
    return GridDump(h, grid.X.copy(), grid.Y.copy(), np.asarray(values, dtype=float).ravel(), field_name)


def write_dump(dump, path):
    path = Path(path)
    n = dump.nx * dump.ny
    if len(dump.values) != n:
        raise DumpFormatError(f"dump has {len(dump.values)} values, expected nX*nY = {n}")
    cols = ["x", "y", dump.field, *dump.extra]
    arrays = [dump.x, dump.y, dump.values, *dump.extra.values()]
    lines = [f"# {k}={_format_value(v)}" for k, v in dump.header.items()]
    lines.append("# columns=" + ",".join(cols))
    rep = [[repr(float(v)) for v in a] for a in arrays]
    lines.extend(",".join(row) for row in zip(*rep))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_dump(path):
    path = Path(path)
    header = {}
    cols = None
    rows = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, val = line[1:].strip().partition("=")
                if not sep:
                    raise DumpFormatError(f"{path}:{lineno}: malformed header line {line!r}")
                if key == "columns":
                    cols = val.split(",")
                else:
                    header[key] = _parse_value(val)
                continue
            rows.append(line.split(","))
    missing = [k for k in REQUIRED_HEADER if k not in header]
    if missing:
        raise DumpFormatError(f"{path}: header missing {', '.join(missing)}")
    if cols is None or len(cols) < 3:
        raise DumpFormatError(f"{path}: header missing columns line")
    n = int(header["nX"]) * int(header["nY"])
    if len(rows) != n:
        raise DumpFormatError(f"{path}: {len(rows)} data rows, expected nX*nY = {n}")
    try:
        data = np.array(rows, dtype=float)
    except ValueError as exc:
        raise DumpFormatError(f"{path}: non-numeric data: {exc}") from exc
    if data.shape[1] != len(cols):
        raise DumpFormatError(f"{path}: rows have {data.shape[1]} columns, header names {len(cols)}")
    extra = {c: data[:, k] for k, c in enumerate(cols[3:], start=3)}
    return GridDump(header, data[:, 0], data[:, 1], data[:, 2], cols[2], extra)


def write_table(path, columns, rows, comments=()):
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_format_value(v) if not isinstance(v, float) or math.isfinite(v) else "nan"
                              for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)


def read_table(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    cols = lines[0].split(",")
    return cols, [[_parse_value(v) for v in ln.split(",")] for ln in lines[1:]]


def colorize(field2d, colormap="viridis", vmin=None, vmax=None):
    """Map values linearly onto a matplotlib colormap -> uint8 RGB array."""
    from matplotlib import colormaps

    a = np.asarray(field2d, dtype=float)
    lo = float(np.min(a)) if vmin is None else vmin
    hi = float(np.max(a)) if vmax is None else vmax
    t = np.zeros_like(a) if hi <= lo else np.clip((a - lo) / (hi - lo), 0.0, 1.0)
    rgba = colormaps[colormap](t, bytes=True)
    return rgba[..., :3], lo, hi


def render_heatmap(dump, path, colormap="viridis", upscale=1):
    """PNG with one pixel per node (times ``upscale``); y increases upward.

    The value range is written next to the image as ``<name>.range.txt``.
    """
    from PIL import Image

    rgb, lo, hi = colorize(dump.as_2d()[::-1, :], colormap)
    if upscale > 1:
        rgb = np.repeat(np.repeat(rgb, upscale, axis=0), upscale, axis=1)
    path = Path(path)
    Image.fromarray(np.ascontiguousarray(rgb)).save(path, format="PNG")
    sidecar = path.with_suffix(".range.txt")
    sidecar.write_text(f"field={dump.field}\nmin={lo!r}\nmax={hi!r}\ncolormap={colormap}\n")
    return path
