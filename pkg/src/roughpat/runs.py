"""Per-run output directories: path containment, a lock against concurrent
writers, and the run manifest."""

from __future__ import annotations

import json
import os
import platform
import time
from pathlib import Path

from . import __version__
from .dumps import render_heatmap, write_dump, write_table
from .errors import RoughpatError

DEFAULT_ROOT_ENV = "ROUGHPAT_OUT"


class RunDirectoryBusy(RoughpatError):
    exit_code = 6


def default_root():
    return Path(os.environ.get(DEFAULT_ROOT_ENV, "roughpat-out"))


class RunDirectory:
    """Owns one output directory for the duration of a run.

    Use as a context manager; a ``.lock`` file created with O_EXCL keeps a
    second process from writing into the same directory.
    """

    def __init__(self, path, render=False, colormap="viridis"):
        self.path = Path(path).resolve()
        self.render = render
        self.colormap = colormap
        self.outputs = []
        self._lock = self.path / ".lock"
        self._t0 = None

    def __enter__(self):
        self.path.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self._lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RunDirectoryBusy(f"run directory {self.path} is in use (remove {self._lock} if stale)") from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self._lock.unlink(missing_ok=True)
        return False

    @property
    def elapsed(self):
        return time.perf_counter() - self._t0 if self._t0 is not None else 0.0

    def file(self, name):
        p = (self.path / name).resolve()
        if self.path not in p.parents:
            raise RoughpatError(f"refusing to write outside the run directory: {name}")
        p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(str(p.relative_to(self.path)))
        return p

    def dump(self, name, dump):
        write_dump(dump, self.file(name + ".csv"))
        if self.render:
            render_heatmap(dump, self.file(name + ".png"), self.colormap)
            self.outputs.append(name + ".range.txt")

    def table(self, name, columns, rows, comments=()):
        return write_table(self.file(name + ".csv"), columns, rows, comments)

    def manifest(self, command, config, seed, extra=None):
        import numpy
        import scipy

        data = {
            "command": command,
            "seed": seed,
            "config": config,
            "versions": {
                "roughpat": __version__,
                "numpy": numpy.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "wall_time_s": round(self.elapsed, 3),
            "outputs": sorted(set(self.outputs)),
        }
        if extra:
            data.update(extra)
        p = self.path / "manifest.json"
        p.write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")
        return p
