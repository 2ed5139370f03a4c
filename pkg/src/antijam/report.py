"""Run directories: config echo, CSV tables, JSON-lines log, manifest.

Layout of ``<out>``::

    config.yaml      exact configuration of the run (re-run it to reproduce)
    traces.csv       one row per (method, case, repetition, slot, user)
    jammers.csv      per-jammer success rates (sc2)
    summary.csv      bucketed STR / accuracy, ER and ER ratios
    analytic.csv     ER table (analytic subcommand)
    log.jsonl        one JSON object per event
    manifest.json    versions, seeds, row counts, wall-clock seconds

Column order in every CSV is fixed by the ``*_FIELDS`` tuples in
:mod:`antijam.experiments`.
"""

from __future__ import annotations

import csv
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, dump_config


def versions() -> dict:
    import scipy

    from . import __version__

    return {"antijam": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def write_csv(path: Path, rows: list[dict], fieldnames) -> int:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fieldnames), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k, "")) for k in fieldnames})
    return len(rows)


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _fmt(v):
    # repr keeps full double precision, so a re-run compares bit-exactly
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


class RunLog:
    """Line-delimited JSON event log."""

    def __init__(self, path: Path):
        self.path = path
        self._t0 = time.perf_counter()
        self._fh = open(path, "a")

    def event(self, kind: str, **fields):
        rec = {"event": kind, "elapsed_s": round(time.perf_counter() - self._t0, 3), **fields}
        self._fh.write(json.dumps(rec, sort_keys=True, default=_json_default) + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _json_default(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, Path):
        return str(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def prepare_run_dir(out: Path, cfg: ExperimentConfig) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(dump_config(cfg))
    return out


def write_manifest(out: Path, command: str, cfg: ExperimentConfig, wall_clock: float, **extra):
    manifest = {"command": command, "argv": sys.argv[1:], "scenario": cfg.scenario, "seed": cfg.seed,
                "name": cfg.name, "versions": versions(), "wall_clock_s": round(wall_clock, 3), **extra}
    (Path(out) / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True,
                                                        default=_json_default) + "\n")
    return manifest
