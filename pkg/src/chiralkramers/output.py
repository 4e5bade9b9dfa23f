"""Atomic file output, CSV tables and run manifests.

Every CSV starts with a ``# config_hash=<hex>`` comment line and every JSON
document carries a ``config_hash`` key, so any artifact can be traced back to
the configuration that produced it. Floats are written with ``repr`` so that
reruns with the same inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import os
import platform
import sys
import tempfile
from importlib import metadata
from pathlib import Path

import numpy as np

__all__ = [
    "atomic_write_text",
    "atomic_write_json",
    "csv_text",
    "read_csv_table",
    "trajectory_csv",
    "trajectory_metadata",
    "axial_histogram_csv",
    "radial_axial_histogram_csv",
    "occupancy_csv",
    "software_versions",
    "run_manifest",
]


def atomic_write_text(path, text: str) -> Path:
    """Write ``text`` to a temporary file beside ``path`` and rename it into place.

    A crash before the rename leaves the target untouched; the rename itself
    is atomic on POSIX file systems.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, float) and not np.isfinite(value):
        return repr(value)
    return value


def atomic_write_json(path, document: dict) -> Path:
    return atomic_write_text(path, json.dumps(_jsonable(document), indent=2, sort_keys=True) + "\n")


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def csv_text(header, rows, config_hash: str) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def read_csv_table(path) -> tuple[str | None, list[dict]]:
    """Rows of a CSV written by this module, with its config hash (or None)."""
    lines = Path(path).read_text().splitlines()
    digest = None
    body = []
    for line in lines:
        if line.startswith("#"):
            if line.startswith("# config_hash="):
                digest = line.split("=", 1)[1].strip()
            continue
        body.append(line)
    return digest, list(csv.DictReader(body))


def trajectory_csv(record, config_hash: str) -> str:
    """Stored positions of one trajectory: t, x, y, z in SI units."""
    rows = ((t, *p) for t, p in zip(record.times, record.positions))
    return csv_text(["t_s", "x_m", "y_m", "z_m"], rows, config_hash)


def trajectory_metadata(record, config_hash: str) -> dict:
    plan = record.plan
    return {
        "config_hash": config_hash,
        "trajectory_index": record.index,
        "master_seed": record.seed,
        "enantiomer": record.enantiomer,
        "time_step_s": plan.time_step,
        "n_steps": plan.n_steps,
        "record_stride": plan.record_stride,
        "regime": plan.regime,
        "initializer": plan.initializer.kind,
    }


def axial_histogram_csv(z_edges, counts_by_enantiomer: dict, config_hash: str) -> str:
    names = sorted(counts_by_enantiomer)
    header = ["z_lo_m", "z_hi_m"] + [f"count_{n}" for n in names]
    rows = (
        [z_edges[i], z_edges[i + 1]] + [int(counts_by_enantiomer[n][i]) for n in names]
        for i in range(len(z_edges) - 1)
    )
    return csv_text(header, rows, config_hash)


def radial_axial_histogram_csv(q_edges, z_edges, hist_by_enantiomer: dict, config_hash: str) -> str:
    rows = []
    for name in sorted(hist_by_enantiomer):
        h = hist_by_enantiomer[name]
        for i in range(len(q_edges) - 1):
            for j in range(len(z_edges) - 1):
                rows.append([name, q_edges[i], q_edges[i + 1], z_edges[j], z_edges[j + 1], int(h[i, j])])
    return csv_text(["enantiomer", "q_lo_m", "q_hi_m", "z_lo_m", "z_hi_m", "count"], rows, config_hash)


def occupancy_csv(members: dict, config_hash: str) -> str:
    rows = []
    for name in sorted(members):
        m = members[name]
        for i, (a, c), esc, ev in zip(m.indices, m.occupancy, m.escapes, m.events):
            rows.append([int(i), name, int(a), int(c), int(esc), ev.count])
    return csv_text(["trajectory", "enantiomer", "samples_a", "samples_c", "escapes", "jumps"], rows, config_hash)


def software_versions() -> dict:
    out = {"python": platform.python_version()}
    for name in ("numpy", "scipy", "numba"):
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = None
    try:
        out["chiralkramers"] = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        out["chiralkramers"] = None
    return out


def run_manifest(command: str, config_hash: str, seed, wall_time: float, outputs, extra: dict | None = None) -> dict:
    doc = {
        "command": command,
        "argv": sys.argv[1:],
        "config_hash": config_hash,
        "master_seed": seed,
        "versions": software_versions(),
        "wall_time_s": wall_time,
        "outputs": sorted(str(p) for p in outputs),
    }
    if extra:
        doc.update(extra)
    return doc
