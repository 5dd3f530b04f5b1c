"""Bit-stable file emission: CSV, 16-bit PGM, JSON sidecars, atomic writes."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .lattice import LatticeGraph, PhaseField, plaquette_fluxes

FLOAT_FMT = "%.12e"


def atomic_write(path, data: bytes) -> Path:
    """Write ``data`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FLOAT_FMT % float(v)


def csv_bytes(header: Sequence[str], rows: Iterable[Sequence]) -> bytes:
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    return ("\n".join(lines) + "\n").encode("ascii")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return atomic_write(path, csv_bytes(header, rows))


def pgm_bytes(image: np.ndarray) -> tuple[bytes, float, float]:
    """Binary P5 graymap, 16-bit big-endian, linearly min-max normalized."""
    img = np.asarray(image, dtype=float)
    lo, hi = float(img.min()), float(img.max())
    scaled = np.zeros_like(img) if hi == lo else (img - lo) / (hi - lo)
    samples = np.round(scaled * 65535).astype(">u2")
    h, w = img.shape
    header = f"P5\n{w} {h}\n65535\n".encode("ascii")
    return header + samples.tobytes(), lo, hi


def write_pgm(path, image: np.ndarray, meta: dict | None = None) -> tuple[Path, Path]:
    """Write the image plus a ``.json`` sidecar holding min/max and ``meta``."""
    data, lo, hi = pgm_bytes(image)
    path = atomic_write(path, data)
    side = dict(meta or {})
    side.update({"min": lo, "max": hi, "width": int(image.shape[1]), "height": int(image.shape[0])})
    sidecar = write_json(Path(path).with_suffix(".json"), side)
    return path, sidecar


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=">u2").reshape(h, w)


def write_json(path, obj) -> Path:
    return atomic_write(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8"))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def append_csv_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Append rows by rewriting the whole file atomically."""
    path = Path(path)
    old = path.read_bytes() if path.exists() else csv_bytes(header, [])
    return atomic_write(path, old + csv_bytes(header, rows).split(b"\n", 1)[1])


def write_lattice_csv(graph: LatticeGraph, outdir, phases: PhaseField | None = None) -> list[Path]:
    """``sites.csv``, ``links.csv`` and ``fluxes.csv`` for a graph and its phase field."""
    outdir = Path(outdir)
    phases = graph.phase_field() if phases is None else phases
    sites = write_csv(
        outdir / "sites.csv",
        ["id", "kind", "row", "col", "omega"],
        [(s.id, s.kind.value, s.pos[0], s.pos[1], s.omega) for s in graph.sites],
    )
    links = write_csv(
        outdir / "links.csv",
        ["i", "j", "kind", "amplitude", "phase"],
        [(ln.i, ln.j, ln.kind.value, ln.amplitude, phases.get_phase(ln.i, ln.j)) for ln in graph.links],
    )
    flux = plaquette_fluxes(graph, phases)
    fluxes = write_csv(
        outdir / "fluxes.csv",
        ["plaquette_row", "plaquette_col", "flux"],
        [(r, c, flux.flux[(r, c)]) for r, c in flux.keys()],
    )
    return [sites, links, fluxes]


def read_phase_file(path) -> PhaseField:
    """Per-link phases from a CSV with header ``i,j,phase``."""
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="ascii")
    data = np.atleast_1d(data)
    missing = {"i", "j", "phase"} - set(data.dtype.names or ())
    if missing:
        raise ValueError(f"phase file lacks columns {sorted(missing)}")
    return PhaseField({(int(r["i"]), int(r["j"])): float(r["phase"]) for r in data})
