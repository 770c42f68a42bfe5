"""Binary snapshot files.

Layout: one ASCII header line ``LERAYFLUX-SNAPSHOT <json>`` terminated by a
newline, then little-endian float64 samples, component-major, with the
first spatial index varying fastest.  The JSON header (sorted keys)
records ``dim``, ``n``, ``components``, ``time``, ``fields`` and ``params``.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import spectral as sp
from .errors import ShapeError, SnapshotError
from .grid import Grid, PhysicalField
from .model import ModelParams, ModelState

MAGIC = b"LERAYFLUX-SNAPSHOT "
FIELDS_3D = ("u1", "u2", "u3", "Z")
FIELDS_1D = ("u", "Z")


@dataclass
class Snapshot:
    grid: Grid
    time: float
    fields: tuple
    data: np.ndarray  # (components,) + grid.shape
    params: dict

    def header(self) -> dict:
        return {
            "components": int(self.data.shape[0]),
            "dim": self.grid.dim,
            "fields": list(self.fields),
            "n": self.grid.n,
            "params": self.params,
            "time": float(self.time),
        }

    def to_state(self, alpha: float | None = None) -> ModelState:
        a = self.params.get("alpha", 0.0) if alpha is None else alpha
        d = self.grid.dim
        u = sp.transform(PhysicalField(self.grid, self.data[:d]))
        z = sp.transform(PhysicalField(self.grid, self.data[d:d + 1]))
        return ModelState.from_u(u, z, a, self.time)


def from_state(state: ModelState, params: ModelParams | None = None) -> Snapshot:
    g = state.grid
    u = sp.inverse_transform(state.u).data
    z = sp.inverse_transform(state.Z).data
    names = FIELDS_3D if g.dim == 3 else FIELDS_1D
    return Snapshot(g, state.t, names, np.concatenate([u, z]), asdict(params) if params else {})


def write_snapshot(path, snap: Snapshot) -> None:
    path = Path(path)
    head = json.dumps(snap.header(), sort_keys=True, separators=(",", ":"))
    body = np.concatenate([c.ravel(order="F") for c in snap.data]).astype("<f8")
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC + head.encode("ascii") + b"\n")
            fh.write(body.tobytes())
    except OSError as exc:
        raise SnapshotError(f"cannot write snapshot {path}: {exc}") from exc


def read_snapshot(path) -> Snapshot:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            line = fh.readline()
            raw = fh.read()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    if not line.startswith(MAGIC) or not line.endswith(b"\n"):
        raise SnapshotError(f"{path} is not a snapshot file")
    try:
        head = json.loads(line[len(MAGIC):].decode("ascii"))
        grid = Grid(int(head["dim"]), int(head["n"]))
        comps = int(head["components"])
    except (ValueError, KeyError, TypeError) as exc:
        raise SnapshotError(f"{path}: malformed header ({exc})") from exc
    expected = comps * grid.size * 8
    if len(raw) != expected:
        raise SnapshotError(f"{path}: expected {expected} data bytes, found {len(raw)}")
    flat = np.frombuffer(raw, dtype="<f8").reshape(comps, grid.size)
    data = np.stack([c.reshape(grid.shape, order="F") for c in flat]).astype(float)
    fields = tuple(head.get("fields", []))
    if len(fields) != comps:
        raise ShapeError(f"{path}: {len(fields)} field names for {comps} components")
    return Snapshot(grid, float(head.get("time", 0.0)), fields, data, head.get("params", {}))


def snapshot_name(index: int) -> str:
    return f"snap_{index:05d}.bin"


def ensure_dir(path) -> Path:
    path = Path(path)
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise SnapshotError(f"cannot create output directory {path}: {exc}") from exc
    return path
