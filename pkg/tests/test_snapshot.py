import json

import numpy as np
import pytest

from lerayflux import snapshot as sn
from lerayflux.errors import ShapeError, SnapshotError
from lerayflux.grid import Grid
from lerayflux.model import ICSpec, ModelParams, initial_condition


@pytest.fixture
def state():
    params = ModelParams(alpha=0.2)
    return initial_condition("random_div_free", Grid(3, 8), params, ICSpec(seed=2)), params


def test_round_trip(tmp_path, state):
    s, params = state
    snap = sn.from_state(s, params)
    path = tmp_path / sn.snapshot_name(3)
    sn.write_snapshot(path, snap)
    back = sn.read_snapshot(path)
    assert back.grid == s.grid
    assert back.fields == ("u1", "u2", "u3", "Z")
    assert np.array_equal(back.data, snap.data)
    restored = back.to_state()
    assert np.abs(restored.u.data - s.u.data).max() < 1e-15
    assert np.abs(restored.v.data - s.v.data).max() < 1e-15


def test_header_and_layout(tmp_path, state):
    s, params = state
    snap = sn.from_state(s, params)
    path = tmp_path / "a.bin"
    sn.write_snapshot(path, snap)
    raw = path.read_bytes()
    line, body = raw.split(b"\n", 1)
    head = json.loads(line[len(sn.MAGIC):])
    assert list(head) == sorted(head)
    assert head["params"]["alpha"] == 0.2 and head["components"] == 4
    first = np.frombuffer(body[:8 * 8], dtype="<f8")
    # first spatial index varies fastest
    assert np.array_equal(first, snap.data[0][:, 0, 0])


def test_one_dimensional_names(tmp_path):
    s = initial_condition("burgers_shock", Grid(1, 32), ModelParams())
    path = tmp_path / "b.bin"
    sn.write_snapshot(path, sn.from_state(s))
    assert sn.read_snapshot(path).fields == ("u", "Z")


def test_corrupt_files(tmp_path, state):
    s, params = state
    path = tmp_path / "c.bin"
    sn.write_snapshot(path, sn.from_state(s, params))
    raw = path.read_bytes()
    (tmp_path / "trunc.bin").write_bytes(raw[:-8])
    with pytest.raises(SnapshotError, match="data bytes"):
        sn.read_snapshot(tmp_path / "trunc.bin")
    (tmp_path / "junk.bin").write_bytes(b"hello\n" + raw)
    with pytest.raises(SnapshotError, match="not a snapshot"):
        sn.read_snapshot(tmp_path / "junk.bin")
    (tmp_path / "head.bin").write_bytes(sn.MAGIC + b"{bad json\n")
    with pytest.raises(SnapshotError, match="malformed"):
        sn.read_snapshot(tmp_path / "head.bin")
    with pytest.raises(SnapshotError):
        sn.read_snapshot(tmp_path / "missing.bin")


def test_field_count_mismatch(tmp_path, state):
    s, params = state
    snap = sn.from_state(s, params)
    snap.fields = ("u1", "u2", "u3")
    path = tmp_path / "d.bin"
    sn.write_snapshot(path, snap)
    with pytest.raises(ShapeError):
        sn.read_snapshot(path)


def test_write_into_missing_directory(tmp_path, state):
    s, params = state
    with pytest.raises(SnapshotError):
        sn.write_snapshot(tmp_path / "nope" / "x.bin", sn.from_state(s, params))
    assert sn.ensure_dir(tmp_path / "a" / "b").is_dir()
