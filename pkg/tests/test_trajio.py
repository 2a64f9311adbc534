import numpy as np
import pytest

from amsim.errors import InvalidArgumentError
from amsim.trajio import (
    read_trajectory_bin,
    write_trajectory_bin,
    write_trajectory_csv,
)


def test_binary_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    states = rng.standard_normal((37, 5))
    path = tmp_path / "t.bin"
    write_trajectory_bin(path, states)
    back = read_trajectory_bin(path)
    assert back.shape == (37, 5)
    assert np.array_equal(back, states)


def test_binary_layout_is_fixed(tmp_path):
    states = np.arange(6, dtype=float).reshape(3, 2)
    path = tmp_path / "t.bin"
    write_trajectory_bin(path, states)
    raw = path.read_bytes()
    assert len(raw) == 32 + 6 * 8
    assert raw[:8] == b"AMSTRAJ\0"
    assert int.from_bytes(raw[8:12], "little") == 1   # version
    assert int.from_bytes(raw[12:16], "little") == 2  # components
    assert int.from_bytes(raw[16:24], "little") == 2  # steps
    assert np.frombuffer(raw[32:], dtype="<f8")[0] == 0.0


def test_reader_rejects_corrupt_files(tmp_path):
    good = tmp_path / "t.bin"
    write_trajectory_bin(good, np.zeros((2, 2)))
    bad_magic = tmp_path / "m.bin"
    bad_magic.write_bytes(b"NOTATRAJ" + good.read_bytes()[8:])
    with pytest.raises(InvalidArgumentError):
        read_trajectory_bin(bad_magic)
    truncated = tmp_path / "s.bin"
    truncated.write_bytes(good.read_bytes()[:40])
    with pytest.raises(InvalidArgumentError):
        read_trajectory_bin(truncated)
    with pytest.raises(InvalidArgumentError):
        write_trajectory_bin(tmp_path / "x.bin", np.zeros(3))


def test_csv_round_trips_through_repr(tmp_path):
    rng = np.random.default_rng(1)
    states = rng.standard_normal((4, 3))
    path = tmp_path / "t.csv"
    write_trajectory_csv(path, states, dt=0.25, header_comment="check")
    lines = path.read_text().splitlines()
    assert lines[0] == "# check"
    assert lines[1] == "step,time,x_0,x_1,x_2"
    parsed = np.array([[float(v) for v in line.split(",")] for line in lines[2:]])
    assert np.array_equal(parsed[:, 0], np.arange(4))
    assert np.array_equal(parsed[:, 1], np.arange(4) * 0.25)
    assert np.array_equal(parsed[:, 2:], states)
