import numpy as np
import pytest
from numpy.testing import assert_array_equal

from flaghardy import SignalSpec, make_grid, synthesize
from flaghardy.storage import (
    StorageError,
    mask_to_rle,
    read_function,
    read_set,
    rle_to_mask,
    write_function,
    write_set,
)


def test_function_round_trip(tmp_path, grid6):
    f = synthesize(SignalSpec("band-limited-random", seed=1), grid6)
    path = tmp_path / "sig.bin"
    write_function(path, f)
    back = read_function(path)
    assert back.grid == grid6
    assert back.tag == "base"
    assert_array_equal(back.values, f.values)
    sidecar = path.with_name("sig.bin.json")
    assert sidecar.exists()


def test_header_layout(tmp_path, grid6):
    f = synthesize(SignalSpec("delta"), grid6)
    path = tmp_path / "sig.bin"
    write_function(path, f)
    raw = path.read_bytes()
    assert raw[:4] == b"FLAG"
    n, m, L, tag = np.frombuffer(raw[4:20], dtype="<u4")
    assert (n, m, L, tag) == (1, 1, 6, 0)
    side = np.frombuffer(raw[20:28], dtype="<f8")[0]
    assert side == 1.0
    assert len(raw) == 32 + 16 * grid6.samples**2


def test_bad_magic_rejected(tmp_path, grid6):
    f = synthesize(SignalSpec("delta"), grid6)
    path = tmp_path / "sig.bin"
    write_function(path, f)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"JUNK"
    path.write_bytes(bytes(raw))
    with pytest.raises(StorageError):
        read_function(path)


def test_truncated_payload_rejected(tmp_path, grid6):
    f = synthesize(SignalSpec("delta"), grid6)
    path = tmp_path / "sig.bin"
    write_function(path, f)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(StorageError):
        read_function(path)


def test_missing_file(tmp_path):
    with pytest.raises(StorageError):
        read_function(tmp_path / "nope.bin")


def test_rle_round_trip():
    rng = np.random.default_rng(3)
    mask = rng.random((16, 16)) > 0.6
    runs = mask_to_rle(mask)
    back = rle_to_mask(runs, mask.shape)
    assert_array_equal(back, mask)


def test_set_round_trip(tmp_path):
    g = make_grid(1, 1, 4)
    mask = np.zeros(g.shape, dtype=bool)
    mask[2:9, 4:12] = True
    path = tmp_path / "set.json"
    write_set(path, g, mask)
    grid_back, mask_back = read_set(path)
    assert grid_back == g
    assert_array_equal(mask_back, mask)
