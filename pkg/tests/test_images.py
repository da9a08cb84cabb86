"""Bit-exact image round-trips and volume invariants."""

import numpy as np
import pytest

from cohortlens.cohort import (ImageVolume, read_pgm, read_volume_3d, write_pgm,
                               write_volume)
from cohortlens.cohort.images import ImageError


def test_pgm_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    grid = rng.integers(0, 65536, size=(17, 23)).astype(float)
    p = tmp_path / "img.pgm"
    write_pgm(grid, p)
    back = read_pgm(p)
    assert np.array_equal(back, grid)


def test_pgm_is_big_endian_16bit(tmp_path):
    grid = np.array([[1.0, 256.0]])  # nx=1, ny=2
    p = tmp_path / "img.pgm"
    write_pgm(grid, p)
    raw = p.read_bytes()
    header_end = raw.index(b"65535\n") + 6
    assert raw[header_end:] == b"\x00\x01\x01\x00"


def test_pgm_rejects_out_of_range(tmp_path):
    with pytest.raises(ImageError):
        write_pgm(np.array([[70000.0]]), tmp_path / "x.pgm")


def test_volume_roundtrip_3d(tmp_path):
    rng = np.random.default_rng(1)
    grid = rng.standard_normal((4, 5, 6)).astype(np.float32).astype(float)
    vol = ImageVolume(dims=(4, 5, 6), spacing=(1.0, 1.0, 2.0), channels={"T1": grid})
    paths = write_volume(vol, tmp_path, "subj1")
    raw = [p for p in paths if p.suffix == ".raw"][0]
    back = read_volume_3d(raw)
    assert back.dims == (4, 5, 6)
    assert back.spacing == (1.0, 1.0, 2.0)
    assert np.array_equal(back.channels["T1"], grid)


def test_channels_must_share_dims():
    with pytest.raises(ImageError):
        ImageVolume(dims=(2, 2), spacing=(1, 1),
                    channels={"a": np.zeros((2, 2)), "b": np.zeros((3, 2))})


def test_spacing_positive():
    with pytest.raises(ImageError):
        ImageVolume(dims=(2, 2), spacing=(1.0, 0.0), channels={})


def test_combined_weights():
    vol = ImageVolume(dims=(2, 2), spacing=(1, 1),
                      channels={"T1": np.ones((2, 2)), "T2": np.full((2, 2), 2.0)})
    combo = vol.combined({"T1": 0.25, "T2": 0.5})
    assert np.allclose(combo, 0.25 + 1.0)
    with pytest.raises(ImageError):
        vol.combined({"T1": 0.0})
