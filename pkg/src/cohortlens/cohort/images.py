"""Grayscale image volumes and bit-exact file round-trips.

2D slices are stored as binary PGM (P5, maxval 65535, big-endian 16-bit).
3D stacks are raw little-endian float32 arrays with a JSON sidecar header
carrying dims, spacing and channel name.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ImageError(ValueError):
    pass


@dataclass
class ImageVolume:
    """Named intensity grids over a shared voxel lattice.

    Arrays are indexed [ix, iy] (2D) or [ix, iy, iz]; position in mm =
    index * spacing per axis.
    """

    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    channels: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.dims) not in (2, 3):
            raise ImageError("dims must be 2D or 3D")
        if len(self.spacing) != len(self.dims):
            raise ImageError("spacing must match dims")
        if any(s <= 0 for s in self.spacing):
            raise ImageError("spacing must be positive")
        for name, grid in self.channels.items():
            if tuple(grid.shape) != tuple(self.dims):
                raise ImageError(f"channel {name!r} shape {grid.shape} != dims {self.dims}")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    def extent_mm(self) -> tuple[float, ...]:
        return tuple((d - 1) * s for d, s in zip(self.dims, self.spacing))

    def combined(self, weights: dict[str, float]) -> np.ndarray:
        """Weighted sum of channels (appearance input for model fitting)."""
        if not any(w != 0 for w in weights.values()):
            raise ImageError("at least one non-zero channel weight required")
        out = np.zeros(self.dims, dtype=float)
        for name, w in weights.items():
            if w == 0:
                continue
            if name not in self.channels:
                raise ImageError(f"unknown channel {name!r}")
            out += w * self.channels[name]
        return out


def write_pgm(grid: np.ndarray, path: str | Path) -> None:
    """Write a 2D array as binary PGM P5, maxval 65535, big-endian."""
    if grid.ndim != 2:
        raise ImageError("PGM supports 2D grids only")
    data = np.ascontiguousarray(np.rint(grid).astype(">u2"))
    if np.any(np.rint(grid) < 0) or np.any(np.rint(grid) > 65535):
        raise ImageError("PGM values must round into [0, 65535]")
    nx, ny = grid.shape
    header = f"P5\n{nx} {ny}\n65535\n".encode("ascii")
    # PGM raster is row-major over (height, width) = (ny, nx)
    raster = data.T.tobytes()
    Path(path).write_bytes(header + raster)


def read_pgm(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if not m:
        raise ImageError(f"not a binary PGM: {path}")
    nx, ny, maxval = (int(g) for g in m.groups())
    if maxval != 65535:
        raise ImageError(f"expected maxval 65535, got {maxval}")
    raster = raw[m.end():]
    expected = nx * ny * 2
    if len(raster) != expected:
        raise ImageError(f"PGM raster size {len(raster)} != expected {expected}")
    grid = np.frombuffer(raster, dtype=">u2").reshape(ny, nx).T
    return grid.astype(np.float64)


def write_volume(volume: ImageVolume, directory: str | Path, stem: str) -> list[Path]:
    """Persist a volume; returns written paths.

    2D channels go to <stem>_<channel>.pgm; 3D channels to .raw (little-
    endian float32) plus a .json sidecar.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for name, grid in volume.channels.items():
        if volume.ndim == 2:
            p = directory / f"{stem}_{name}.pgm"
            write_pgm(grid, p)
            written.append(p)
        else:
            raw_path = directory / f"{stem}_{name}.raw"
            raw_path.write_bytes(np.ascontiguousarray(grid, dtype="<f4").tobytes())
            sidecar = directory / f"{stem}_{name}.json"
            sidecar.write_text(json.dumps({
                "dims": list(volume.dims),
                "spacing": list(volume.spacing),
                "channel": name,
                "dtype": "<f4",
            }) + "\n", encoding="utf-8")
            written.extend([raw_path, sidecar])
    return written


def read_volume_2d(paths: dict[str, str | Path], spacing: tuple[float, float]) -> ImageVolume:
    channels = {name: read_pgm(p) for name, p in paths.items()}
    dims = next(iter(channels.values())).shape
    return ImageVolume(dims=tuple(dims), spacing=spacing, channels=channels)


def read_volume_3d(raw_path: str | Path) -> ImageVolume:
    raw_path = Path(raw_path)
    sidecar = raw_path.with_suffix(".json")
    header = json.loads(sidecar.read_text(encoding="utf-8"))
    dims = tuple(header["dims"])
    grid = np.frombuffer(raw_path.read_bytes(), dtype=header["dtype"]).reshape(dims)
    return ImageVolume(dims=dims, spacing=tuple(header["spacing"]),
                       channels={header["channel"]: grid.astype(np.float64)})
