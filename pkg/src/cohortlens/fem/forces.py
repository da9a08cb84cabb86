"""Image-derived node forces.

Boundary nodes climb the gradient-magnitude field of the combined image;
inner nodes descend the squared deviation from their sub-shape's expected
intensity. Values and gradients come from the bilinear (trilinear)
interpolant of the grid, so the inner-node force is the exact negative
gradient of the sampled intensity penalty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cohort.images import ImageVolume
from .model import INNER, ShapeModel


@dataclass
class SampledField:
    """A scalar grid sampled continuously with its interpolant gradient."""

    grid: np.ndarray
    spacing: tuple[float, ...]

    def sample(self, positions_mm: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(values, gradients d/d mm, inside-flags) at positions (n, dim)."""
        if self.grid.ndim == 2:
            return self._sample2d(positions_mm)
        return self._sample3d(positions_mm)

    def _setup(self, positions_mm: np.ndarray):
        spacing = np.asarray(self.spacing)
        v = positions_mm / spacing[None, :]
        dims = np.asarray(self.grid.shape)
        inside = np.all((v >= 0) & (v <= dims[None, :] - 1), axis=1)
        cell = np.floor(v).astype(int)
        cell = np.clip(cell, 0, dims[None, :] - 2)
        frac = v - cell
        return spacing, cell, frac, inside

    def _sample2d(self, positions_mm):
        spacing, cell, frac, inside = self._setup(positions_mm)
        g = self.grid
        i, j = cell[:, 0], cell[:, 1]
        fx, fy = frac[:, 0], frac[:, 1]
        g00 = g[i, j]
        g10 = g[i + 1, j]
        g01 = g[i, j + 1]
        g11 = g[i + 1, j + 1]
        value = (g00 * (1 - fx) * (1 - fy) + g10 * fx * (1 - fy)
                 + g01 * (1 - fx) * fy + g11 * fx * fy)
        ddx = ((g10 - g00) * (1 - fy) + (g11 - g01) * fy) / spacing[0]
        ddy = ((g01 - g00) * (1 - fx) + (g11 - g10) * fx) / spacing[1]
        return value, np.column_stack([ddx, ddy]), inside

    def _sample3d(self, positions_mm):
        spacing, cell, frac, inside = self._setup(positions_mm)
        g = self.grid
        i, j, k = cell[:, 0], cell[:, 1], cell[:, 2]
        fx, fy, fz = frac[:, 0], frac[:, 1], frac[:, 2]
        c = {}
        for di in (0, 1):
            for dj in (0, 1):
                for dk in (0, 1):
                    c[di, dj, dk] = g[i + di, j + dj, k + dk]

        def mix(d0, d1, f):
            return d0 * (1 - f) + d1 * f

        v00 = mix(c[0, 0, 0], c[1, 0, 0], fx)
        v10 = mix(c[0, 1, 0], c[1, 1, 0], fx)
        v01 = mix(c[0, 0, 1], c[1, 0, 1], fx)
        v11 = mix(c[0, 1, 1], c[1, 1, 1], fx)
        value = mix(mix(v00, v10, fy), mix(v01, v11, fy), fz)

        dx00 = c[1, 0, 0] - c[0, 0, 0]
        dx10 = c[1, 1, 0] - c[0, 1, 0]
        dx01 = c[1, 0, 1] - c[0, 0, 1]
        dx11 = c[1, 1, 1] - c[0, 1, 1]
        ddx = mix(mix(dx00, dx10, fy), mix(dx01, dx11, fy), fz) / spacing[0]
        ddy = mix(v10 - v00, v11 - v01, fz) / spacing[1]
        ddz = (mix(v01, v11, fy) - mix(v00, v10, fy)) / spacing[2]
        return value, np.column_stack([ddx, ddy, ddz]), inside


def gradient_magnitude_grid(grid: np.ndarray, spacing: tuple[float, ...]) -> np.ndarray:
    """Central-difference gradient magnitude of a grid, in 1/mm units."""
    grads = np.gradient(grid, *spacing)
    if not isinstance(grads, (list, tuple)):
        grads = [grads]
    return np.sqrt(sum(g ** 2 for g in grads))


@dataclass
class ForceField:
    """Precomputed sampling fields for one (image, appearance) pair."""

    intensity: SampledField
    gradient_magnitude: SampledField

    @classmethod
    def from_image(cls, image: ImageVolume, channel_weights: dict[str, float]) -> "ForceField":
        combined = image.combined(channel_weights)
        gmag = gradient_magnitude_grid(combined, image.spacing)
        return cls(intensity=SampledField(combined, image.spacing),
                   gradient_magnitude=SampledField(gmag, image.spacing))


def image_forces(positions_mm: np.ndarray, model: ShapeModel, field: ForceField,
                 expected_per_node: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-node forces (n, dim) and outside-bounds flags.

    Inner nodes: f = -intensity_gain * grad (I(x) - e)^2.
    Boundary nodes: f = gradient_gain * grad |grad I|(x).
    Out-of-bounds nodes get zero force and a flag. Forces are clamped to
    force_max in norm.
    """
    app = model.appearance
    inner_mask = np.array([k == INNER for k in model.node_kind])

    values, grads, inside = field.intensity.sample(positions_mm)
    forces = np.zeros_like(positions_mm)

    deviation = values - expected_per_node
    forces[inner_mask] = (-app.intensity_gain * 2.0 * deviation[inner_mask, None]
                          * grads[inner_mask])

    if np.any(~inner_mask):
        _, ggrads, _ = field.gradient_magnitude.sample(positions_mm[~inner_mask])
        forces[~inner_mask] = app.gradient_gain * ggrads

    forces[~inside] = 0.0

    norms = np.linalg.norm(forces, axis=1)
    over = norms > app.force_max
    if np.any(over):
        forces[over] *= (app.force_max / norms[over])[:, None]
    return forces, ~inside


def expected_intensity_per_node(model: ShapeModel) -> np.ndarray:
    """Expand per-subshape expected intensities to a per-node vector."""
    expected = np.zeros(model.n_nodes)
    if model.subshapes:
        for name, members in model.subshapes:
            expected[members] = model.appearance.expected_intensity.get(name, 0.0)
    else:
        default = next(iter(model.appearance.expected_intensity.values()), 0.0)
        expected[:] = default
    return expected
