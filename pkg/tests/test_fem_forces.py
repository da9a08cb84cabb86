"""Image force field: interpolation, gradient checks, clamping."""

import numpy as np
import pytest

from cohortlens.cohort import ImageVolume
from cohortlens.fem import (AppearanceParams, ElasticityParams, ForceField,
                            SampledField, expected_intensity_per_node, image_forces)
from cohortlens.fem.model import BOUNDARY, INNER, ShapeModel


def _tiny_model(node_kind, expected=0.5, gains=(1.0, 1.0)):
    nodes = np.array([[2.0, 2.0], [3.0, 2.0], [2.5, 3.0]])
    return ShapeModel(
        nodes=nodes, elements=np.array([[0, 1, 2]]), node_kind=node_kind,
        elasticity=ElasticityParams(),
        appearance=AppearanceParams(channel_weights={"I": 1.0},
                                    expected_intensity={"all": expected},
                                    gradient_gain=gains[0], intensity_gain=gains[1],
                                    force_max=100.0),
        subshapes=[("all", [0, 1, 2])],
    )


def _image(grid):
    return ImageVolume(dims=grid.shape, spacing=(1.0, 1.0), channels={"I": grid})


class TestSampledField:
    def test_lattice_points_exact(self):
        rng = np.random.default_rng(0)
        grid = rng.uniform(size=(6, 7))
        f = SampledField(grid, (1.0, 1.0))
        pts = np.array([[2.0, 3.0], [0.0, 0.0], [5.0, 6.0]])
        values, _, inside = f.sample(pts)
        assert values[0] == grid[2, 3]
        assert values[1] == grid[0, 0]
        assert values[2] == grid[5, 6]
        assert inside.all()

    def test_gradient_matches_finite_difference_of_interpolant(self):
        rng = np.random.default_rng(1)
        grid = rng.uniform(size=(8, 8))
        f = SampledField(grid, (0.5, 0.7))
        pts = rng.uniform(0.6, 2.9, size=(30, 2))
        _, grads, _ = f.sample(pts)
        h = 1e-6
        for axis in range(2):
            dp = np.zeros(2)
            dp[axis] = h
            vp, _, _ = f.sample(pts + dp)
            vm, _, _ = f.sample(pts - dp)
            fd = (vp - vm) / (2 * h)
            assert np.allclose(grads[:, axis], fd, rtol=1e-4, atol=1e-7)

    def test_trilinear_gradient_matches_fd(self):
        rng = np.random.default_rng(2)
        grid = rng.uniform(size=(5, 6, 7))
        f = SampledField(grid, (1.0, 0.8, 1.2))
        pts = rng.uniform(0.6, 3.2, size=(20, 3))
        _, grads, _ = f.sample(pts)
        h = 1e-6
        for axis in range(3):
            dp = np.zeros(3)
            dp[axis] = h
            vp, _, _ = f.sample(pts + dp)
            vm, _, _ = f.sample(pts - dp)
            assert np.allclose(grads[:, axis], (vp - vm) / (2 * h), rtol=1e-4, atol=1e-7)

    def test_outside_flagged(self):
        f = SampledField(np.zeros((4, 4)), (1.0, 1.0))
        _, _, inside = f.sample(np.array([[-0.5, 1.0], [1.0, 1.0], [3.5, 1.0]]))
        assert inside.tolist() == [False, True, False]


class TestImageForces:
    def test_uniform_image_zero_forces(self):
        model = _tiny_model([INNER, INNER, BOUNDARY], expected=0.7)
        image = _image(np.full((8, 8), 0.7))
        field = ForceField.from_image(image, model.appearance.channel_weights)
        forces, outside = image_forces(model.nodes, model, field,
                                       expected_intensity_per_node(model))
        assert np.allclose(forces, 0.0)
        assert not outside.any()

    def test_inner_node_at_expected_intensity_zero_force(self):
        # smooth ramp: node intensity equals expected -> zero inner force
        xs = np.arange(8.0)
        grid = np.tile(xs[:, None] / 10.0, (1, 8))
        model = _tiny_model([INNER, INNER, INNER], expected=0.2)
        field = ForceField.from_image(_image(grid), {"I": 1.0})
        positions = np.array([[2.0, 3.0], [2.0, 4.0], [2.0, 5.0]])  # intensity 0.2
        forces, _ = image_forces(positions, model, field,
                                 expected_intensity_per_node(model))
        assert np.allclose(forces, 0.0, atol=1e-14)

    def test_inner_force_is_negative_penalty_gradient(self):
        # smooth synthetic image; force must equal -d/dx (I - e)^2 by finite differences
        x, y = np.meshgrid(np.arange(12.0), np.arange(12.0), indexing="ij")
        grid = 0.4 + 0.3 * np.sin(x / 3.0) * np.cos(y / 4.0)
        model = _tiny_model([INNER, INNER, INNER], expected=0.45)
        field = ForceField.from_image(_image(grid), {"I": 1.0})
        expected = expected_intensity_per_node(model)
        rng = np.random.default_rng(3)
        positions = rng.uniform(1.3, 9.7, size=(40, 2))

        def penalty(pts):
            v, _, _ = field.intensity.sample(pts)
            return (v - 0.45) ** 2

        h = 1e-5
        for i in range(0, 39, 3):
            batch = positions[i:i + 3]
            forces, _ = image_forces(batch, model, field, expected)
            for axis in range(2):
                dp = np.zeros(2)
                dp[axis] = h
                fd = (penalty(batch + dp) - penalty(batch - dp)) / (2 * h)
                assert np.allclose(forces[:, axis], -fd, rtol=1e-4, atol=1e-9)

    def test_boundary_force_climbs_gradient_magnitude(self):
        # 1D ramp with a steep center: max |grad| at the steep band
        x = np.arange(20.0)
        profile = 1.0 / (1.0 + np.exp(-(x - 10.0)))  # sigmoid, steepest at x=10
        grid = np.tile(profile[:, None], (1, 8))
        model = _tiny_model([BOUNDARY, BOUNDARY, BOUNDARY])
        field = ForceField.from_image(_image(grid), {"I": 1.0})
        expected = expected_intensity_per_node(model)
        # dense-grid oracle: force should point toward x = 10 from both sides
        left = np.array([[7.1, 4.0], [7.6, 3.0], [8.2, 5.0]])
        right = np.array([[12.9, 4.0], [12.4, 3.0], [11.8, 5.0]])
        f_left, _ = image_forces(left, model, field, expected)
        f_right, _ = image_forces(right, model, field, expected)
        assert np.all(f_left[:, 0] > 0)
        assert np.all(f_right[:, 0] < 0)

    def test_out_of_bounds_zero_and_flagged(self):
        model = _tiny_model([INNER, INNER, INNER])
        field = ForceField.from_image(_image(np.random.default_rng(1).uniform(size=(6, 6))),
                                      {"I": 1.0})
        positions = np.array([[-2.0, 3.0], [2.0, 3.0], [2.0, 9.0]])
        forces, outside = image_forces(positions, model, field,
                                       expected_intensity_per_node(model))
        assert outside.tolist() == [True, False, True]
        assert np.allclose(forces[0], 0) and np.allclose(forces[2], 0)

    def test_force_clamped_to_max(self):
        model = _tiny_model([INNER, INNER, INNER], expected=5000.0)
        model.appearance.force_max = 0.25
        grid = np.tile(np.arange(8.0)[:, None] * 100, (1, 8))
        field = ForceField.from_image(_image(grid), {"I": 1.0})
        forces, _ = image_forces(model.nodes, model, field,
                                 expected_intensity_per_node(model))
        norms = np.linalg.norm(forces, axis=1)
        assert np.all(norms <= 0.25 + 1e-12)
        assert norms.max() == pytest.approx(0.25)
