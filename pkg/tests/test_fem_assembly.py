"""Stiffness/mass/damping assembly against independent mechanics oracles."""

import numpy as np
import pytest
from mesh_helpers import as_model, random_mesh_2d, random_mesh_3d

from cohortlens.fem import (ElasticityParams, Layer2Connection, ModelError,
                            assemble_system, tetra_stiffness, triangle_stiffness)
from cohortlens.fem.model import INNER, AppearanceParams, ShapeModel


def _strain_energy_2d(rest, displaced, E, nu):
    """Continuum-mechanics oracle: plane-stress strain energy of a triangle
    from its deformation map (no B-matrix algebra)."""
    d_rest = np.column_stack([rest[1] - rest[0], rest[2] - rest[0]])
    d_def = np.column_stack([displaced[1] - displaced[0], displaced[2] - displaced[0]])
    f = d_def @ np.linalg.inv(d_rest)
    eps = 0.5 * (f + f.T) - np.eye(2)
    area = abs(np.linalg.det(d_rest)) / 2.0
    mu = E / (2.0 * (1.0 + nu))
    lam_ps = E * nu / (1.0 - nu * nu)
    return area * (0.5 * lam_ps * np.trace(eps) ** 2 + mu * np.sum(eps * eps))


def _strain_energy_3d(rest, displaced, E, nu):
    d_rest = np.column_stack([rest[i] - rest[0] for i in (1, 2, 3)])
    d_def = np.column_stack([displaced[i] - displaced[0] for i in (1, 2, 3)])
    f = d_def @ np.linalg.inv(d_rest)
    eps = 0.5 * (f + f.T) - np.eye(3)
    vol = abs(np.linalg.det(d_rest)) / 6.0
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return vol * (0.5 * lam * np.trace(eps) ** 2 + mu * np.sum(eps * eps))


def _fd_hessian(energy_fn, rest, n_dof, h=1e-5):
    hess = np.zeros((n_dof, n_dof))
    dim = rest.shape[1]

    def energy_at(u):
        return energy_fn(rest, rest + u.reshape(-1, dim))

    for i in range(n_dof):
        for j in range(n_dof):
            u = np.zeros(n_dof)
            u[i] += h
            u[j] += h
            epp = energy_at(u)
            u[j] -= 2 * h
            epm = energy_at(u)
            u[i] -= 2 * h
            emm = energy_at(u)
            u[j] += 2 * h
            emp = energy_at(u)
            hess[i, j] = (epp - epm - emp + emm) / (4 * h * h)
    return hess


class TestElementStiffness:
    def test_triangle_matches_energy_hessian(self):
        rng = np.random.default_rng(0)
        rest = rng.uniform(0, 2, size=(3, 2))
        E, nu = 3.0, 0.25
        ke, _ = triangle_stiffness(rest, E, nu)
        oracle = _fd_hessian(lambda r, d: _strain_energy_2d(r, d, E, nu), rest, 6)
        assert np.allclose(ke, oracle, atol=1e-5 * np.abs(ke).max())

    def test_tetra_matches_energy_hessian(self):
        rng = np.random.default_rng(1)
        rest = rng.uniform(0, 2, size=(4, 3))
        while abs(np.linalg.det(np.column_stack([rest[i] - rest[0] for i in (1, 2, 3)]))) < 0.3:
            rest = rng.uniform(0, 2, size=(4, 3))
        E, nu = 2.0, 0.3
        ke, _ = tetra_stiffness(rest, E, nu)
        oracle = _fd_hessian(lambda r, d: _strain_energy_3d(r, d, E, nu), rest, 12)
        assert np.allclose(ke, oracle, atol=1e-4 * np.abs(ke).max())

    def test_equilateral_triangle_rigid_null_space(self):
        rest = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
        ke, _ = triangle_stiffness(rest, 5.0, 0.3)
        tx = np.array([1, 0, 1, 0, 1, 0], dtype=float)
        ty = np.array([0, 1, 0, 1, 0, 1], dtype=float)
        rot = np.column_stack([-rest[:, 1], rest[:, 0]]).ravel()  # infinitesimal rotation
        for u in (tx, ty, rot):
            assert np.linalg.norm(ke @ u) < 1e-12 * np.linalg.norm(ke)

    def test_degenerate_triangle_rejected(self):
        rest = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
        with pytest.raises(ModelError):
            triangle_stiffness(rest, 1.0, 0.3)


class TestGlobalAssembly:
    def _two_element_model(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        elements = np.array([[0, 1, 2], [0, 2, 3]])
        return as_model(nodes, elements)

    def test_scatter_matches_per_element_assembly(self):
        model = self._two_element_model()
        system = assemble_system(model)
        # independent scatter: add each element's stiffness into a fresh matrix
        oracle = np.zeros_like(system.K)
        for elem in model.elements:
            ke, _ = triangle_stiffness(model.nodes[elem],
                                       model.elasticity.youngs_modulus,
                                       model.elasticity.poissons_ratio)
            dofs = np.repeat(elem, 2) * 2 + np.tile([0, 1], 3)
            for a in range(6):
                for b in range(6):
                    oracle[dofs[a], dofs[b]] += ke[a, b]
        assert np.allclose(system.K, oracle, atol=1e-12)

    def test_doubling_youngs_modulus_doubles_k(self):
        model = self._two_element_model()
        k1 = assemble_system(model).K
        from dataclasses import replace
        model2 = replace(model, elasticity=replace(model.elasticity, youngs_modulus=2 * model.elasticity.youngs_modulus))
        k2 = assemble_system(model2).K
        assert np.allclose(k2, 2.0 * k1, rtol=0, atol=1e-14 * np.abs(k1).max())

    def test_k_symmetric_positive_semidefinite(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            points, elements = random_mesh_2d(rng)
            system = assemble_system(as_model(points, elements))
            asym = np.linalg.norm(system.K - system.K.T) / max(np.linalg.norm(system.K), 1e-30)
            assert asym < 1e-10
            eigvals = np.linalg.eigvalsh(system.K)
            assert eigvals.min() > -1e-10 * max(eigvals.max(), 1.0)

    def test_mass_lumped_positive_and_total(self):
        points, elements = random_mesh_2d(np.random.default_rng(4))
        model = as_model(points, elements)
        system = assemble_system(model)
        m = np.diag(system.M)
        assert np.all(m > 0)
        areas = [triangle_stiffness(points[e], 1.0, 0.3)[1] for e in elements]
        total_mass = model.elasticity.density * sum(areas)
        assert np.isclose(m[0::2].sum(), total_mass)
        assert np.isclose(m[1::2].sum(), total_mass)

    def test_rayleigh_damping_combination(self):
        points, elements = random_mesh_2d(np.random.default_rng(5))
        model = as_model(points, elements)
        system = assemble_system(model)
        alpha, beta = model.elasticity.damping_alpha, model.elasticity.damping_beta
        assert np.allclose(system.D, alpha * system.M + beta * system.K)

    def test_poisson_half_rejected(self):
        with pytest.raises(ModelError):
            ElasticityParams(poissons_ratio=0.5)


class TestLayerTwo:
    def _hier_model(self, kind: str):
        # two disjoint triangles as subshapes
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0],
                          [3.0, 0.0], [4.0, 0.0], [3.0, 1.0]])
        elements = np.array([[0, 1, 2], [3, 4, 5]])
        return ShapeModel(
            nodes=nodes, elements=elements, node_kind=[INNER] * 6,
            elasticity=ElasticityParams(damping_alpha=0.2, damping_beta=0.05),
            appearance=AppearanceParams(channel_weights={"T1": 1.0}),
            subshapes=[("a", [0, 1, 2]), ("b", [3, 4, 5])],
            layer2=[Layer2Connection("a", "b", kind, stiffness=2.0)],
        )

    @pytest.mark.parametrize("kind", ["distance_constraint", "co_deformation"])
    def test_layer2_preserves_rigid_modes(self, kind):
        model = self._hier_model(kind)
        system = assemble_system(model)
        nodes = model.nodes
        tx = np.tile([1.0, 0.0], 6)
        ty = np.tile([0.0, 1.0], 6)
        rot = np.column_stack([-nodes[:, 1], nodes[:, 0]]).ravel()
        for u in (tx, ty, rot):
            assert np.linalg.norm(system.K @ u) < 1e-9

    def test_distance_constraint_penalizes_axis_stretch(self):
        model = self._hier_model("distance_constraint")
        plain = self._hier_model("distance_constraint")
        plain.layer2 = []
        k_conn = assemble_system(model).K
        k_plain = assemble_system(plain).K
        # pull subshape b along the centroid axis (x): energy appears
        u = np.zeros(12)
        u[6::2] = 1.0
        energy = u @ (k_conn - k_plain) @ u
        assert energy > 0.1

    def test_co_deformation_penalizes_differential_strain(self):
        model = self._hier_model("co_deformation")
        plain = self._hier_model("co_deformation")
        plain.layer2 = []
        delta = assemble_system(model).K - assemble_system(plain).K
        # stretch subshape a only, relative to centroid
        u = np.zeros(12)
        ca = model.nodes[:3].mean(axis=0)
        u[0:6:2] = (model.nodes[:3, 0] - ca[0])
        u[1:6:2] = (model.nodes[:3, 1] - ca[1])
        assert u @ delta @ u > 0.1
        # identical centroid-relative motion of both: no extra energy
        cb = model.nodes[3:].mean(axis=0)
        u2 = u.copy()
        u2[6::2] = (model.nodes[3:, 0] - cb[0])
        u2[7::2] = (model.nodes[3:, 1] - cb[1])
        assert abs(u2 @ delta @ u2) < 1e-9


class TestTetraMesh:
    def test_random_3d_assembly_psd(self):
        points, elements = random_mesh_3d(np.random.default_rng(6))
        system = assemble_system(as_model(points, elements))
        eigvals = np.linalg.eigvalsh(system.K)
        assert eigvals.min() > -1e-9 * eigvals.max()
        assert np.all(np.diag(system.M) > 0)
