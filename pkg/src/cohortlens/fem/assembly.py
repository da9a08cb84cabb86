"""Global system assembly: stiffness, lumped mass, Rayleigh damping.

Elements are constant-strain triangles (plane stress, unit thickness) in
2D and linear tetrahedra in 3D. Second-layer connections add penalty
blocks on top of the block-diagonal sub-shape systems: linearized
centroid-distance springs or node-wise co-deformation coupling. Both
leave the rigid-body null space intact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelError, ShapeModel

DEGENERATE_MEASURE = 1e-12


@dataclass
class FemSystem:
    K: np.ndarray
    M: np.ndarray
    D: np.ndarray
    dim: int

    @property
    def n_dof(self) -> int:
        return self.K.shape[0]


def _elastic_matrix_2d(E: float, nu: float) -> np.ndarray:
    # plane stress
    c = E / (1.0 - nu * nu)
    return c * np.array([
        [1.0, nu, 0.0],
        [nu, 1.0, 0.0],
        [0.0, 0.0, (1.0 - nu) / 2.0],
    ])


def _elastic_matrix_3d(E: float, nu: float) -> np.ndarray:
    c = E / ((1.0 + nu) * (1.0 - 2.0 * nu))
    d = np.zeros((6, 6))
    d[:3, :3] = nu
    np.fill_diagonal(d[:3, :3], 1.0 - nu)
    d[3, 3] = d[4, 4] = d[5, 5] = (1.0 - 2.0 * nu) / 2.0
    return c * d


def triangle_stiffness(coords: np.ndarray, E: float, nu: float) -> tuple[np.ndarray, float]:
    """(6x6 element stiffness, area) for a constant-strain triangle."""
    (x1, y1), (x2, y2), (x3, y3) = coords
    two_a = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
    area = abs(two_a) / 2.0
    if area < DEGENERATE_MEASURE:
        raise ModelError("degenerate triangle (zero area)")
    b = np.array([y2 - y3, y3 - y1, y1 - y2]) / two_a
    c = np.array([x3 - x2, x1 - x3, x2 - x1]) / two_a
    bm = np.zeros((3, 6))
    bm[0, 0::2] = b
    bm[1, 1::2] = c
    bm[2, 0::2] = c
    bm[2, 1::2] = b
    ke = area * bm.T @ _elastic_matrix_2d(E, nu) @ bm
    return ke, area


def tetra_stiffness(coords: np.ndarray, E: float, nu: float) -> tuple[np.ndarray, float]:
    """(12x12 element stiffness, volume) for a linear tetrahedron."""
    m = np.column_stack([np.ones(4), coords])
    det = np.linalg.det(m)
    volume = abs(det) / 6.0
    if volume < DEGENERATE_MEASURE:
        raise ModelError("degenerate tetrahedron (zero volume)")
    grads = np.linalg.inv(m)[1:, :]  # (3, 4): d/dx, d/dy, d/dz of each shape fn
    bm = np.zeros((6, 12))
    for i in range(4):
        bx, by, bz = grads[:, i]
        col = 3 * i
        bm[0, col] = bx
        bm[1, col + 1] = by
        bm[2, col + 2] = bz
        bm[3, col] = by
        bm[3, col + 1] = bx
        bm[4, col + 1] = bz
        bm[4, col + 2] = by
        bm[5, col] = bz
        bm[5, col + 2] = bx
    ke = volume * bm.T @ _elastic_matrix_3d(E, nu) @ bm
    return ke, volume


def _element_dofs(element: np.ndarray, dim: int) -> np.ndarray:
    return (element[:, None] * dim + np.arange(dim)[None, :]).ravel()


def _subshape_centroid(nodes: np.ndarray, members: list[int]) -> np.ndarray:
    return nodes[members].mean(axis=0)


def _append_distance_constraint(K: np.ndarray, model: ShapeModel,
                                members_a: list[int], members_b: list[int],
                                stiffness: float) -> None:
    """Linearized scalar spring on the centroid-to-centroid distance.

    Penalizes only motion along the rest-pose centroid axis, so global
    translations and infinitesimal rotations stay unpenalized.
    """
    dim = model.dim
    ca = _subshape_centroid(model.nodes, members_a)
    cb = _subshape_centroid(model.nodes, members_b)
    axis = ca - cb
    norm = np.linalg.norm(axis)
    if norm < DEGENERATE_MEASURE:
        raise ModelError("distance_constraint between coincident centroids")
    axis = axis / norm
    g = np.zeros(K.shape[0])
    for i in members_a:
        g[i * dim:(i + 1) * dim] += axis / len(members_a)
    for j in members_b:
        g[j * dim:(j + 1) * dim] -= axis / len(members_b)
    K += stiffness * np.outer(g, g)


def _append_co_deformation(K: np.ndarray, model: ShapeModel,
                           members_a: list[int], members_b: list[int],
                           stiffness: float) -> None:
    """Couple centroid-relative displacements of corresponding nodes."""
    if len(members_a) != len(members_b):
        raise ModelError("co_deformation needs equal node counts")
    dim = model.dim
    for i, j in zip(members_a, members_b):
        for d in range(dim):
            h = np.zeros(K.shape[0])
            h[i * dim + d] += 1.0
            h[j * dim + d] -= 1.0
            for a in members_a:
                h[a * dim + d] -= 1.0 / len(members_a)
            for b in members_b:
                h[b * dim + d] += 1.0 / len(members_b)
            K += stiffness * np.outer(h, h)


def assemble_system(model: ShapeModel) -> FemSystem:
    """Assemble K (elastic + layer-2), lumped M, and Rayleigh D."""
    dim, n_dof = model.dim, model.n_dof
    el = model.elasticity
    K = np.zeros((n_dof, n_dof))
    m_diag = np.zeros(n_dof)

    stiffness_fn = triangle_stiffness if dim == 2 else tetra_stiffness
    for element in model.elements:
        ke, measure = stiffness_fn(model.nodes[element], el.youngs_modulus,
                                   el.poissons_ratio)
        dofs = _element_dofs(element, dim)
        K[np.ix_(dofs, dofs)] += ke
        # lumped mass: equal share of element mass per node (row sum of the
        # consistent mass matrix for linear simplices)
        share = el.density * measure / (dim + 1)
        m_diag[dofs] += share

    if np.any(m_diag <= 0):
        orphans = np.unique(np.where(m_diag <= 0)[0] // dim)
        raise ModelError(f"nodes without element support: {orphans[:5].tolist()}")

    for conn in model.layer2:
        members_a = model.subshape_nodes(conn.subshape_a)
        members_b = model.subshape_nodes(conn.subshape_b)
        if conn.kind == "distance_constraint":
            _append_distance_constraint(K, model, members_a, members_b, conn.stiffness)
        else:
            _append_co_deformation(K, model, members_a, members_b, conn.stiffness)

    K = (K + K.T) / 2.0
    M = np.diag(m_diag)
    D = el.damping_alpha * M + el.damping_beta * K
    return FemSystem(K=K, M=M, D=D, dim=dim)
