"""Random valid test meshes (2D triangulations, 3D tetrahedralizations)."""

import numpy as np
from scipy.spatial import Delaunay

from cohortlens.fem import AppearanceParams, ElasticityParams, ShapeModel
from cohortlens.fem.model import INNER


def _connected(n_nodes: int, elements: np.ndarray) -> bool:
    parent = list(range(n_nodes))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for elem in elements:
        r = find(elem[0])
        for other in elem[1:]:
            parent[find(other)] = r
    return len({find(i) for i in range(n_nodes)}) == 1


def random_mesh_2d(rng: np.random.Generator, grid: int = 3, jitter: float = 0.25):
    """Jittered-grid Delaunay triangulation; retries until well-conditioned."""
    while True:
        base = np.stack(np.meshgrid(np.arange(grid), np.arange(grid)), -1).reshape(-1, 2)
        points = base + rng.uniform(-jitter, jitter, size=base.shape)
        tri = Delaunay(points)
        elements = tri.simplices
        e1 = points[elements[:, 1]] - points[elements[:, 0]]
        e2 = points[elements[:, 2]] - points[elements[:, 0]]
        areas = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]) / 2
        keep = elements[areas > 0.1 * areas.mean()]
        used = np.unique(keep)
        if len(used) == len(points) and _connected(len(points), keep):
            return points, keep


def random_mesh_3d(rng: np.random.Generator, grid: tuple = (3, 3, 2), jitter: float = 0.2):
    while True:
        axes = [np.arange(g) for g in grid]
        base = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3).astype(float)
        points = base + rng.uniform(-jitter, jitter, size=base.shape)
        tet = Delaunay(points)
        elements = tet.simplices
        d = points[elements[:, 1:]] - points[elements[:, :1]]
        vols = np.abs(np.linalg.det(d)) / 6.0
        keep = elements[vols > 0.15 * vols.mean()]
        used = np.unique(keep)
        if len(used) == len(points) and _connected(len(points), keep):
            return points, keep


def as_model(points: np.ndarray, elements: np.ndarray,
             elasticity: ElasticityParams | None = None) -> ShapeModel:
    return ShapeModel(
        nodes=points,
        elements=elements,
        node_kind=[INNER] * len(points),
        elasticity=elasticity or ElasticityParams(damping_alpha=0.2, damping_beta=0.05),
        appearance=AppearanceParams(channel_weights={"T1": 1.0},
                                    expected_intensity={}),
    )
