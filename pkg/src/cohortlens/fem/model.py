"""Deformable shape-model definition: prototype mesh, elasticity, appearance.

A model is a simplex mesh (triangles in 2D, tetrahedra in 3D) with linear
elastic material, per-node role (boundary nodes ride the intensity
gradient, inner nodes seek an expected intensity), optional sub-shapes
and a second layer of connections between sub-shapes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ElasticityParams:
    youngs_modulus: float = 1.0
    poissons_ratio: float = 0.3
    density: float = 1.0
    damping_alpha: float = 0.1
    damping_beta: float = 0.02

    def __post_init__(self):
        if self.youngs_modulus <= 0:
            raise ModelError("youngs_modulus must be positive")
        if not -1.0 < self.poissons_ratio < 0.5:
            raise ModelError("poissons_ratio must lie in (-1, 0.5)")
        if self.density <= 0:
            raise ModelError("density must be positive")


@dataclass
class AppearanceParams:
    """How the model reads the image.

    The force field acts on the weighted channel combination; inner nodes
    are pulled toward expected_intensity of their sub-shape, boundary
    nodes climb the gradient magnitude.
    """

    channel_weights: dict[str, float]
    expected_intensity: dict[str, float] = field(default_factory=dict)  # per subshape
    gradient_gain: float = 1.0
    intensity_gain: float = 1.0
    force_max: float = 10.0

    def __post_init__(self):
        if not any(w != 0 for w in self.channel_weights.values()):
            raise ModelError("at least one non-zero channel weight required")


@dataclass
class Layer2Connection:
    """Second-layer coupling between two sub-shapes."""

    subshape_a: str
    subshape_b: str
    kind: str  # distance_constraint | co_deformation
    stiffness: float = 1.0

    def __post_init__(self):
        if self.kind not in ("distance_constraint", "co_deformation"):
            raise ModelError(f"unknown connection kind {self.kind!r}")
        if self.stiffness < 0:
            raise ModelError("connection stiffness must be >= 0")


BOUNDARY, INNER = "boundary", "inner"


@dataclass
class ShapeModel:
    """Prototype mesh in model space (mm)."""

    nodes: np.ndarray                 # (n_nodes, dim)
    elements: np.ndarray              # (n_elem, dim + 1) node indices
    node_kind: list[str]              # boundary | inner, per node
    elasticity: ElasticityParams
    appearance: AppearanceParams
    subshapes: list[tuple[str, list[int]]] = field(default_factory=list)
    layer2: list[Layer2Connection] = field(default_factory=list)
    centerline_anchors: list[tuple[int, tuple[float, ...]]] = field(default_factory=list)
    name: str = "model"

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.elements = np.asarray(self.elements, dtype=int)
        if self.nodes.ndim != 2 or self.nodes.shape[1] not in (2, 3):
            raise ModelError("nodes must be (n, 2) or (n, 3)")
        if self.elements.ndim != 2 or self.elements.shape[1] != self.dim + 1:
            raise ModelError(f"elements must have {self.dim + 1} nodes each")
        if self.elements.min(initial=0) < 0 or self.elements.max(initial=-1) >= self.n_nodes:
            raise ModelError("element index out of range")
        if len(self.node_kind) != self.n_nodes:
            raise ModelError("node_kind must cover every node")
        if any(k not in (BOUNDARY, INNER) for k in self.node_kind):
            raise ModelError("node_kind entries must be boundary|inner")
        if self.subshapes:
            seen: set[int] = set()
            for name, members in self.subshapes:
                overlap = seen & set(members)
                if overlap:
                    raise ModelError(f"subshape {name!r} overlaps nodes {sorted(overlap)[:5]}")
                seen.update(members)
            if seen != set(range(self.n_nodes)):
                raise ModelError("every node must belong to exactly one subshape")
        names = [n for n, _ in self.subshapes]
        for conn in self.layer2:
            if conn.subshape_a not in names or conn.subshape_b not in names:
                raise ModelError(f"layer2 references unknown subshape "
                                 f"({conn.subshape_a!r}, {conn.subshape_b!r})")
        for elem_id, coords in self.centerline_anchors:
            if not 0 <= elem_id < len(self.elements):
                raise ModelError("anchor element out of range")
            if len(coords) != self.dim + 1:
                raise ModelError("anchor barycentric arity must match element")

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_dof(self) -> int:
        return self.n_nodes * self.dim

    def subshape_nodes(self, name: str) -> list[int]:
        for n, members in self.subshapes:
            if n == name:
                return list(members)
        raise KeyError(f"unknown subshape {name!r}")

    def subshape_names(self) -> list[str]:
        return [n for n, _ in self.subshapes]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "nodes": self.nodes.tolist(),
            "elements": self.elements.tolist(),
            "node_kind": list(self.node_kind),
            "elasticity": {
                "youngs_modulus": self.elasticity.youngs_modulus,
                "poissons_ratio": self.elasticity.poissons_ratio,
                "density": self.elasticity.density,
                "damping_alpha": self.elasticity.damping_alpha,
                "damping_beta": self.elasticity.damping_beta,
            },
            "appearance": {
                "channel_weights": dict(self.appearance.channel_weights),
                "expected_intensity": dict(self.appearance.expected_intensity),
                "gradient_gain": self.appearance.gradient_gain,
                "intensity_gain": self.appearance.intensity_gain,
                "force_max": self.appearance.force_max,
            },
            "subshapes": [[n, list(m)] for n, m in self.subshapes],
            "layer2": [
                {"subshape_a": c.subshape_a, "subshape_b": c.subshape_b,
                 "kind": c.kind, "stiffness": c.stiffness}
                for c in self.layer2
            ],
            "centerline_anchors": [[e, list(c)] for e, c in self.centerline_anchors],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ShapeModel":
        return cls(
            nodes=np.asarray(obj["nodes"], dtype=float),
            elements=np.asarray(obj["elements"], dtype=int),
            node_kind=list(obj["node_kind"]),
            elasticity=ElasticityParams(**obj["elasticity"]),
            appearance=AppearanceParams(**obj["appearance"]),
            subshapes=[(n, list(m)) for n, m in obj.get("subshapes", [])],
            layer2=[Layer2Connection(**c) for c in obj.get("layer2", [])],
            centerline_anchors=[(int(e), tuple(c))
                                for e, c in obj.get("centerline_anchors", [])],
            name=obj.get("name", "model"),
        )


def load_model(path: str | Path) -> ShapeModel:
    return ShapeModel.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def write_model(model: ShapeModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_json()) + "\n", encoding="utf-8")
