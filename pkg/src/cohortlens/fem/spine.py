"""Sagittal spine prototype: 5 vertebra sub-shapes plus a canal strip.

Mirrors the phantom layout: vertebra sub-shapes are diamond meshes of
inner nodes seeking blob-core intensity; the canal is a two-column strip
of inner nodes seeking the dark band value at its half-width. Sub-shapes
are tied together by second-layer distance constraints. All prototype
coordinates are integers (mm) so a rendered fixed-point image can hold
the expected intensity exactly at every node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..cohort.images import ImageVolume
from ..cohort.synthetic import N_CENTERLINE_POINTS, PhantomParams
from .fitting import FitParams, FitResult, InitPose, fit
from .model import INNER, AppearanceParams, ElasticityParams, Layer2Connection, ShapeModel

PGM_MAX = 65535.0
T1_WEIGHT = 0.6
T2_WEIGHT = 0.4
# Diamond ring offsets follow the blob ellipse: (rx/sigma_x)^2 == (ry/sigma_y)^2
# so all four ring nodes share one intensity contour.
DIAMOND_RX_MM = 4
DIAMOND_RY_MM = 5
CANAL_HALF_WIDTH_MM = 3
CANAL_ROW_STEP_MM = 10


def combine_values(channel_weights: dict[str, float], values: dict[str, float]) -> float:
    """Accumulate exactly like ImageVolume.combined does, term by term."""
    out = 0.0
    for name, w in channel_weights.items():
        if w == 0:
            continue
        out = out + w * values[name]
    return out


def _blob_channel_values(params: PhantomParams, radius_x_mm: float) -> dict[str, float]:
    g = math.exp(-radius_x_mm ** 2 / (2.0 * params.blob_sigma_x_mm ** 2))
    return {
        "T1": (params.background + params.t1_blob_gain * params.blob_amplitude * g) * PGM_MAX,
        "T2": (params.background + params.t2_blob_gain * params.blob_amplitude * g) * PGM_MAX,
    }


def _band_channel_values(params: PhantomParams, offset_mm: float) -> dict[str, float]:
    g = math.exp(-offset_mm ** 2 / (2.0 * params.band_sigma_mm ** 2))
    return {
        "T1": (params.background - params.t1_band_gain * params.band_depth * g) * PGM_MAX,
        "T2": (params.background - params.t2_band_gain * params.band_depth * g) * PGM_MAX,
    }


def _diamond(center: tuple[int, int], rx: int, ry: int, start: int):
    cx, cy = center
    nodes = [(cx, cy), (cx + rx, cy), (cx, cy + ry),
             (cx - rx, cy), (cx, cy - ry)]
    c, e, n, w, s = range(start, start + 5)
    elements = [(c, e, n), (c, n, w), (c, w, s), (c, s, e)]
    return nodes, elements


def _strip(x: int, half_width: int, y_top: int, length: int, step: int, start: int):
    rows = length // step + 1
    nodes = []
    for r in range(rows):
        y = y_top + r * step
        nodes.append((x - half_width, y))
        nodes.append((x + half_width, y))
    elements = []
    for r in range(rows - 1):
        l0, r0 = start + 2 * r, start + 2 * r + 1
        l1, r1 = start + 2 * (r + 1), start + 2 * (r + 1) + 1
        elements.append((l0, r0, l1))
        elements.append((r0, r1, l1))
    return nodes, elements


@dataclass
class SpineModelConfig:
    phantom: PhantomParams = field(default_factory=PhantomParams)
    youngs_modulus: float = 0.3
    poissons_ratio: float = 0.3
    density: float = 1.0
    damping_alpha: float = 0.2
    damping_beta: float = 0.05
    connection_stiffness: float = 0.002
    intensity_gain: float = 1.0
    force_max: float = 0.5


def make_spine_model(config: SpineModelConfig = SpineModelConfig()) -> ShapeModel:
    """Build the hierarchical spine prototype over the phantom layout."""
    p = config.phantom
    if not math.isclose(p.blob_sigma_y_mm / p.blob_sigma_x_mm, DIAMOND_RY_MM / DIAMOND_RX_MM):
        raise ValueError("blob ellipse must match diamond ring offsets "
                         "(sigma_y/sigma_x == ry/rx) for a single ring intensity")
    canal_x = int(round(p.canal_x_mm))
    canal_top = int(round(p.canal_top_mm))
    canal_len = int(round(p.canal_length_mm))

    nodes: list[tuple[int, int]] = []
    elements: list[tuple[int, int, int]] = []
    subshapes: list[tuple[str, list[int]]] = []

    strip_nodes, strip_elements = _strip(canal_x, CANAL_HALF_WIDTH_MM, canal_top,
                                         canal_len, CANAL_ROW_STEP_MM, start=0)
    nodes.extend(strip_nodes)
    elements.extend(strip_elements)
    subshapes.append(("canal", list(range(len(strip_nodes)))))

    weights = {"T1": T1_WEIGHT / PGM_MAX, "T2": T2_WEIGHT / PGM_MAX}
    expected = {
        "canal": combine_values(weights, _band_channel_values(p, CANAL_HALF_WIDTH_MM)),
    }

    vert_names = []
    for i in range(p.n_vertebrae):
        t = (i + 0.5) / p.n_vertebrae
        cy = int(round(p.canal_top_mm + t * p.canal_length_mm))
        cx = int(round(p.canal_x_mm - p.vertebra_offset_mm))
        start = len(nodes)
        dn, de = _diamond((cx, cy), DIAMOND_RX_MM, DIAMOND_RY_MM, start)
        nodes.extend(dn)
        elements.extend(de)
        name = f"vert{i + 1}"
        vert_names.append(name)
        subshapes.append((name, list(range(start, start + 5))))
        expected[name] = combine_values(weights, _blob_channel_values(p, DIAMOND_RX_MM))

    layer2 = [Layer2Connection(name, "canal", "distance_constraint",
                               config.connection_stiffness) for name in vert_names]
    layer2 += [Layer2Connection(vert_names[i], vert_names[i + 1], "distance_constraint",
                                config.connection_stiffness)
               for i in range(len(vert_names) - 1)]

    # 93 centerline anchors along the strip midline, uniform in arc length
    anchors = []
    node_arr = np.asarray(nodes, dtype=float)
    elem_arr = np.asarray(elements, dtype=int)
    for t in np.linspace(0.0, 1.0, N_CENTERLINE_POINTS):
        y = p.canal_top_mm + t * p.canal_length_mm
        point = np.array([p.canal_x_mm, min(y, canal_top + canal_len - 1e-9)])
        anchors.append(_locate_anchor(point, node_arr, elem_arr))

    return ShapeModel(
        nodes=node_arr,
        elements=elem_arr,
        node_kind=[INNER] * len(nodes),
        elasticity=ElasticityParams(
            youngs_modulus=config.youngs_modulus, poissons_ratio=config.poissons_ratio,
            density=config.density, damping_alpha=config.damping_alpha,
            damping_beta=config.damping_beta),
        appearance=AppearanceParams(
            channel_weights=weights, expected_intensity=expected,
            intensity_gain=config.intensity_gain, force_max=config.force_max),
        subshapes=subshapes,
        layer2=layer2,
        centerline_anchors=anchors,
        name="lumbar_spine_2d",
    )


def _locate_anchor(point: np.ndarray, nodes: np.ndarray,
                   elements: np.ndarray) -> tuple[int, tuple[float, float, float]]:
    """Find the element containing a point and its barycentric coordinates."""
    for elem_id, elem in enumerate(elements):
        a, b, c = nodes[elem]
        m = np.column_stack([b - a, c - a])
        try:
            wbc = np.linalg.solve(m, point - a)
        except np.linalg.LinAlgError:
            continue
        w = np.array([1.0 - wbc.sum(), wbc[0], wbc[1]])
        if np.all(w >= -1e-9):
            return int(elem_id), tuple(np.clip(w, 0.0, 1.0))
    raise ValueError(f"point {point} not inside any element")


def render_model_phantom(model: ShapeModel, dims: tuple[int, int],
                         spacing: tuple[float, float] = (1.0, 1.0),
                         params: PhantomParams = PhantomParams()) -> ImageVolume:
    """Render the image in which the prototype is an exact equilibrium.

    The analytic phantom is evaluated on the grid, then every node's
    lattice sample is stamped with the exact channel values its expected
    intensity was derived from, making the image force identically zero
    at the prototype pose (requires integer node coordinates and inner
    nodes only).
    """
    from ..cohort.synthetic import render_phantom, vertebra_centers

    strip = model.subshape_nodes("canal")
    ys = np.unique(model.nodes[strip][:, 1])
    xs = np.full_like(ys, params.canal_x_mm)
    t = np.linspace(0.0, 1.0, N_CENTERLINE_POINTS)
    line_y = ys.min() + t * (ys.max() - ys.min())
    centerline = np.column_stack([np.interp(line_y, ys, xs), line_y, np.zeros_like(line_y)])
    centers = vertebra_centers(centerline, params)

    image = render_phantom(centerline, centers, dims, spacing, params, noise_sigma=0.0)
    t1 = image.channels["T1"].astype(float)
    t2 = image.channels["T2"].astype(float)

    for name, members in model.subshapes:
        if name == "canal":
            values = _band_channel_values(params, CANAL_HALF_WIDTH_MM)
        else:
            values = _blob_channel_values(params, DIAMOND_RX_MM)
        for idx in members:
            vx, vy = model.nodes[idx] / np.asarray(spacing)
            ix, iy = int(round(vx)), int(round(vy))
            if abs(vx - ix) > 1e-12 or abs(vy - iy) > 1e-12:
                raise ValueError("fixed-point render needs lattice-aligned nodes")
            t1[ix, iy] = values["T1"]
            t2[ix, iy] = values["T2"]

    return ImageVolume(dims=dims, spacing=spacing, channels={"T1": t1, "T2": t2})


@dataclass
class SubjectDetection:
    subject_index: int
    centers: dict[str, tuple[float, ...]]
    successes: dict[str, bool] | None
    converged: bool
    steps: int
    elapsed: float
    fit_result: FitResult


@dataclass
class DetectionResult:
    subjects: list[SubjectDetection]

    @property
    def success_rate(self) -> float:
        flags = [all(s.successes.values()) for s in self.subjects if s.successes is not None]
        return float(np.mean(flags)) if flags else float("nan")


def subshape_center(positions: np.ndarray, members: list[int]) -> np.ndarray:
    return positions[members].mean(axis=0)


def detect_vertebrae(model: ShapeModel, images: list[ImageVolume], init: InitPose,
                     truth=None, params: FitParams = FitParams()) -> DetectionResult:
    """Fit the model to each image and score vertebra-center placement.

    With ground truth, a vertebra is a success when the fitted sub-shape
    center lies inside the true blob extent; without it, centers are
    reported and success flags omitted.
    """
    vert_names = [n for n in model.subshape_names() if n.startswith("vert")]
    out: list[SubjectDetection] = []
    for idx, image in enumerate(images):
        result = fit(model, image, init, params)
        centers = {
            name: tuple(subshape_center(result.final_node_positions,
                                        model.subshape_nodes(name)))
            for name in vert_names
        }
        successes = None
        if truth is not None:
            t = truth.subjects[idx]
            successes = {}
            for name, center in centers.items():
                i = int(name.replace("vert", "")) - 1
                true_c = np.asarray(t.vertebra_centers_mm[i])
                dist = float(np.linalg.norm(np.asarray(center) - true_c))
                successes[name] = dist <= t.vertebra_radius_mm
        out.append(SubjectDetection(subject_index=idx, centers=centers,
                                    successes=successes, converged=result.converged,
                                    steps=result.steps, elapsed=result.elapsed,
                                    fit_result=result))
    return DetectionResult(subjects=out)
