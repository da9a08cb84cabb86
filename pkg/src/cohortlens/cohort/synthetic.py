"""Seeded synthetic cohort and spine-phantom generator.

Desk-scale stand-in for real study data: each subject gets mixed-type
attributes and a sagittal grayscale phantom (5 bright vertebra blobs plus
a dark canal band) whose canal centerline follows a planted shape class.
Everything is deterministic for a fixed (spec, seed) and the ground truth
records what was planted, so downstream recovery can be scored exactly.

Planted structure:
  - centerline shape classes: class 0 is near-straight; classes 1..k-1
    are phase-shifted S-curves (equal curvature magnitude, distinct shape);
  - a height -> curvature link with configurable sign (default: taller
    subjects have straighter canals);
  - two attribute-space groups (a "risk" profile with elevated weight,
    smoking and back-pain frequency) for density clustering to recover;
  - scalar-scalar correlations with declared signs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dictionary import AttributeDef, DataDictionary
from .images import ImageVolume
from .records import MISSING, Cohort, SubjectRecord

N_CENTERLINE_POINTS = 93


@dataclass(frozen=True)
class PhantomParams:
    """Geometry and intensity layout of the sagittal spine phantom.

    Vertebra blobs are slightly elliptical and the canal band fades just
    beyond the canal span, so a fitted model has no force-free rotation
    or slide directions left.
    """

    background: float = 0.35
    blob_amplitude: float = 0.45
    blob_sigma_x_mm: float = 5.0
    blob_sigma_y_mm: float = 6.25
    band_depth: float = 0.25
    band_sigma_mm: float = 3.0
    band_taper_mm: float = 8.0
    t1_blob_gain: float = 1.0
    t1_band_gain: float = 0.5
    t2_blob_gain: float = 0.4
    t2_band_gain: float = 1.0
    canal_x_mm: float = 58.0
    canal_top_mm: float = 20.0
    canal_length_mm: float = 120.0
    n_vertebrae: int = 5
    vertebra_offset_mm: float = 14.0
    vertebra_radius_mm: float = 4.5
    amplitude_mm: float = 7.0


@dataclass
class SyntheticSpec:
    """What to generate and which effects to plant."""

    n_subjects: int
    n_clusters: int = 1
    noise: str = "low"
    with_images: bool = True
    image_dims: tuple[int, int] = (96, 160)
    spacing: tuple[float, float] = (1.0, 1.0)
    missing_rate: float = 0.02
    attr_group_fraction: float = 0.35
    height_curvature_sign: int = -1
    scalar_correlations: tuple[tuple[str, str, int], ...] = (
        ("height_cm", "weight_kg", +1),
    )
    phantom: PhantomParams = field(default_factory=PhantomParams)


NOISE_LEVELS = {
    "low": (0.25, 0.004),
    "medium": (0.6, 0.015),
    "high": (1.2, 0.05),
}


@dataclass
class SubjectTruth:
    subject_id: str
    shape_class: int
    attr_group: int
    curvature_scale: float
    vertebra_centers_mm: list[tuple[float, float]]
    vertebra_radius_mm: float
    centerline_mm: np.ndarray  # (93, 3), z = 0 for 2D phantoms


@dataclass
class GroundTruth:
    subjects: list[SubjectTruth]
    n_shape_classes: int
    planted: dict

    def by_id(self, subject_id: str) -> SubjectTruth:
        return next(t for t in self.subjects if t.subject_id == subject_id)

    def shape_labels(self) -> list[int]:
        return [t.shape_class for t in self.subjects]


def default_dictionary() -> DataDictionary:
    na = ("NA",)
    return DataDictionary([
        AttributeDef("sex", "nominal", categories=("female", "male"), missing_codes=na),
        AttributeDef("smoker", "nominal", categories=("no", "yes"), missing_codes=na),
        AttributeDef("work_type", "nominal", categories=("office", "mixed", "manual"),
                     missing_codes=na),
        AttributeDef("back_pain_freq", "ordinal",
                     categories=("never", "rarely", "often", "daily"), missing_codes=na),
        AttributeDef("activity_level", "ordinal",
                     categories=("low", "medium", "high"), missing_codes=na),
        AttributeDef("height_cm", "scalar", unit="cm", valid_range=(100.0, 220.0),
                     missing_codes=na),
        AttributeDef("weight_kg", "scalar", unit="kg", valid_range=(30.0, 250.0),
                     missing_codes=na),
        AttributeDef("age_years", "scalar", unit="years", valid_range=(18.0, 95.0),
                     missing_codes=na),
    ])


def shape_class_profile(shape_class: int, n_classes: int, t: np.ndarray) -> np.ndarray:
    """Unit lateral profile of a planted shape class over t in [0, 1].

    Class 0 is straight. Classes 1..k-1 are a full-period sine at evenly
    spaced phases: same curvature magnitude, clearly different shapes.
    """
    if shape_class == 0:
        return np.zeros_like(t)
    phase = 2.0 * math.pi * (shape_class - 1) / max(n_classes - 1, 1)
    return np.sin(2.0 * math.pi * t + phase)


def curvature_multiplier(height_cm: float, sign: int) -> float:
    """Planted link between body height and canal curvature amplitude."""
    m = 1.0 + sign * 0.012 * (height_cm - 170.0)
    return float(np.clip(m, 0.6, 1.4))


def planted_centerline(shape_class: int, n_classes: int, scale: float,
                       params: PhantomParams, noise_mm: float,
                       rng: np.random.Generator) -> np.ndarray:
    """93-point planted centerline in mm, z = 0."""
    t = np.linspace(0.0, 1.0, N_CENTERLINE_POINTS)
    lateral = params.amplitude_mm * scale * shape_class_profile(shape_class, n_classes, t)
    x = params.canal_x_mm + lateral + rng.normal(0.0, noise_mm, size=t.shape)
    y = params.canal_top_mm + t * params.canal_length_mm
    return np.column_stack([x, y, np.zeros_like(t)])


def _centerline_x_at(centerline: np.ndarray, y: np.ndarray,
                     params: PhantomParams) -> np.ndarray:
    """Lateral canal position for arbitrary heights (clamped past the ends)."""
    t = np.clip((y - params.canal_top_mm) / params.canal_length_mm, 0.0, 1.0)
    ts = np.linspace(0.0, 1.0, len(centerline))
    return np.interp(t, ts, centerline[:, 0])


def vertebra_centers(centerline: np.ndarray, params: PhantomParams) -> list[tuple[float, float]]:
    ts = (np.arange(params.n_vertebrae) + 0.5) / params.n_vertebrae
    ys = params.canal_top_mm + ts * params.canal_length_mm
    xs = _centerline_x_at(centerline, ys, params) - params.vertebra_offset_mm
    return [(float(x), float(y)) for x, y in zip(xs, ys)]


def render_phantom(centerline: np.ndarray, centers: list[tuple[float, float]],
                   dims: tuple[int, int], spacing: tuple[float, float],
                   params: PhantomParams, noise_sigma: float = 0.0,
                   rng: np.random.Generator | None = None) -> ImageVolume:
    """Render T1/T2-style channels of the spine phantom, quantized to 16 bit."""
    nx, ny = dims
    xs = np.arange(nx) * spacing[0]
    ys = np.arange(ny) * spacing[1]
    gx, gy = np.meshgrid(xs, ys, indexing="ij")

    canal_x = _centerline_x_at(centerline, ys, params)
    band = np.exp(-((gx - canal_x[None, :]) ** 2) / (2.0 * params.band_sigma_mm ** 2))
    # fade the band just beyond the canal span (C1 at the span ends)
    y_lo, y_hi = params.canal_top_mm, params.canal_top_mm + params.canal_length_mm
    dy = np.maximum(np.maximum(y_lo - gy, gy - y_hi), 0.0)
    band *= np.exp(-dy ** 2 / (2.0 * params.band_taper_mm ** 2))

    blobs = np.zeros_like(gx)
    for cx, cy in centers:
        r2 = ((gx - cx) ** 2 / params.blob_sigma_x_mm ** 2
              + (gy - cy) ** 2 / params.blob_sigma_y_mm ** 2)
        blobs += np.exp(-r2 / 2.0)

    t1 = (params.background
          + params.t1_blob_gain * params.blob_amplitude * blobs
          - params.t1_band_gain * params.band_depth * band)
    t2 = (params.background
          + params.t2_blob_gain * params.blob_amplitude * blobs
          - params.t2_band_gain * params.band_depth * band)

    if noise_sigma > 0.0 and rng is not None:
        t1 = t1 + rng.normal(0.0, noise_sigma, size=t1.shape)
        t2 = t2 + rng.normal(0.0, noise_sigma, size=t2.shape)

    def quantize(grid: np.ndarray) -> np.ndarray:
        return np.rint(np.clip(grid, 0.0, 1.0) * 65535.0)

    return ImageVolume(dims=dims, spacing=spacing,
                       channels={"T1": quantize(t1), "T2": quantize(t2)})


def _sample_attributes(rng: np.random.Generator, group: int, curv_norm: float,
                       spec: SyntheticSpec) -> dict:
    height = float(np.clip(rng.normal(171.0, 9.0), 150.0, 195.0))
    weight = -55.0 + 0.75 * height + 22.0 * group + rng.normal(0.0, 7.0)
    for a, b, sign in spec.scalar_correlations:
        if (a, b) == ("height_cm", "weight_kg") and sign < 0:
            weight = 200.0 - 0.75 * height + 22.0 * group + rng.normal(0.0, 7.0)
    weight = float(np.clip(weight, 40.0, 180.0))
    age = float(np.clip(rng.normal(52.0, 12.0), 20.0, 88.0))

    pain_latent = 0.55 * group + 0.18 * curv_norm + rng.normal(0.0, 0.16)
    pain = int(np.searchsorted([0.22, 0.45, 0.72], pain_latent))
    activity_latent = rng.normal(0.55, 0.22) - 0.28 * group
    activity = int(np.searchsorted([0.3, 0.62], activity_latent))
    work = int(rng.choice(3, p=[0.15, 0.25, 0.6] if group else [0.55, 0.3, 0.15]))

    return {
        "sex": int(rng.random() < 0.5),
        "smoker": int(rng.random() < (0.68 if group else 0.22)),
        "work_type": work,
        "back_pain_freq": pain,
        "activity_level": activity,
        "height_cm": height,
        "weight_kg": weight,
        "age_years": age,
    }, height


def generate_synthetic_cohort(spec: SyntheticSpec, seed: int
                              ) -> tuple[Cohort, list[ImageVolume], GroundTruth]:
    """Generate (cohort, phantom images, ground truth) for a spec and seed.

    Deterministic: identical (spec, seed) yields identical outputs.
    """
    if spec.n_subjects <= 0:
        raise ValueError("spec needs at least 1 subject")
    if spec.n_clusters <= 0:
        raise ValueError("spec needs at least 1 shape cluster")
    noise_key = spec.noise if spec.noise in NOISE_LEVELS else "low"
    line_noise, image_noise = NOISE_LEVELS[noise_key]

    rng = np.random.default_rng(seed)
    dictionary = default_dictionary()
    params = spec.phantom

    n, k = spec.n_subjects, spec.n_clusters
    classes = rng.permutation(np.tile(np.arange(k), math.ceil(n / k))[:n])

    subjects: list[SubjectRecord] = []
    truths: list[SubjectTruth] = []
    images: list[ImageVolume] = []
    width = max(4, len(str(n)))

    for i in range(n):
        subject_id = f"subj{i + 1:0{width}d}"
        shape_class = int(classes[i])
        group = int(rng.random() < spec.attr_group_fraction)

        curv_norm = 0.0 if shape_class == 0 else 1.0
        values, height = _sample_attributes(rng, group, curv_norm, spec)
        scale = curvature_multiplier(height, spec.height_curvature_sign)

        centerline = planted_centerline(shape_class, k, scale, params, line_noise, rng)
        centers = vertebra_centers(centerline, params)

        if spec.missing_rate > 0:
            for name in list(values):
                if rng.random() < spec.missing_rate:
                    values[name] = MISSING

        typed: dict = {}
        for name, v in values.items():
            if v is MISSING:
                typed[name] = MISSING
            elif dictionary[name].kind == "scalar":
                typed[name] = float(v)
            else:
                typed[name] = int(v)

        subjects.append(SubjectRecord(id=subject_id, values=typed))
        truths.append(SubjectTruth(
            subject_id=subject_id, shape_class=shape_class, attr_group=group,
            curvature_scale=scale, vertebra_centers_mm=centers,
            vertebra_radius_mm=params.vertebra_radius_mm, centerline_mm=centerline,
        ))
        if spec.with_images:
            images.append(render_phantom(centerline, centers, spec.image_dims,
                                         spec.spacing, params, image_noise, rng))

    cohort = Cohort(dictionary=dictionary, subjects=subjects, wave="synthetic")
    truth = GroundTruth(
        subjects=truths, n_shape_classes=k,
        planted={
            "height_curvature_sign": spec.height_curvature_sign,
            "scalar_correlations": [list(c) for c in spec.scalar_correlations],
            "attr_group_fraction": spec.attr_group_fraction,
            "noise": noise_key,
        },
    )
    return cohort, images, truth


def write_ground_truth(truth: GroundTruth, path: str | Path) -> None:
    obj = {
        "n_shape_classes": truth.n_shape_classes,
        "planted": truth.planted,
        "subjects": [
            {
                "subject_id": t.subject_id,
                "shape_class": t.shape_class,
                "attr_group": t.attr_group,
                "curvature_scale": t.curvature_scale,
                "vertebra_centers_mm": [list(c) for c in t.vertebra_centers_mm],
                "vertebra_radius_mm": t.vertebra_radius_mm,
                "centerline_mm": t.centerline_mm.tolist(),
            }
            for t in truth.subjects
        ],
    }
    Path(path).write_text(json.dumps(obj) + "\n", encoding="utf-8")


def read_ground_truth(path: str | Path) -> GroundTruth:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    subjects = [
        SubjectTruth(
            subject_id=t["subject_id"], shape_class=t["shape_class"],
            attr_group=t["attr_group"], curvature_scale=t["curvature_scale"],
            vertebra_centers_mm=[tuple(c) for c in t["vertebra_centers_mm"]],
            vertebra_radius_mm=t["vertebra_radius_mm"],
            centerline_mm=np.asarray(t["centerline_mm"], dtype=float),
        )
        for t in obj["subjects"]
    ]
    return GroundTruth(subjects=subjects, n_shape_classes=obj["n_shape_classes"],
                       planted=obj["planted"])
