from .assembly import FemSystem, assemble_system, tetra_stiffness, triangle_stiffness
from .fitting import (FitParams, FitResult, InitPose, QualityOfFit, fit, modal_step,
                      pose_nodes, project_displacement, quality_of_fit, select_modes)
from .forces import ForceField, SampledField, expected_intensity_per_node, image_forces
from .modal import EigenSolveError, ModalBasis, modal_decomposition, modal_residuals
from .model import (AppearanceParams, ElasticityParams, Layer2Connection, ModelError,
                    ShapeModel, load_model, write_model)
from .spine import (DetectionResult, SpineModelConfig, SubjectDetection, detect_vertebrae,
                    make_spine_model, render_model_phantom, subshape_center)

__all__ = [
    "FemSystem", "assemble_system", "tetra_stiffness", "triangle_stiffness",
    "FitParams", "FitResult", "InitPose", "QualityOfFit", "fit", "modal_step",
    "pose_nodes", "project_displacement", "quality_of_fit", "select_modes",
    "ForceField", "SampledField", "expected_intensity_per_node", "image_forces",
    "EigenSolveError", "ModalBasis", "modal_decomposition", "modal_residuals",
    "AppearanceParams", "ElasticityParams", "Layer2Connection", "ModelError",
    "ShapeModel", "load_model", "write_model",
    "DetectionResult", "SpineModelConfig", "SubjectDetection", "detect_vertebrae",
    "make_spine_model", "render_model_phantom", "subshape_center",
]
