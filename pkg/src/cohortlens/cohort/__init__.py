from .dictionary import (AttributeDef, DataDictionary, DictionaryError,
                         DuplicateAttribute, load_dictionary, write_dictionary)
from .images import ImageVolume, read_pgm, read_volume_2d, read_volume_3d, write_pgm, write_volume
from .records import (MISSING, Cohort, CohortError, IngestStats, SubjectRecord,
                      load_cohort, parse_cohort, subset, write_cohort)
from .summary import SummaryStats, attribute_summary
from .synthetic import (GroundTruth, PhantomParams, SubjectTruth, SyntheticSpec,
                        default_dictionary, generate_synthetic_cohort,
                        planted_centerline, read_ground_truth, render_phantom,
                        shape_class_profile, vertebra_centers, write_ground_truth)

__all__ = [
    "AttributeDef", "DataDictionary", "DictionaryError", "DuplicateAttribute",
    "load_dictionary", "write_dictionary",
    "ImageVolume", "read_pgm", "write_pgm", "read_volume_2d", "read_volume_3d",
    "write_volume",
    "MISSING", "Cohort", "CohortError", "IngestStats", "SubjectRecord",
    "load_cohort", "parse_cohort", "subset", "write_cohort",
    "SummaryStats", "attribute_summary",
    "GroundTruth", "PhantomParams", "SubjectTruth", "SyntheticSpec",
    "default_dictionary", "generate_synthetic_cohort", "planted_centerline",
    "read_ground_truth", "render_phantom", "shape_class_profile",
    "vertebra_centers", "write_ground_truth",
]
