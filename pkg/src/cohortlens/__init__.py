"""cohortlens: desk-scale cohort analytics engine.

Pipeline: typed cohort ingestion -> FEM shape-model fitting on grayscale
volumes -> canal centerline extraction and shape clustering -> mixed-type
attribute clustering -> epidemiological statistics, all behind a
provenance-logged session service with exact replay.
"""

__version__ = "0.1.0"
