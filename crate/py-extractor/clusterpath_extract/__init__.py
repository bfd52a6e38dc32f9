"""Bridge from trained models to clusterpath activation bundles."""

from .bundle import BUNDLE_SCHEMA, write_bundle
from .spec import ExtractionSpec, Perturbation, extract

__all__ = ["BUNDLE_SCHEMA", "ExtractionSpec", "Perturbation", "extract", "write_bundle"]
