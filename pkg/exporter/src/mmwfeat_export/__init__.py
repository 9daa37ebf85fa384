"""mmwfeat-export: pretrained-CNN feature extraction to MMWFEAT files."""

__version__ = "0.1.0"

from .export import MODELS, ExportError, ExportJob, resolve_layer, run_export
from .formats import read_manifest, read_pgm, write_mmwfeat

__all__ = [
    "MODELS",
    "ExportError",
    "ExportJob",
    "read_manifest",
    "read_pgm",
    "resolve_layer",
    "run_export",
    "write_mmwfeat",
]
