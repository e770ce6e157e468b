"""Local Radon descriptor toolkit.

Windowed Radon projections, derivative-pair histogram descriptors, a
global-projection baseline, exact k-NN retrieval, and the two retrieval
evaluation protocols, exposed as a library and the ``lrd`` command line.
"""

from .radon import (
    AngleSet,
    BlockGrid,
    ProjectionSet,
    block_grid,
    detector_length,
    radon_project,
    sinogram,
)
from .descriptor import (
    Descriptor,
    DerivativePair,
    LrdParams,
    PairingScheme,
    PRESETS,
    derivatives,
    global_radon_descriptor,
    lrd_descriptor,
    pair_angles,
    pair_histogram,
)
from .retrieval import (
    METRICS,
    DescriptorIndex,
    QueryResult,
    build_index,
    distance,
    knn_query,
)
from .evaluation import (
    EvalReport,
    IrmaCode,
    evaluate_holidays,
    evaluate_irma,
    irma_error,
    parse_irma_code,
)
from .io import (
    DatasetManifest,
    ManifestRecord,
    PipelineConfig,
    extract_from_manifest,
    load_descriptors,
    load_image,
    manifest_from_holidays_dir,
    manifest_from_irma_files,
    read_manifest,
    save_descriptors,
    standardize,
    write_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "AngleSet", "BlockGrid", "ProjectionSet", "block_grid", "detector_length",
    "radon_project", "sinogram",
    "Descriptor", "DerivativePair", "LrdParams", "PairingScheme", "PRESETS",
    "derivatives", "global_radon_descriptor", "lrd_descriptor", "pair_angles",
    "pair_histogram",
    "METRICS", "DescriptorIndex", "QueryResult", "build_index", "distance", "knn_query",
    "EvalReport", "IrmaCode", "evaluate_holidays", "evaluate_irma", "irma_error",
    "parse_irma_code",
    "DatasetManifest", "ManifestRecord", "PipelineConfig", "extract_from_manifest",
    "load_descriptors", "load_image", "manifest_from_holidays_dir",
    "manifest_from_irma_files", "read_manifest", "save_descriptors", "standardize",
    "write_manifest",
    "__version__",
]
