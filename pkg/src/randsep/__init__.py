"""Linear separability certificates for random nonlinear features of a union of subspaces."""

from randsep.certify import (
    SeparabilityCertificate,
    WidthBoundReport,
    brute_force_separable,
    certify_binary,
    certify_multiclass,
    empirical_separable,
    projection_classifier,
    width_bound_binary,
    width_bound_multiclass,
)
from randsep.errors import (
    AssumptionViolation,
    CostError,
    DimensionError,
    DivergenceError,
    PathologicalGeometryError,
    UnsupportedActivation,
)
from randsep.features import Activation, RandomFeatureMap, apply, apply_batch, sample_feature_map
from randsep.probe import LabeledDataset, LinearProbe, accuracy, generate_uos_dataset, train_probe
from randsep.rng import make_rng
from randsep.subspace import (
    PrincipalAngles,
    Subspace,
    UnionOfSubspaces,
    concat_span,
    extend_basis,
    principal_angles,
    projection_difference_spectrum,
    sample_stiefel,
)

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "AssumptionViolation",
    "CostError",
    "DimensionError",
    "DivergenceError",
    "LabeledDataset",
    "LinearProbe",
    "PathologicalGeometryError",
    "PrincipalAngles",
    "RandomFeatureMap",
    "SeparabilityCertificate",
    "Subspace",
    "UnionOfSubspaces",
    "UnsupportedActivation",
    "WidthBoundReport",
    "accuracy",
    "apply",
    "apply_batch",
    "brute_force_separable",
    "certify_binary",
    "certify_multiclass",
    "concat_span",
    "empirical_separable",
    "extend_basis",
    "generate_uos_dataset",
    "make_rng",
    "principal_angles",
    "projection_classifier",
    "projection_difference_spectrum",
    "sample_feature_map",
    "sample_stiefel",
    "train_probe",
    "width_bound_binary",
    "width_bound_multiclass",
]
