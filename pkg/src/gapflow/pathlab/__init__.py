"""Membership tests and explicit constructions of paths of Kraus tuples."""
from .jordan import (
    JordanStructure,
    explicit_diagonalizer,
    jordan_matrix,
    jordan_structure,
)
from .planar import (
    PlanarCurve,
    avoid_finite_path,
    sk_membership,
    sk_path,
    sk_path_margin,
    sk_relative_margin,
)
from .segments import (
    ConstantReparam,
    InsideZ,
    JordanApproach,
    Linear,
    MatrixPath,
    NormalizedPath,
    Reversed,
    connect,
    inz_segment,
    jordan_approach_segment,
    normalize_path,
    path_from_dict,
    segment_from_dict,
    vandermonde_witness,
    z_membership,
    z_membership_margin,
)
