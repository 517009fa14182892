"""Resonances of Schottky surfaces and their finite abelian covers.

Numerical laboratory built around the twisted transfer-operator determinant:
group/disc arithmetic, closed-geodesic enumeration, collocation transfer
operators, zeta values, zero location, and homology geodesic counting, with
a CLI that writes CSV tables, JSON manifests, and figures.
"""

from .errors import SchottkyZetaError
from .geodesics import (
    PrimitiveClass,
    PrimitiveTable,
    bowen_series,
    distortion_report,
    enumerate_primitives,
    enumerate_primitives_by_length,
    primitive_table,
)
from .homcount import (
    AsymptoticFit,
    HomologyCountTable,
    asymptotic_fit,
    count_homology,
    homology_count_table,
)
from .resonances import (
    Rect,
    Resonance,
    SpectralHistogram,
    WindowCalibration,
    calibrate_window,
    count_zeros,
    cover_resonances,
    find_zeros,
    gradient_phi,
    hessian_phi,
    phi_at,
    spectral_measure,
    trace_phi,
)
from .schottky import (
    BUILDERS,
    Disc,
    MoebiusMap,
    SchottkyData,
    ValidationReport,
    Word,
    compose,
    cylinder,
    enumerate_words,
    fixed_points,
    group_from_dict,
    group_to_dict,
    homology,
    inverse_letter,
    three_funnel,
    translation_length,
    validate,
    word_to_map,
)
from .transfer import (
    OperatorMatrix,
    ThetaPoint,
    build_operator,
    determinant,
    dimension_from_determinant,
    hausdorff_dimension,
    leading_eigenvalue,
    pressure,
    pressure_from_orbits,
)
from .zeta import (
    CoverSpec,
    character,
    cover_zeta,
    default_primitive_table,
    zeta_det,
    zeta_series,
    zeta_series_tail,
)

__version__ = "0.1.0"
