"""Geometrically exact, rotation-free isogeometric analysis of planar beams.

Nonlinear Bernoulli-Euler beams of arbitrary curviness: NURBS
discretization of geometry and displacements, five constitutive model
variants (decoupled through analytic), Newton and arc-length continuation,
and the desk-scale benchmark suite (roll-up cantilever, Lee's frame,
multi-snap parabolic arches).
"""

from ._kernels import USING_NUMBA
from .constitutive import (
    ConstitutiveMatrix,
    CrossSection,
    Material,
    SectionForces,
    constitutive_matrix,
    physical_normal_force,
    pure_bending_axis_strain,
    section_force_rates,
    section_properties,
    stress_profile,
)
from .errors import (
    ConstraintError,
    CurvinessError,
    DomainError,
    GeometryError,
    IgaBeamError,
    RefinementError,
    SolverError,
    ValidationError,
)
from .metric import (
    AxisStrain,
    EquidistantMetric,
    PointMetric,
    axis_strain,
    equidistant_metric,
    equidistant_strain_profile,
    metric_at,
    rigid_body_check,
)
from .assembly import (
    Assembler,
    ClampConstraint,
    FixConstraint,
    GlobalSystem,
    LineLoad,
    MomentCouple,
    PointForce,
    RigidJointConstraint,
    SymmetryConstraint,
    apply_constraints,
    assemble,
    element_BL,
    element_G,
    moment_couple_load,
)
from .model_io import (
    ModelFile,
    SectionProbe,
    TrackedPoint,
    arch_model,
    benchmark_model,
    convergence_study,
    l2_displacement_error,
    lee_model,
    mainspring_model,
    parse_model,
    run_model,
    serialize_model,
    straightening_strain_estimate,
)
from .solver import (
    ArcLengthConfig,
    BeamStateStore,
    ContinuationRecord,
    SolverConfig,
    arclength_run,
    limit_point_scan,
    newton_run,
    record_at_lpf,
    update_section_forces,
)
from .splines import (
    KnotVector,
    NurbsPatch,
    QuadratureRule,
    basis_ders,
    curve_ders,
    curve_point,
    elevate_degree,
    elevate_to,
    find_span,
    gauss_rule,
    insert_knot,
    line_patch,
    refine_uniform,
)

__version__ = "0.1.0"
