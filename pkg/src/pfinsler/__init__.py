"""Numerical toolkit for conic pseudo-Finsler metrics, their translations by
wind fields, geodesic and co-geodesic flows, and flag curvature."""

from .curvature import (
    Flag,
    curvature_shift_check,
    flag_curvature_fanning,
    flag_curvature_spray,
    jacobi_curve,
    jacobi_endomorphism,
    make_flag,
    reverse_identity_residual,
    riemann_spray_curvature,
    shifted_flag,
)
from .deriv import PartialTensor, ScalarField, field_jet, homogeneity_check, partial_tensor
from .dynamics import (
    Trajectory,
    cogeodesic_flow,
    correspondence,
    geodesic,
    homothety_constant,
    homothety_rate,
    reparametrization,
    spray,
    step_halving_study,
    symplectic_defect,
    wind_flow,
)
from .errors import (
    ChartExitError,
    ConfigError,
    ConvergenceError,
    DegenerateError,
    DomainError,
    ExprSyntaxError,
    FinslerError,
    NoRootError,
    StencilError,
    UnknownIdentifierError,
)
from .expr import EvalScope, Expression, evaluate, parse, to_source
from .legendre import CotangentSample, dual_norm, duality_residual, legendre, legendre_inverse
from .metrics import (
    Chart,
    MetricInstance,
    NavigationData,
    OneForm,
    SemiRiemannianMetric,
    TangentSample,
    WindField,
    as_randers_kropina,
    custom,
    kropina,
    navigation_data,
    randers,
    reverse,
    semi_riemannian,
    translate_numeric,
    zermelo_translate,
)
from .tensors import (
    SignatureReport,
    angular_metric,
    cartan_tensor,
    fundamental_tensor,
    matsumoto_tensor,
    mean_cartan_torsion,
    metric_index,
    translation_character,
)

__version__ = "0.1.0"
