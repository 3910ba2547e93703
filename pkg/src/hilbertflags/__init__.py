"""Hilbert geometry toolkit: distances, volumes, flags and growth estimators."""

from .convex_core import (
    AffineImage,
    ConvexBody,
    Ellipsoid,
    EmptySet,
    IntersectionBody,
    PNormBall,
    centroid,
    chord_endpoints,
    hausdorff_distance,
    make_cap,
    scale_about,
    support_value,
)
from .errors import *  # noqa: F401,F403
from .estimators import (
    SlopeFit,
    approximate_polytope,
    asvol_estimate,
    entropy_estimate,
    flag_approx_estimate,
    flag_number,
    verify_entropy_identity,
    verify_flag_ratio,
)
from .hilbert_metric import (
    BUSEMANN,
    HOLMES_THOMPSON,
    TangentBall,
    asymptotic_ball,
    ball_radial_extent,
    density,
    finsler_norm,
    funk_distance,
    hilbert_distance,
    macbeath_region,
    ray_distance,
    tangent_ball,
)
from .polytope_lattice import (
    FaceLattice,
    Flag,
    FlagSimplex,
    Polytope,
    convex_hull,
    cube,
    enumerate_flags,
    flag_count,
    flag_decomposition,
    regular_polygon,
    simplex,
)
from .volume_engine import (
    BallSpec,
    Cone,
    QuadratureBudget,
    VolumeEstimate,
    ball_growth_curve,
    flag_cone_volumes,
    region_volume,
)

__version__ = "0.1.0"
