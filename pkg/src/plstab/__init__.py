"""Stability analysis of the Prekopa-Leindler inequality on piecewise log-linear densities."""

from .density import (
    DensityStats,
    LogConcaveDensity,
    LogConcaveFunction,
    PiecewiseLogLinear,
    affine_image,
    as_density,
    build,
    l1_distance,
    log_concave_hull,
    random_density,
    stats,
)
from .errors import *  # noqa: F401,F403
from .experiments import ExponentFit, SweepRow, make_example, run_suite, sweep
from .fileio import emit, io_roundtrip, load, parse, save
from .midpoint import (
    HypographPolygon,
    PLTriple,
    dominates_midpoint,
    midpoint_density,
    pl_epsilon,
    sup_convolution,
)
from .stability import (
    InequalityMargin,
    LocalizedCostReport,
    PiecewiseLinear,
    StabilityCertificate,
    bobkov_gap,
    certify,
    check_hw,
    l1_bound_check,
    localized_cost,
    tail_mass,
    transdist_check,
)
from .transport import (
    Alignment,
    TransportMap,
    align,
    deficit_integrand,
    pl_deficit_integral,
    quadratic_cost,
    transport_energy_probe,
    transport_map,
)

__version__ = "0.1.0"
