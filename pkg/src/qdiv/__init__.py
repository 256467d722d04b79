"""Quantum relative g-entropies, monotone Riemannian metrics and the
contraction coefficients of stochastic maps."""

from . import channel, contraction, divergence, geodesic, gfun, io, matcore, metric
from .channel import (
    QuantumChannel,
    constant_channel,
    identity_channel,
    is_cptp,
    nonunital_example,
    partial_trace_channel,
    pauli_affine,
)
from .contraction import (
    ContractionReport,
    EtaEstimate,
    OptimizerConfig,
    bounds_report,
    eta_dobrushin,
    eta_geod,
    eta_relent,
    eta_riem,
    lambda2,
    nonunital_formula_eval,
    phi_big_check,
    probe_conjectures,
    unital_lower_bound,
)
from .divergence import relative_entropy, relative_entropy_value
from .errors import BoundaryError, NumericalError, QdivError, ValidationError
from .geodesic import bures_distance, geodesic_distance, path_energy
from .gfun import GFunction
from .matcore import DensityMatrix, HermitianBasis, SuperOperator
from .metric import metric_eval, metric_from_hessian, omega

__version__ = "0.1.0"
