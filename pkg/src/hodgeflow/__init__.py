"""Spectral heat-flow smoothing of vector fields on the flat torus and the round sphere.

Submodules: ``torus`` and ``sphere`` (backends), ``heat`` (the Hodge heat
semigroup and its checks), ``besov`` (heat-semigroup Besov norms),
``commutator`` (the nonlinear commutator, its Duhamel split and the energy
flux), ``euler2d`` (a 2D Euler solver), ``fields`` (test-field generators),
``io``/``reports`` (files) and ``verify`` (end-to-end suites).
"""

from .besov import BesovSpec, cN_diagnostic, heat_besov_norm, lp_besov_norm, regularity_fit
from .commutator import GradedMesh, commutator_direct, duhamel_reconstruct, flux, flux_decay_fit
from .errors import HodgeflowError
from .euler2d import EulerTrajectory, euler_step, run, smoothed_energy_identity_report, weak_form_residual
from .fields import lacunary, random_slope, single_mode, sphere_mode, sphere_random, taylor_green
from .heat import HeatSchedule, apply_heat
from .sphere import SphereBasis, SphereField
from .torus import TorusField, TorusGrid, TorusScalar

__version__ = "0.1.0"

__all__ = [
    "BesovSpec",
    "EulerTrajectory",
    "GradedMesh",
    "HeatSchedule",
    "HodgeflowError",
    "SphereBasis",
    "SphereField",
    "TorusField",
    "TorusGrid",
    "TorusScalar",
    "apply_heat",
    "cN_diagnostic",
    "commutator_direct",
    "duhamel_reconstruct",
    "euler_step",
    "flux",
    "flux_decay_fit",
    "heat_besov_norm",
    "lacunary",
    "lp_besov_norm",
    "random_slope",
    "regularity_fit",
    "run",
    "single_mode",
    "smoothed_energy_identity_report",
    "sphere_mode",
    "sphere_random",
    "taylor_green",
    "weak_form_residual",
]
