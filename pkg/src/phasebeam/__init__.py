"""Gaussian beam superpositions for the semiclassical Schroedinger equation."""
from .beam_core import (BeamBundle, BeamRecord, InitialBeamData, b_matrix, hessian_from_levelset,
                        integrate_beam_first_order, integrate_beams)
from .beam_higher import (derive_amplitude_system, derive_phase_jet_system,
                          evolve_amplitude_hierarchy, evolve_phase_jet,
                          levelset_phase_derivative_recursion)
from .errors import *  # noqa: F401,F403
from .flow import PhasePoint, Trajectory, flow_jacobian, flow_map, integrate_rays
from .hamiltonian import HamiltonianModel, evaluate, potential_derivative
from .harness import ExperimentConfig, RateReport, converge, emit, run
from .liouville_grid import PhaseGridField, advect, eulerian_beam_table, interpolate, phase_grid
from .polynomial import Polynomial
from .reference import (GaussianPacket, exact_caustic_family, exact_quadratic_propagate,
                        make_run, split_step)
from .superposition import (AmplitudeProfile, BeamSet, SuperpositionConfig, assemble, cutoff,
                            launch, residual_field)
from .wavefield import UniformGrid, WaveField

__version__ = "0.1.0"
