"""
Energy-conserving discontinuous Galerkin methods for linear symmetric hyperbolic systems.
Import the parts of the package that make up the core public interface.
"""
from .algebra import EigenPairing, SymMatrix, eig_decompose, is_antisymmetric, pairing_coupler
from .basis import ElementKind, ReferenceBasis, make_basis
from .config import RunConfig
from .errors import EcdgError, MeshError, NumericalError, ValidationError
from .flux import BoundaryKind, FluxBuilder, FluxKind, build_boundary_flux, build_face_flux
from .harness import (ConvergenceTable, WaveMetrics, l2_error, run_convergence, run_energy, run_longtime,
                      run_temporal_order)
from .mesh import (Mesh1D, Mesh2D, TriMeshHandler, make_cartesian_2d, make_triangular_2d, make_uniform_1d,
                   perturb_1d)
from .operator import DGState, DenseOperator, SemiDiscreteOperator, assemble, project_initial
from .projections import coupled_acoustics_projection, coupled_advection_projection, gauss_radau
from .systems import AugmentedSystem, SymmetricSystem, augment, catalog, exact_solutions
from .timestep import IntegratorSpec, TimeHistory, advance, cfl_dt
