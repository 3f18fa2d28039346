"""kerrphase: phase-space dynamics of quantum Kerr oscillators.

Exact Fock-basis evolution, Wigner distributions and Wigner current fields,
classical Liouville comparison, and shear-suppression diagnostics including
revival detection.
"""

__version__ = "0.1.0"

from .classical import (ClassicalDensity, classical_shear,
                        classical_shear_measure, classical_velocity,
                        liouville_pullback)
from .current import (CurrentBundle, LagrangeTerms, StagnationReport,
                      VelocityField, continuity_residual, current_general,
                      current_polar, divergence, lagrange_terms,
                      stagnation_points, tangentiality_stat, velocity_field)
from .diagnostics import (ApproximationInvalid, RevivalEvent, RingTrace,
                          ShearSeries, SpectralSummary, detect_special_states,
                          moving_average, negativity, pi_series,
                          ring_probability, ring_trace, ring_velocity_approx,
                          shear_polarization, shear_polarization_local,
                          spectral_content, vorticity)
from .fields import (GridError, PhaseGrid, ScalarField, VectorField,
                     default_grid, differentiate, integrate, interpolate,
                     laplacian, radial_derivative)
from .states import (DensityMatrix, KerrParams, StateError, StateVector,
                     TruncationError, auto_cutoff, coherent_state,
                     density_matrix, evolve, fock_state, fock_superposition,
                     kerr_energy, recurrence_time, squeezed_vacuum)
from .wigner import (KernelPrecisionError, QuadratureError, fock_wigner_kernel,
                     wigner_grid, wigner_point, wigner_quadrature)

__all__ = [name for name in dir() if not name.startswith("_")]
