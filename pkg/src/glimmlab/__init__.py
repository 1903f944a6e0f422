"""Random-choice solver for 1-D nonconvex hyperbolic systems.

Core pieces: built-in system models, convex-envelope based elementary wave
curves and Riemann fans, the random-choice (Glimm) evolution with
low-discrepancy sampling, interaction functionals with wave-tracing
bookkeeping, and a convergence-rate experiment harness.
"""

from .models import (Box, EigenDecomposition, FieldInfo, FieldKind,
                     ManifoldDescriptor, SystemModel, classify_field,
                     make_model, validate_delta0)
from .envelope import (EnvelopeResult, PieceKind, SampledFunction,
                       decompose_contact, lower_convex_envelope,
                       upper_concave_envelope)
from .curves import (ComponentKind, ElementaryCurve, WaveComponent, WaveFan,
                     curve_right_state, solve_curve, wave_fan_from_curve)
from .riemann import (RiemannSolution, evaluate_solution, forced_shock_fan,
                      liu_admissibility_check, solve_riemann)
from .sampling import (DiscrepancyReport, SamplingSequence, discrepancy,
                       explicit_sequence, pseudorandom_sequence,
                       van_der_corput, vdc_sequence, verify_discrepancy_bound)

__version__ = "0.1.0"
