"""Numerical laboratory for Hamiltonian flows with fractal critical sets.

Builds a self-similar arc on which a non-constant function has vanishing
gradient, extends the arc jets to a C^(1,s) function on the 2-torus with a
constructive Whitney-cube scheme, defines quadratic-kinetic Hamiltonians on
top of it, integrates their flows symplectically, and runs critical-value
measure and rectifiable-path experiments that separate the smooth and
non-smooth regimes quantitatively.
"""

__version__ = "0.1.0"

from .arc import (
    ArcConfig,
    ArcJetSet,
    GeometryError,
    address_to_point,
    build_bridges,
    build_similarities,
    polyline,
    polyline_length,
    polyline_length_closed_form,
    quaternary_value,
    sample_jets,
    validate_geometry,
)
from .field import (
    CoverError,
    Embedding,
    WhitneyField,
    build_field,
    fd_gradient,
    holder_exponent,
    whitney_condition_check,
)
from .hamiltonian import (
    AnalyticField,
    GraphSection,
    HamiltonianSpec,
    InvariantSetSpec,
    PhaseState,
    criticality_identity_check,
    eval_H,
    morse_control,
    restrict_to_graph,
    symplectic_pairing,
    vector_field,
    zero_field,
)
from .flow import (
    FlowError,
    IntegratorConfig,
    Trajectory,
    convergence_order,
    energy_drift,
    integrate,
    invariance_drift,
    reversibility_error,
    step_jacobian_determinant,
)
from .sard import (
    MeasureReport,
    PathIntegralReport,
    bridge_checks,
    critical_value_measure,
    dichotomy_experiment,
    nonconstancy_report,
    path_integral_H,
    scan_grid,
)
