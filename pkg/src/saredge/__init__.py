"""Direct online compressive-sensing edge mapping for monostatic SAR.

Pipeline: simulate frequency-domain pulses from a synthetic scene, weight
them into edge-enhanced measurements, and recover a sparse edgelet
representation of the scene's edge map with a streaming FISTA solver that
never stores pulses.
"""

from .config import ExperimentConfig, parse_flat_config
from .dictionary import (
    EdgeletDictionary,
    EdgeletParams,
    MeasurementOperator,
    build_edgelet_dictionary,
    coherence_report,
    compose_measurement_operator,
)
from .edgefilter import (
    EdgeMap,
    EdgeMeasurement,
    apply_edge_filter,
    edge_map_from_coefficients,
    edge_weights,
    filter_pulse,
    reference_edge_map,
)
from .errors import ConfigError, FormatError, GeometryError, NumericalError, SarEdgeError
from .forward import (
    ForwardMatrix,
    NoiseCovariance,
    PulseRecord,
    add_noise,
    build_forward_matrix,
    compensate_phase,
    simulate_pulse_exact,
    simulate_pulse_farfield,
)
from .geometry import (
    SPEED_OF_LIGHT,
    Disc,
    FrequencyGrid,
    GroundScene,
    ImagingGrid,
    PlatformTrajectory,
    PointTarget,
    Rectangle,
    make_circular_trajectory,
    make_linear_trajectory,
    make_synthetic_scene,
    unit_look_direction,
    xi_sample,
    xi_samples,
)
from .pipeline import (
    MetricsRow,
    OnlineReconstructor,
    emit_plot_data,
    replay_pulses,
    run_experiment,
    simulate_pulses,
)
from .solver import (
    Coefficients,
    SolverConfig,
    SufficientStats,
    fista_solve,
    gradient,
    kkt_violation,
    lipschitz_constant,
    objective,
    online_step,
    soft_threshold,
    update_stats,
)

__version__ = "0.1.0"
