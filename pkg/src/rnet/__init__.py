"""Square resistor-network tomography toolkit.

Forward model (boundary response matrix of a lattice resistor network),
exact inverse reconstruction of every edge conductance from boundary data
alone, a simulated measurement rig with noise models, reproducible
accuracy/timing sweeps, and SVG rendering of relative-resistance-change
maps.
"""

from .errors import (
    DegenerateDeltaError,
    DimensionMismatchError,
    InvalidConductanceError,
    NetworkFormatError,
    ResidualTooLargeError,
    RnetError,
    SingularBlockError,
    SingularMatrixError,
    SpecMismatchError,
    ZeroDivisorError,
)
from .lattice import (
    ConductanceMap,
    EdgeId,
    LatticeSpec,
    ResponseMatrix,
    build_kirchhoff,
    build_lattice,
    forward_boundary_solve,
    network_from_json,
    network_to_json,
    random_conductances,
    response_matrix,
    uniform_conductances,
)
from .measure_sim import (
    NO_NOISE,
    ElementwiseNoise,
    MeasurementRecord,
    NoiseModel,
    NoNoise,
    ProtocolNoise,
    apply_elementwise_noise,
    parse_noise_spec,
    simulate_measurement,
    snr_to_sigma,
)
from .reconstruct import (
    FaceBlocks,
    FaceTildeSet,
    PeelExtraction,
    PeelState,
    ReconstructionResult,
    apply_edge_removal,
    apply_spike_removal,
    extract_boundary_conductances,
    face_blocks,
    peel_layer,
    reconstruct_full,
    reconstruction_to_json,
    tilde_face_matrices,
)
from .experiments import (
    ErrorMetrics,
    SweepResult,
    SweepRow,
    rmse_metrics,
    run_noise_sweep,
    run_size_sweep,
    run_timing_profile,
    sweep_to_csv,
)
from .render import (
    DeltaMap,
    RenderStyle,
    compute_delta_map,
    delta_map_from_json,
    delta_map_to_json,
    render_delta_map,
)

__version__ = "0.1.0"

__all__ = [
    "RnetError",
    "SingularMatrixError",
    "DimensionMismatchError",
    "SingularBlockError",
    "DegenerateDeltaError",
    "ZeroDivisorError",
    "InvalidConductanceError",
    "ResidualTooLargeError",
    "SpecMismatchError",
    "NetworkFormatError",
    "LatticeSpec",
    "EdgeId",
    "ConductanceMap",
    "ResponseMatrix",
    "build_lattice",
    "build_kirchhoff",
    "response_matrix",
    "forward_boundary_solve",
    "uniform_conductances",
    "random_conductances",
    "network_to_json",
    "network_from_json",
    "NoNoise",
    "ElementwiseNoise",
    "ProtocolNoise",
    "NoiseModel",
    "NO_NOISE",
    "MeasurementRecord",
    "simulate_measurement",
    "apply_elementwise_noise",
    "snr_to_sigma",
    "parse_noise_spec",
    "FaceBlocks",
    "FaceTildeSet",
    "PeelExtraction",
    "PeelState",
    "ReconstructionResult",
    "face_blocks",
    "tilde_face_matrices",
    "extract_boundary_conductances",
    "apply_spike_removal",
    "apply_edge_removal",
    "peel_layer",
    "reconstruct_full",
    "reconstruction_to_json",
    "ErrorMetrics",
    "SweepRow",
    "SweepResult",
    "rmse_metrics",
    "run_size_sweep",
    "run_noise_sweep",
    "run_timing_profile",
    "sweep_to_csv",
    "DeltaMap",
    "RenderStyle",
    "compute_delta_map",
    "render_delta_map",
    "delta_map_to_json",
    "delta_map_from_json",
]
