"""ambidec: two-band Ambisonic decoder design for mixed-order signal sets
and irregular loudspeaker arrays."""

from .arrays import (
    ArrayConfigError,
    CoverageParams,
    CoverageWeighting,
    Speaker,
    SpeakerArray,
    coverage_weights,
    load_array,
    parse_array_config,
    serialize_array_config,
)
from .decoder_io import DecoderFile, DecoderFileError, load_decoder, save_decoder
from .design import (
    DecoderMatrix,
    EncodingMatrix,
    allrad_decoder,
    apply_degree_gains,
    encoding_matrix,
    max_re_gains,
    max_re_magnitude,
    pinv_decoder,
    vbap_gain_matrix,
)
from .grids import (
    GridParseError,
    SphericalGrid,
    builtin_grid,
    builtin_grid_names,
    cube_grid,
    fibonacci_grid,
    icosahedron_grid,
    load_grid,
    octahedron_grid,
    save_grid,
)
from .metrics import (
    RenderMetrics,
    effective_order,
    energy_vector,
    evaluate_grid,
    metrics_to_csv,
    speaker_gains,
    velocity_vector,
)
from .optimize import (
    DesignConfig,
    DesignResult,
    GoalField,
    GoalFieldError,
    ObjectiveSpec,
    OptimizationResult,
    TwoBandDecoder,
    design_two_band,
    goal_re_field,
    hf_objective,
    lf_objective,
    lf_objective_gradient,
    objective_gradient,
    optimize_hf,
    optimize_lf,
)
from .spherical import (
    ChannelSpec,
    Direction,
    SignalSetSpec,
    acn_index,
    degree_order,
    mixed_order_mask,
    parse_signal_set,
    real_sh,
    sh_matrix,
    sh_vector,
)

__version__ = "0.1.0"
