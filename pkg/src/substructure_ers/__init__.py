"""Support-reaction exceedance spectra of continuous girder bridges under WIM traffic."""
from .beam_engine import (
    SUPPORT_ALIASES,
    AxleTrain,
    BridgeGeometry,
    InfluenceLine,
    ReactionEnvelope,
    SupportId,
    SweepConfig,
    build_influence_line,
    il_integral,
    il_value,
    influence_lines,
    support_from_letter,
    support_letter,
    sweep_envelope,
    sweep_many,
    train_reaction,
    uniform_reaction,
)
from .exceedance import (
    EnvelopeSet,
    ExceedanceSpectrum,
    compute_ers,
    default_span_grid,
    exceedance_rate,
    exceeds,
    run_campaign,
    vehicle_envelopes,
)
from .load_models import (
    LiveLoadModel,
    case_envelope,
    default_model,
    default_models,
    load_model,
    load_model_config,
    model_envelope,
    resolve_cases,
)
from .wim import (
    FleetSpec,
    VehicleRecord,
    default_fleet_spec,
    filter_above,
    gvw_histogram,
    gvw_percentile,
    parse_wim,
    read_wim,
    summary_stats,
    synthesize_fleet,
    to_train,
    write_wim,
)

__version__ = "0.1.0"
