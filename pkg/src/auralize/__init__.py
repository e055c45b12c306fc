"""Room-acoustic simulation, Ambisonics auralization and evaluation toolkit.

Pipeline: simplify a polygonal room model (geometric decimation,
absorption-band reduction), synthesize third-order Ambisonics impulse
responses with a hybrid image-source / stochastic ray-tracing engine,
calibrate decay times, render binaural stimuli with a truncated-HRIR
direct path and a virtual-loudspeaker reverberation decode, and quantify
differences with standard room-acoustic and binaural metrics.
"""

from .errors import (
    AnalysisError,
    AuralizeError,
    CalibrationError,
    NotWatertightError,
    RoomFormatError,
    SimulationError,
    ValidationError,
)
from .geometry import (
    BandSpectrum,
    Material,
    Polygon,
    RoomModel,
    band_reduce,
    band_reduce_model,
    compute_volume,
    decimate,
    equivalent_absorption_area,
    load_room,
    save_room,
    shoebox,
    to_shoebox,
    total_surface,
    uniform_material,
    validate,
)
from .ga import (
    AmbisonicsIR,
    Arrival,
    Reflectogram,
    SimConfig,
    image_sources,
    make_anchor,
    remove_direct,
    simulate,
    synthesize_air,
    trace,
)
from .calibrate import DecayTarget, FitReport, eyring_rt, scale_absorption
from .hrir import HRIRSet, load_hrir_set, save_hrir_set, synthetic_hrir_set
from .binaural import (
    BinauralStimulus,
    SpeakerLayout,
    binauralize,
    decode_to_speakers,
    mix,
    render_direct,
    render_scene,
    sh_rotate,
    truncate_hrir,
)
from .metrics import (
    IaccMatrix,
    MetricsReport,
    asw_lev,
    direct_weight,
    drr,
    edt,
    iacc,
    jnd_flags,
    lta_spectrum,
    schroeder_decay,
    spectral_difference,
    t30,
)
from .pipeline import Condition, ExperimentPlan, load_plan, run_plan

# submodules stay reachable under their own names (the calibrate module in
# particular must not be shadowed by a function export)
from . import binaural, calibrate, filters, ga, geometry, hrir, io, metrics  # noqa: E402,F401
from . import pipeline, sh  # noqa: E402,F401

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
