"""Event lifetime estimation for DVS streams via intra-pixel-area RANSAC plane fitting."""

__version__ = "0.1.0"

from .buffer_filter import FilterMode, FilterParams, filter_events, support_mask
from .edge_render import RenderQuery, accumulate_count, accumulate_time, render_lifetime
from .evaluation import CdmParams, CdmReport, cdm, f_measure, lifetime_stats, sweep_fig4
from .events_io import (EdgeImage, Event, EventFormatError, EventStream, PgmError, SensorGeometry,
                        parse_event_text, read_pgm, write_event_text, write_pgm)
from .lifetime import LifetimedEvent, flow_from_normal, lifetime_from_normal, process_stream
from .plane_fit import (FitResult, FitStatus, PlaneNormal, RansacParams, intra_pixel_distance,
                        kmeans_partition, plane_from_three_points, ransac_fit)
from .sae import Sae, SaeWindow
from .synth import NoiseSpec, StripeScene, gen_planar_window, gen_stripes, inject_isolated_noise

__all__ = [
    "CdmParams", "CdmReport", "EdgeImage", "Event", "EventFormatError", "EventStream", "FilterMode",
    "FilterParams", "FitResult", "FitStatus", "LifetimedEvent", "NoiseSpec", "PgmError", "PlaneNormal",
    "RansacParams", "RenderQuery", "Sae", "SaeWindow", "SensorGeometry", "StripeScene",
    "accumulate_count", "accumulate_time", "cdm", "f_measure", "filter_events", "flow_from_normal",
    "gen_planar_window", "gen_stripes", "inject_isolated_noise", "intra_pixel_distance",
    "kmeans_partition", "lifetime_from_normal", "lifetime_stats", "parse_event_text",
    "plane_from_three_points", "process_stream", "ransac_fit", "read_pgm", "render_lifetime",
    "support_mask", "sweep_fig4", "write_event_text", "write_pgm",
]
