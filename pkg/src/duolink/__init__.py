"""duolink: trace-driven analysis of deferred dual-link Wi-Fi redundancy.

Replays redundancy policies (single channel, parallel, deferred with fixed,
alternating, or heuristic primary selection) over real or synthetic
per-channel packet logs and reports the latency/attempts/loss metrics that
matter for soft real-time traffic.
"""

__version__ = "0.1.0"

from .airtime import DeferralSpec, PhyProfile, deferral_time, frame_airtime, min_latency
from .chanmodel import DcfParams, GilbertElliott, gen_trace, ge_step, simulate_packet
from .config import RunConfig, load_config
from .dedup import EliminationWindow, RedundancyTrailer, SeqCounter, replicate, tag
from .errors import DuolinkError, ParseError, ValidationError
from .metrics import CdfCurve, SummaryStats, cdf, percentile, saturation_deferral, summarize
from .policy import (
    HeuristicConfig,
    PacketOutcome,
    PolicyMode,
    PolicyOutcomes,
    ema_update,
    eval_deferred,
    eval_parallel,
    run_policy,
    select_alternating,
    select_heuristic,
)
from .sweep import DEFAULT_T_D_GRID_US, SweepSpec, run_sweep
from .trace import (
    ChannelTrace,
    PacketRecord,
    PairedTrace,
    align_pairs,
    latency_correlation,
    parse_log,
    pearson,
    read_log_file,
    write_log,
    write_log_file,
)

__all__ = [
    "__version__",
    "DeferralSpec",
    "PhyProfile",
    "deferral_time",
    "frame_airtime",
    "min_latency",
    "DcfParams",
    "GilbertElliott",
    "gen_trace",
    "ge_step",
    "simulate_packet",
    "RunConfig",
    "load_config",
    "EliminationWindow",
    "RedundancyTrailer",
    "SeqCounter",
    "replicate",
    "tag",
    "DuolinkError",
    "ParseError",
    "ValidationError",
    "CdfCurve",
    "SummaryStats",
    "cdf",
    "percentile",
    "saturation_deferral",
    "summarize",
    "HeuristicConfig",
    "PacketOutcome",
    "PolicyMode",
    "PolicyOutcomes",
    "ema_update",
    "eval_deferred",
    "eval_parallel",
    "run_policy",
    "select_alternating",
    "select_heuristic",
    "DEFAULT_T_D_GRID_US",
    "SweepSpec",
    "run_sweep",
    "ChannelTrace",
    "PacketRecord",
    "PairedTrace",
    "align_pairs",
    "latency_correlation",
    "parse_log",
    "pearson",
    "read_log_file",
    "write_log",
    "write_log_file",
]
