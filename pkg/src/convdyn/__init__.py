"""Temporal, content-aware conversation graphs and their analyses.

Conversations are reply trees whose posts link to the hashtags they use.
The package computes posting-activity saturation fits, temporal Wiener index
series and hashtag hijacking classifications over real or synthetic data.
"""

__version__ = "0.1.0"

from .activity import (
    ActivityFit,
    CompletionCurve,
    aggregate_curve,
    change_rate,
    change_rate_ratio,
    completion_points,
    fit_saturation,
    model_value,
)
from .hijack import HijackReport, TakeoverHistogram, classify, degree_series, eligible, initial_hashtags, takeover_histogram
from .hin import EdgeType, NodeType, TypedGraph, induced_subgraph, weakly_connected_components
from .ingest import Conversation, RawPost, assemble, extract_content, parse_canonical, parse_twitter_v2
from .sampler import SamplingPolicy, SnapshotSequence, sample, snapshot_graph
from .structure import WienerSeries, temporal_wiener, wiener_index
