"""situwatch: streaming bio-signal situation comparison and advance alerting.

Multivariate sensor streams are windowed into fixed-grid situations, ranked
in percent against stored pre-event baselines, and pushed through a
hysteresis alerter that raises before the predicted event.
"""

from .errors import SituwatchError
from .ingest import StreamCursor, emit_windows, format_record, load_baselines, parse_record, save_baseline
from .prediction import Alert, AlertCleared, AlertPolicy, AlertState, knn_classify, resolve_baseline, step_alert
from .similarity import (
    ChannelScore,
    FeatureVector,
    SimilarityConfig,
    SimilarityMethod,
    SimilarityReport,
    channel_similarity,
    dtw_distance,
    euclid_distance,
    extract_features,
    situation_similarity,
    znormalize,
)
from .situation import (
    Baseline,
    ChannelSpec,
    GapPolicy,
    Provenance,
    Sample,
    Situation,
    SituationWindow,
    Violation,
    build_situation,
    snapshot_baseline,
    validate_situation,
)

__version__ = "0.1.0"
