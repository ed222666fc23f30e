"""Campaign attribution from kill-chain ordered TTP sequences."""

from .attribution import Attributor, PackedSequences, attribute, attribution_score, top_n
from .css import SubsequenceProfile, brute_force_profile, common_subsequence_profile
from .errors import AttributionError
from .evaluation import (
    CorrelationMatrix,
    EvaluationReport,
    SynthSpec,
    correlation_matrix,
    evaluate,
    synth_campaigns,
)
from .model import (
    AttributionResult,
    BaselineDatabase,
    Campaign,
    KillChainPhase,
    Tactic,
    TechniqueId,
    TtpObservation,
    TtpSequence,
)
from .sequencer import PhaseMap, load_phase_map, observations_from_ids, sequence_ttps
from .similarity import (
    MeasureKind,
    captain_similarity,
    cosine_similarity,
    euclidean_similarity,
    lcs_similarity,
    similarity,
)
from .store import SplitSpec, ingest, load_baseline, save_baseline, split

__version__ = "0.1.0"

__all__ = [
    "AttributionError",
    "AttributionResult",
    "Attributor",
    "BaselineDatabase",
    "Campaign",
    "CorrelationMatrix",
    "EvaluationReport",
    "KillChainPhase",
    "MeasureKind",
    "PackedSequences",
    "PhaseMap",
    "SplitSpec",
    "SubsequenceProfile",
    "SynthSpec",
    "Tactic",
    "TechniqueId",
    "TtpObservation",
    "TtpSequence",
    "attribute",
    "attribution_score",
    "brute_force_profile",
    "captain_similarity",
    "common_subsequence_profile",
    "correlation_matrix",
    "cosine_similarity",
    "euclidean_similarity",
    "evaluate",
    "ingest",
    "lcs_similarity",
    "load_baseline",
    "load_phase_map",
    "observations_from_ids",
    "save_baseline",
    "sequence_ttps",
    "similarity",
    "split",
    "synth_campaigns",
    "top_n",
]
