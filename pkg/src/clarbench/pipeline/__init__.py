"""Three-stage batch clarification pipeline with checkpointed, resumable runs."""

from .align import FUZZY_THRESHOLD, AlignmentResult, AlignmentStatus, align_extractive
from .run import (
    CheckpointCorruption,
    ContributionOutcome,
    PipelineConfig,
    Quarantined,
    RunReport,
    export_events,
    process_contribution,
    run_corpus,
    run_stage,
    theme_label,
)
from .stats import (
    ClarificationTriple,
    CorpusStats,
    DiagnosticsReport,
    clarification_diagnostics,
    corpus_stats,
    triples_from_event_rows,
)

__all__ = [
    "AlignmentResult",
    "AlignmentStatus",
    "CheckpointCorruption",
    "ClarificationTriple",
    "ContributionOutcome",
    "CorpusStats",
    "DiagnosticsReport",
    "FUZZY_THRESHOLD",
    "PipelineConfig",
    "Quarantined",
    "RunReport",
    "align_extractive",
    "clarification_diagnostics",
    "corpus_stats",
    "export_events",
    "process_contribution",
    "run_corpus",
    "run_stage",
    "theme_label",
    "triples_from_event_rows",
]
