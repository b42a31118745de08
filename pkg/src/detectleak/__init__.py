"""detectleak: find, verify, and quantify benchmark contamination.

Pipeline: shingle documents into word n-grams, sketch them with MinHash,
bucket signatures with banded LSH, confirm candidate pairs by exact
Jaccard, route flagged pairs through dual human annotation with
third-annotator adjudication, and report per-benchmark leakage counts and
ratios along with cleaned benchmark copies.
"""

__version__ = "0.1.0"

from .corpus import Document, IngestStats, NormalizationPolicy, ingest, normalize
from .sketch import (MinHashSignature, ShingleSet, estimate_jaccard,
                     exact_jaccard, minhash, shingle)
from .lsh import LshIndex, LshParams, build_index, plan_bands
# NB: the verify() function stays on its submodule; re-exporting it here
# would shadow the detectleak.verify module itself.
from .verify import CandidatePair, ScanStats, make_pair_id, scan
from .annotation import (AnnotationRecord, AdjudicatedPair, AnnotationStore,
                         binary_collapse, cohen_kappa, leaked_samples)
from .report import (build_autodetect, emit_clean, format_percent,
                     keyword_scan, leakage_metrics, repo_aggregation)
from .ppl import (PerplexityRecord, accuracy_curve, distribution_export,
                  load_scores, rank_ascending, topk_accuracy, trim_outliers)
from .pipeline import RunConfig, run_pipeline

__all__ = [
    "Document", "IngestStats", "NormalizationPolicy", "ingest", "normalize",
    "MinHashSignature", "ShingleSet", "estimate_jaccard", "exact_jaccard",
    "minhash", "shingle",
    "LshIndex", "LshParams", "build_index", "plan_bands",
    "CandidatePair", "ScanStats", "make_pair_id", "scan",
    "AnnotationRecord", "AdjudicatedPair", "AnnotationStore",
    "binary_collapse", "cohen_kappa", "leaked_samples",
    "build_autodetect", "emit_clean", "format_percent", "keyword_scan",
    "leakage_metrics", "repo_aggregation",
    "PerplexityRecord", "accuracy_curve", "distribution_export",
    "load_scores", "rank_ascending", "topk_accuracy", "trim_outliers",
    "RunConfig", "run_pipeline",
]
