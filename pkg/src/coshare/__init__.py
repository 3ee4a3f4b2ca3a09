"""Coordinated link-sharing detection toolkit.

Builds a TF-IDF-weighted user/URL share matrix from a post corpus,
projects it to a cosine similarity network, flags accounts above an
eigenvector-centrality percentile, and runs account/content forensics
over the flagged set. A synthetic benchmark generator with labeled
campaigns provides precision/recall evaluation.
"""

from .models import (
    CanonicalUrl,
    CentralityScores,
    ConfigError,
    CoordinationReport,
    CorpusStats,
    CoshareError,
    EmptyResultError,
    InputError,
    Post,
    SimilarityNetwork,
    UserProfile,
    UserUrlMatrix,
)

__version__ = "0.1.0"

__all__ = [
    "CanonicalUrl",
    "CentralityScores",
    "ConfigError",
    "CoordinationReport",
    "CorpusStats",
    "CoshareError",
    "EmptyResultError",
    "InputError",
    "Post",
    "SimilarityNetwork",
    "UserProfile",
    "UserUrlMatrix",
    "__version__",
]
