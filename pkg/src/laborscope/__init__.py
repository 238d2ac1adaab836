"""Latent industrial topics from regional occupation employment tables."""

from .clustering import Dendrogram, cosine_distance_matrix, \
    hierarchical_cluster, select_top_regions
from .dynamics import TopicAlignment, align, chain, cosine_similarity
from .exceptions import ConfigError, DataError, LaborscopeError, NumericError
from .factorization import FitConfig, TopicModel, TopicNMF, fit_model, \
    load_model, nndsvd_init, normalize, objective, save_model
from .ingest import ColumnMap, Crosswalk, EmploymentRecord, EmploymentTable, \
    ParseResult, apply_crosswalk, parse_csv, restrict_consistent, to_matrix
from .matrix import RegionOccupationMatrix
from .pipeline import PipelineConfig, run_pipeline
from .spatial import RegionCoordinates, SpatialWeights, build_weights, \
    expected_morans_i, great_circle_km, load_adjacency, load_sector_map, \
    location_quotient, morans_i
from .synth import SynthResult, SynthSpec, generate, write_corpus
from .topics import RegionComposition, TopicSummary, compose_regions, \
    summarize_topics, topic_prevalence
from .weighting import TfidfWeighter, document_frequency, tfidf, \
    top_k_by_region

__version__ = "0.1.0"

__all__ = [
    "ColumnMap", "ConfigError", "Crosswalk", "DataError", "Dendrogram",
    "EmploymentRecord", "EmploymentTable", "FitConfig", "LaborscopeError",
    "NumericError", "ParseResult", "PipelineConfig", "RegionComposition",
    "RegionCoordinates", "RegionOccupationMatrix", "SpatialWeights",
    "SynthResult", "SynthSpec", "TfidfWeighter", "TopicAlignment",
    "TopicModel", "TopicNMF", "TopicSummary", "align", "apply_crosswalk",
    "build_weights", "chain", "compose_regions", "cosine_distance_matrix",
    "cosine_similarity", "document_frequency", "expected_morans_i",
    "fit_model", "generate", "great_circle_km", "hierarchical_cluster",
    "load_adjacency", "load_model", "load_sector_map", "location_quotient",
    "morans_i", "nndsvd_init", "normalize", "objective", "parse_csv",
    "restrict_consistent", "run_pipeline", "save_model",
    "select_top_regions", "summarize_topics", "tfidf", "to_matrix",
    "top_k_by_region", "topic_prevalence", "write_corpus", "__version__",
]
