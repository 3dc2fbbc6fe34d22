"""Parse, canonicalize and augment SFILES 2.0 flowsheet strings."""

from .augmentation import (
    AugmentationConfig,
    AugmentationSet,
    VariantLimitError,
    augment,
    augment_graph,
    count_variants,
    enumerate_variants,
)
from .dataset import CorpusRecord, SplitSpec, augment_corpus, export_graph, split_corpus, validate_corpus
from .evaluation import NgramModel, TokenSequence, eval_corpus, perplexity, run_experiment, train_ngram
from .generator import GeneratorConfig, generate, generate_corpus
from .graph import FlowsheetGraph, GraphValidationError, StreamEdge, UnitNode, graph_equal
from .parser import ParseError, Token, TokenKind, parse, tokenize
from .serializer import SerializationError, SerializationPolicy, canonical_rank, canonicalize, serialize

__version__ = "0.1.0"

__all__ = [
    "AugmentationConfig", "AugmentationSet", "VariantLimitError", "augment", "augment_graph",
    "count_variants", "enumerate_variants", "CorpusRecord", "SplitSpec", "augment_corpus",
    "export_graph", "split_corpus", "validate_corpus", "NgramModel", "TokenSequence", "eval_corpus",
    "perplexity", "run_experiment", "train_ngram", "GeneratorConfig", "generate", "generate_corpus",
    "FlowsheetGraph", "GraphValidationError", "StreamEdge", "UnitNode", "graph_equal", "ParseError",
    "Token", "TokenKind", "parse", "tokenize", "SerializationError", "SerializationPolicy",
    "canonical_rank", "canonicalize", "serialize",
]
