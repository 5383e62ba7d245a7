"""Deterministic generator, symbolic oracle and exact-match harness for
logical-reasoning episodes in task-oriented dialogue."""

__version__ = "0.1.0"

from .catalog import (Catalog, Item, build_split_catalogs, read_items,
                      sample_context_items, write_items)
from .contextgen import (ReasoningContext, Statement, assemble_context,
                         make_comparative_clues, make_superlative_clues,
                         parse_context, render_statements)
from .datasetpipe import (Example, GenConfig, StatsReport, compute_stats,
                          generate_split, read_dataset, write_dataset)
from .errors import (CatalogError, DatasetError, DialOracleError,
                     GenerationError, OntologyError, OracleError,
                     OutputParseError, PredictionError, SpokenNumberError)
from .evalharness import (EvalReport, normalize, oracle_selfcheck,
                          read_predictions, score_exact_match)
from .numwords import number_to_spoken, spoken_to_number
from .ontology import (AttributeSpec, Diagnostic, Lexicon, Ontology,
                       default_ontology, load_ontology, load_ontology_path,
                       surface_forms, validate_ontology)
from .oracle import (Constraint, Constraints, GoldOutput, InformItems,
                     InformTF, NoAnswer, SelectItems, derive_gold,
                     emit_output, eval_true_false, extract_constraints,
                     filter_items, parse_output, resolve_superlative)
from .querygen import (ContextRelative, ExplicitValue, ItemRef, Predicate,
                       QueryGenSettings, QuerySemantics,
                       enumerate_applicable_queries, parse_query,
                       realize_surface, sample_query, with_spoken)

__all__ = [name for name in dir() if not name.startswith("_")]
