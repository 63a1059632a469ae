"""Exhaustive and heuristic tools for the maximal determinant problem on
odd-order {+1,-1} matrices: Gram-matrix search, decomposition, equivalence,
rational-form certificates and determinant spectra."""

from .bounds import (BoundValue, PreconditionError, d_star, ehlich_barba_bound,
                     ehlich_bound, hadamard_bound, km_bound, partition_bound,
                     sharper_bound)
from .decompose import (GramPairContext, decompose, decompose_all, decompose_first,
                        decompose_random, enumerate_pairs)
from .equivalence import (are_gram_equivalent, are_hadamard_equivalent, dedup,
                          gram_canonical, hadamard_canonical)
from .exact import char_poly, det_exact, dual_gram, gram, parity_normalize
from .gramsearch import SearchConfig, SearchResult, admissible_values, search_grams
from .io import parse_matrix_file, run_pipeline, verify_candidates
from .rational import hm_indecomposability, p_signature, rationally_equivalent
from .spectrum import full_spectrum, hill_climb_values, spectrum_above

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
