"""Node embeddings from free-energy distances via generalized skip-gram
matrix factorization, with clustering, classification and link-prediction
evaluation."""

from .errors import NumericalError, ParseError, UnsupportedRegimeError, ValidationError
from .factorization import (EmbeddingMatrix, FitOptions, gmf_fit, gmf_gradient, gmf_loss,
                            reconstruct, truncated_svd)
from .fe_distance import (DissimilarityMatrix, FEParams, ct_distance, fe_directed, fe_distance,
                          path_enumeration_oracle, sample_targets, sp_distance, symmetrize)
from .graph import (EdgeSplit, Graph, cost_matrix, from_edges, load_edge_list, preprocess,
                    split_edges_for_link_prediction, transition_matrix)
from .similarity import (PosNegWeights, SimilarityMatrix, deepwalk_similarity,
                         pos_neg_from_similarity, to_similarity)

__version__ = "0.1.0"
