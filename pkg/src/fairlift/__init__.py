"""Multi-level fair graph representation learning.

Coarsen an attributed graph with a fairness-aware matching policy, embed
the coarsest graph with a pluggable base embedder, refine the embedding
back to the original graph with a fairness-regularized graph-convolutional
model, and evaluate utility and group fairness downstream.
"""

from .attributes import (AttributeMatrix, divergence, encode_one_hot,
                         merge_rows, pairwise_divergence, row_normalize)
from .coarsen import (Hierarchy, Matching, MergeMap, build_coarse_graph,
                      coarsen_hierarchy, load_hierarchy, match_nodes,
                      nhem_weight, save_hierarchy)
from .downstream import (EvalReport, LinearClassifier, LpSplit,
                         hadamard_features, lp_evaluate, lp_split,
                         nc_evaluate, train_linear_classifier)
from .embed import (EmbedderConfig, Embedding, embed, embed_deepwalk,
                    embed_spectral, l2_normalize_rows, read_embedding,
                    write_embedding)
from .errors import (DimensionMismatch, EmptyStratum, FairliftError,
                     InputError, IsolatedNode, MalformedId, MissingNode,
                     NonPositiveWeight, NotEnoughNonEdges, NumericError,
                     SingleClassInput, UnknownValue, ZeroMassRow)
from .graph import (Graph, build_graph, normalized_adjacency, read_edge_list,
                    write_edge_list)
from .metrics import (GroupedPredictions, PairScores, accuracy,
                      average_precision, auroc, delta_dp, delta_eo,
                      f1_binary, lp_fairness, micro_f1, utility_metrics)
from .pipeline import PipelineConfig, PipelineResult, bench, run_pipeline
from .refine import (FairEdgeMask, RefineHyper, RefinementModel,
                     build_fair_edge_mask, gcn_forward, gradients, losses,
                     project, refine_all, theorem1_check, train_refiner)
from .synth import SyntheticSpec, generate, generate_synthetic

__version__ = "0.1.0"
