"""Graph embeddings through summary graphs and closed-form restoration."""

from .graph import Graph, augment, frobenius_norm, load_edge_list, normalized_adjacency
from .summarize import (
    Partition,
    SummaryGraph,
    heavy_edge_matching,
    membership_matrix,
    reconstruct,
    reconstruction_matrix,
    summarize,
)
from .kernel import KernelParams, kernel_matrix, restoration_matrix, restore_kernel, theorem2_bound
from .factorize import EmbeddingMatrix, FactorizeParams, deepwalk_matrix, factorize, restore_embeddings
from .gcn import GcnModel, gcn_forward, gcn_forward_summary, gcn_restore, summary_features

__version__ = "0.1.0"
