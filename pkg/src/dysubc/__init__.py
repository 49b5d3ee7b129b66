"""Self-supervised dynamic graph embeddings via temporal subgraph contrast."""

from .estimator import DySubC, parse_variant
from .evaluate import EvalReport, LinkLogisticRegression, auc, prepare_link_data, run_ablation, run_link_prediction
from .graph import EdgeSplit, TemporalEvent, TemporalGraph, build_graph, parse_edge_list, temporal_split
from .sampler import SamplerConfig, TemporalSubgraph, sample_all, sample_subgraph
from .trainer import TrainConfig

__all__ = [
    "DySubC", "parse_variant", "EvalReport", "LinkLogisticRegression", "auc", "prepare_link_data",
    "run_ablation", "run_link_prediction", "EdgeSplit", "TemporalEvent", "TemporalGraph", "build_graph",
    "parse_edge_list", "temporal_split", "SamplerConfig", "TemporalSubgraph", "sample_all",
    "sample_subgraph", "TrainConfig",
]
__version__ = "0.1.0"
