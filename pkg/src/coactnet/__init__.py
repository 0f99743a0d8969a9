"""Detection of coordinated user groups from timestamped activity logs.

The pipeline builds one weighted co-action graph per interaction modality
(edges decay exponentially with the lag between matching actions and are
normalized by each content's audience), tunes every layer's decay rate by
modularity maximization, clusters the aligned layers as a multiplex
network, and scores detections against ground truth. A synthetic campaign
generator and six reference detectors support benchmarking.
"""

__version__ = "0.1.0"

from .community import (MultiplexNetwork, Partition, cluster_multiplex,
                        coupling_offset, detect_communities,
                        louvain_communities, modularity,
                        multislice_modularity)
from .ingest import (ActionEvent, ActionIndex, Dataset, GroundTruth,
                     build_action_index, build_combined_index,
                     load_ground_truth, parse_events, write_events)
from .kernel import (KernelParams, directed_deltas, kernel_value, pair_deltas,
                     truncation_bound)
from .layers import (BetaSweepResult, DeltaTable, LayerGraph, beta_grid,
                     build_layer, sweep_exponent_graph, tune_beta)
from .metrics import (EvalReport, RandomLabelerStats, best_cluster_scores,
                      evaluate_flagged, evaluate_partition, homogeneity,
                      nmi_binarized, random_labeler, rank_methods,
                      weighted_precision)
from .synth import SimulationConfig, assemble, generate_background, \
    generate_pattern, simulate

__all__ = [name for name in dir() if not name.startswith("_")]
