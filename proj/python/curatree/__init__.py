"""Hierarchical k-means data curation for embedding collections.

Build clustering trees over embedding matrices, draw balance-controlled
subsets via binary-search quota allocation, plan cluster-stratified training
batches with least-observed prioritization, and compute the associated
diagnostics (TV imbalance, TV curves, adjusted Rand index, size histograms).
"""

from ._core import (
    AllocationPlan,
    BatchPlan,
    ClusterTree,
    CuratedSubset,
    CuratreeError,
    EmbeddingMatrix,
    KMeansResult,
    ObservationLedger,
    __version__,
    adjusted_rand_index,
    allocate,
    assign_to_centroids,
    build_tree,
    cluster_size_histogram,
    generate_heavy_tailed,
    kmeans_fit,
    ledger_report,
    load_embeddings,
    load_metadata,
    load_subset,
    load_tree,
    plan_random,
    plan_stratified,
    realized_tv,
    sample_subset,
    save_embeddings,
    tv_curve,
    tv_distance,
)

__all__ = [
    "AllocationPlan",
    "BatchPlan",
    "ClusterTree",
    "CuratedSubset",
    "CuratreeError",
    "EmbeddingMatrix",
    "KMeansResult",
    "ObservationLedger",
    "__version__",
    "adjusted_rand_index",
    "allocate",
    "assign_to_centroids",
    "build_tree",
    "cluster_size_histogram",
    "generate_heavy_tailed",
    "kmeans_fit",
    "ledger_report",
    "load_embeddings",
    "load_metadata",
    "load_subset",
    "load_tree",
    "plan_random",
    "plan_stratified",
    "realized_tv",
    "sample_subset",
    "save_embeddings",
    "tv_curve",
    "tv_distance",
]
