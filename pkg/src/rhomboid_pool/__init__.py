"""Hierarchical graph pooling driven by the rhomboid tiling of a point cloud."""
from .clustering import (ClusterMatrix, HierarchySchedule, LevelGraph, PoolingHierarchy, build_hierarchy,
                         cluster_matrix, normalize_rows, pool_features)
from .errors import *  # noqa: F401,F403
from .geometry import PointCloud, Sphere, SpherePartition, circumsphere, classify, jitter, validate_general_position
from .lp import WitnessLP, lp_maximize_margin
from .tiling import (DelaunaySlice, Rhomboid, RhomboidTiling, build_tiling, embed_vertex, incidence_matrix,
                     slice_tiling)
from .training import ModelConfig, evaluate, repeated_runs, train

__version__ = "0.1.0"
