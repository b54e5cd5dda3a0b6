"""Regular graph sources and their conversion into Tanner graphs."""

from .lps import LpsParams, find_lps_params, lps_generate
from .regular import (
    GraphError,
    RegularGraph,
    bipartite_moore_bound,
    double_cover,
    edge_coloring,
    girth,
    random_regular_bipartite,
    read_graph,
    split_to_degree,
    write_graph,
)
from .tanner import (
    AlistError,
    SocketPartition,
    TannerGraph,
    node_split,
    partitions_to_matrix,
    protograph_to_partitions,
    read_alist,
    verify_lifting,
    write_alist,
)

__all__ = [
    "AlistError",
    "GraphError",
    "LpsParams",
    "RegularGraph",
    "SocketPartition",
    "TannerGraph",
    "bipartite_moore_bound",
    "double_cover",
    "edge_coloring",
    "find_lps_params",
    "girth",
    "lps_generate",
    "node_split",
    "partitions_to_matrix",
    "protograph_to_partitions",
    "random_regular_bipartite",
    "read_alist",
    "read_graph",
    "split_to_degree",
    "verify_lifting",
    "write_alist",
    "write_graph",
]
