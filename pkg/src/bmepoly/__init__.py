"""Balanced minimal evolution polytopes: tree coordinates, facet catalogs,
the permutoassociahedron map, and exact BME tree reconstruction."""

from .coords import CoordVector, c_vector, dot, kraft_check, topo_distance_vector, tree_from_x, x_vector
from .distances import DistanceMatrix, MatrixError, additive_matrix, read_matrix
from .facets import (
    LinearInequality,
    affine_rank,
    splitohedron_catalog,
    table1_stats,
    tight_vertices,
    tree_face_inequality,
)
from .kp import KPFace, covering_moves, is_refinement, parse_bracketing, phi
from .lp import LPProblem, LPResult, lp_min
from .solver import (
    BnbCertificate,
    certify_splitohedron_vertex,
    reduce_on_cherry,
    solve_bnb,
    solve_exhaustive,
    solve_nj,
)
from .trees import NewickError, PhyloTree, Split, enumerate_binary_trees, parse_newick, to_newick

__version__ = "0.1.0"

__all__ = [
    "BnbCertificate",
    "CoordVector",
    "DistanceMatrix",
    "KPFace",
    "LPProblem",
    "LPResult",
    "LinearInequality",
    "MatrixError",
    "NewickError",
    "PhyloTree",
    "Split",
    "additive_matrix",
    "affine_rank",
    "c_vector",
    "certify_splitohedron_vertex",
    "covering_moves",
    "dot",
    "enumerate_binary_trees",
    "is_refinement",
    "kraft_check",
    "lp_min",
    "parse_bracketing",
    "parse_newick",
    "phi",
    "read_matrix",
    "reduce_on_cherry",
    "solve_bnb",
    "solve_exhaustive",
    "solve_nj",
    "splitohedron_catalog",
    "table1_stats",
    "tight_vertices",
    "to_newick",
    "topo_distance_vector",
    "tree_face_inequality",
    "tree_from_x",
    "x_vector",
]
