"""SIR epidemics on a scale-free spatial network with nested communities."""
from .lattice import Box, BlockId, INFINITE, block_index, community_level, euclid_dist, k1_delta
from .heights import HeightField, sample_field, sample_height, coupled_sample
from .netmodels import InvalidParameter, Kind, ModelKind, Params, edge_open_prob

__version__ = "0.1.0"

__all__ = [
    "Box", "BlockId", "INFINITE", "block_index", "community_level", "euclid_dist", "k1_delta",
    "HeightField", "sample_field", "sample_height", "coupled_sample",
    "InvalidParameter", "Kind", "ModelKind", "Params", "edge_open_prob",
]
