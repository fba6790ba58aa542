"""Virtual network embedding onto best-fit substrate components."""

from .bfsn import EmbedResult, bfsn_embed
from .graph_core import (
    AccountingError,
    AllocationError,
    Mapping,
    Path,
    SubstrateNetwork,
    VirtualNetwork,
    VNRequest,
    allocate,
    cost,
    release,
    revenue,
    validate_mapping,
)
from .hem import bfsn_hem_embed, coarsen
from .reference import greedy_embed, oracle_embed
from .sim_engine import run_simulation
from .workload import WorkloadConfig, generate_workload, read_workload, write_workload

__all__ = [
    "AccountingError", "AllocationError", "EmbedResult", "Mapping", "Path", "SubstrateNetwork",
    "VNRequest", "VirtualNetwork", "WorkloadConfig", "allocate", "bfsn_embed", "bfsn_hem_embed",
    "coarsen", "cost", "generate_workload", "greedy_embed", "oracle_embed", "read_workload",
    "release", "revenue", "run_simulation", "validate_mapping", "write_workload",
]
