"""Built-in problem families."""

from .libsvm import Dataset, load_iris, load_libsvm, parse_libsvm, serialize_libsvm
from .npc import RHO_PSI, NpcSpec, build_npc, class_counts, npc_classify, npc_objective
from .packing import PackingSpec, build_packing, packing_radius_of

__all__ = [
    "Dataset",
    "NpcSpec",
    "PackingSpec",
    "RHO_PSI",
    "build_npc",
    "build_packing",
    "class_counts",
    "load_iris",
    "load_libsvm",
    "npc_classify",
    "npc_objective",
    "packing_radius_of",
    "parse_libsvm",
    "serialize_libsvm",
]
