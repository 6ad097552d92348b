from .bp import DEFAULT_MAX_ITERS, DecodeResult, decode_syndrome
from .code import (
    DegreeDistribution,
    ParityCheckMatrix,
    Syndrome,
    concentrated_check_edges,
    girth,
    has_four_cycle,
    load_ensemble,
    rank_gf2,
    realized_rate,
    shipped_ensembles,
    syndrome,
    syndrome_columns,
)
from .construct import build_code, degree_profile

__all__ = [
    "DEFAULT_MAX_ITERS", "DecodeResult", "DegreeDistribution", "ParityCheckMatrix", "Syndrome",
    "build_code", "concentrated_check_edges", "decode_syndrome", "degree_profile", "girth",
    "has_four_cycle", "load_ensemble", "rank_gf2", "realized_rate", "shipped_ensembles",
    "syndrome", "syndrome_columns",
]
