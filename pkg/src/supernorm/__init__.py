"""p-supermodular norms and the online algorithms they drive."""
from .norms import (
    L1PlusL2,
    LinearCompose,
    LpCombine,
    LpNorm,
    Norm,
    Smoothed,
    SumLinfBlocks,
    TopkNorm,
    WeightedLinear,
    compose_linear,
    dual_eval,
    evaluate,
    from_dict,
    from_json,
    grad,
    lp_combine,
    smooth,
)

__version__ = "0.1.0"
