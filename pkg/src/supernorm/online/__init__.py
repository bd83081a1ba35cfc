"""Online algorithms driven by supermodular norms, with small exact oracles."""
from .covering import CoveringInstance, offline_opt_cover, solve_cover
from .loadbalance import LoadBalanceInstance, brute_opt_loadbalance, greedy_loadbalance
from .olo import experts, olo_ftpl
from .packing import PackingInstance, offline_opt_pack, solve_pack
from .trace import RunTrace

__all__ = [
    "CoveringInstance", "LoadBalanceInstance", "PackingInstance", "RunTrace",
    "brute_opt_loadbalance", "experts", "greedy_loadbalance", "offline_opt_cover", "offline_opt_pack",
    "olo_ftpl", "solve_cover", "solve_pack",
]
