"""
Copyright (c) 2026 Piotr Gawron (dev@gawron.biz)
This file is licensed under the MIT License.
For details, see the LICENSE file in the project root.
"""

from .distributions import (  # noqa: F401
    AuctionInstance,
    DiscreteDistribution,
    ExponentialDistribution,
    PointMass,
    UniformDistribution,
    ValueDistribution,
    check_mhr,
    coarsen,
    max_distribution,
)
from .exceptions import (  # noqa: F401
    AuctionForgeError,
    DegenerateInstanceError,
    InstanceTooLargeError,
    InvalidArgumentError,
    MalformedInstanceError,
    SolverError,
)
from .mechanisms import (  # noqa: F401
    GrandBundle,
    Mechanism,
    MenuMechanism,
    ReserveWelfare,
    SecondPriceReserve,
    combine,
    grand_bundle,
    mechanism_from_metadata,
    reserve_welfare,
    restrict_to_subset,
    second_price_reserve,
)
from .opt_solvers import build_lp, bundle_price_search, eps_dt_search, lottery_menu_search, solve_lp  # noqa: F401
from .partition import partition_instance, partition_items  # noqa: F401
from .pipeline import PtasBuilder, build_ptas_mechanism  # noqa: F401
from .sim_harness import AuditReport, DeviationGrid, audit, check_concentration, check_ir, estimate, estimate_regret  # noqa: F401
from .tail_analysis import anchoring_point, iid_reserve, truncation_interval  # noqa: F401
