"""Average delivery time of coded caching with shared caches and random user association."""

__version__ = "0.1.0"

from .bounds import (
    BoundPair,
    analytical_lower_bound,
    analytical_upper_bound,
    expected_top_load_bounds,
    nonuniform_lower_bound,
    nonuniform_upper_bound,
    proximity_upper_bound,
    threshold_bounds,
)
from .combinatorics import (
    binomial,
    binomial_cdf,
    enumerate_profiles,
    log_factorial,
    multiplicity_groups,
)
from .exact import (
    EnumerationBudgetExceeded,
    brute_force_average_delay,
    delay_of_profile,
    deterioration,
    exact_average_delay,
    order_statistic_average_delay,
    profile_probability,
    t_min,
)
from .network import IntensityVector, NetworkConfig, zipf_intensities
from .simulation import (
    AssociationPolicy,
    SimulationReport,
    empirical_rank_loads,
    sample_association,
    sbn_estimate,
    scaling_probe,
)
