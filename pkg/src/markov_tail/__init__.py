"""Large-deviation tail bounds for vector-valued sums on finite reversible
Markov chains, with numerical checks of the underlying eigenvalue estimates."""

from .bounds import (
    BoundQuery,
    BoundResult,
    alpha_corollary2,
    bound_gillman,
    bound_gillman_md,
    bound_hoeffding_iid,
    bound_kargin,
    bound_martingale,
    k_constant,
    sample_size,
    table1,
)
from .chain import (
    InitialDistribution,
    ReversibleChain,
    Spectrum,
    build_complete,
    build_cycle,
    build_lazy_hypercube,
    chi_distance,
    load_chain,
    spectrum,
    spread,
)
from .observable import VectorObservable, center, load_observable, principal_variance, random_observable

__version__ = "0.1.0"
