"""Latent order book simulator and analysis toolkit.

A discrete-event model of market liquidity: Poisson limit-order deposition
over a wide price window, power-law-correlated market-order signs, volumes
tied to the opposite best quote, and per-order cancellation.  The package
reproduces the model's numerical program (diffusivity line, V-shaped
stationary book, concave metaorder impact with post-completion decay) and
the matching closed-form theory.
"""

from .analytics import (
    BookProfile,
    DecayCurve,
    DerivedQuantities,
    ImbalanceResult,
    ImpactCurve,
    SignAutocorrelation,
    block_bootstrap_se,
    decay_curve,
    derived_quantities,
    diffusion_constant,
    diffusivity_ratio,
    fit_exponential_profile,
    global_imbalance_impact,
    impact_curve,
    mean_book_profile,
    sign_autocorrelation,
)
from .book import Book, ExecutionReport, Fill, initial_book
from .errors import (
    BracketError,
    ConfigError,
    CrossedDepositError,
    DegenerateBookError,
    DomainTooSmallError,
    DropBudgetError,
    FitError,
    InsufficientDataError,
    LatentBookError,
    ParameterError,
    WindowViolationError,
)
from .orderflow import (
    FlowParams,
    SignProcessState,
    deposit_counts,
    market_order_volume,
    next_sign,
    replica_generators,
    sample_fraction,
    sample_run_length,
)
from .sim import (
    TAU_GRID,
    MetaorderRecord,
    MetaorderSpec,
    RunResult,
    SimParams,
    Simulation,
    SnapshotSet,
    TradeRecord,
    metaorder_batch,
    run,
    run_with_metaorder,
    save_metaorders,
)
from .theory import (
    ProfileCoefficients,
    absorbed_flux,
    linear_slope_b,
    naive_impact,
    naive_impact_from_profile,
    solve_stationary_numeric,
    sqrt_law,
    stationary_profile_closed_form,
    stationary_residual,
    transaction_rate,
)

__version__ = "0.1.0"
