"""Simulation and risk analytics for core-periphery interbank networks.

The robustness of every bank follows a coupled mean-reverting SDE on a
weighted directed network.  The package covers the finite-network dynamics,
their closed-form moments, the large-network limit with its coupling
diagnostics, and first-passage-based risk management tools.
"""

from .analytic import (
    OUMoments,
    StationaryModel,
    exact_covariance,
    exact_mean,
    finite_moments,
    limit_mean_functions,
    limit_mean_ode,
    limit_moments,
    matrix_exponential,
    mean_curve,
    stationary_model,
)
from .dynamics import (
    DriverSpec,
    PathEnsemble,
    Shock,
    SimConfig,
    SimulationError,
    StabilityWarning,
    ensemble_stats,
    simulate_paths,
    unit_variance_increments,
    write_ensemble_csv,
    write_summary_csv,
)
from .meanfield import (
    CouplingReport,
    DiscrepancyEstimate,
    convergence_scan,
    coupled_discrepancy,
    simulate_limit_paths,
    write_coupling_report_csv,
)
from .network import (
    BlockPattern,
    ColumnRegularityWarning,
    NetworkError,
    WeightedNetwork,
    build_core_periphery,
    build_from_blocks,
    drift_matrix,
    load_network_csv,
    save_network_csv,
    tiered_block_pattern,
)
from .risk import (
    CensoringWarning,
    FptEstimate,
    FptQuery,
    RiskOverflowWarning,
    RiskReport,
    build_risk_report,
    expected_fpt,
    hedge_theta_for_ifpt,
    hedge_theta_for_std,
    ifpt_curve_vs_mu,
    ifpt_curve_vs_theta,
    mc_fpt_oracle,
    mills_ratio,
    std_risk,
)

__version__ = "0.1.0"
