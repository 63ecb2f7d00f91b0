"""levsim: leveraged value investors in a single-asset market, under
three credit-regulation regimes (unregulated cap, haircuts plus spreads,
perfect option hedging)."""

__version__ = "0.1.0"

from .params import DEFAULT_BETAS, Scheme, SimParams, noise_only
from .states import FundState, MarketState, NoiseState, StepReport
from .clearing import (
    ClearingFailure,
    ClearingProblem,
    aggregate_excess_demand,
    clear_price,
    fund_demand,
)
from .regulation import (
    BasleParams,
    adaptive_lambda_basle,
    basle_haircut,
    effective_interest_basle,
    net_exposure,
    spread_cost,
)
from .options import (
    HedgeParams,
    adaptive_lambda_hedge,
    adaptive_lambda_hedge_short,
    binding_lambda_hedge,
    bs_price,
    call_strike,
    effective_spread,
    hedge_cost,
    hedge_strikes,
    premium_cap,
    put_strike,
)
from .simulation import (
    RunTrace,
    Simulation,
    handle_default_and_reintro,
    investor_flow,
    ou_step,
    policy_cost_term,
    redeemable_cash,
    update_wealth,
)
from .metrics import (
    RunMetrics,
    adjusted_return,
    investor_returns,
    investor_returns_windows,
    manager_profits,
    run_metrics,
)
from .runner import (
    ExperimentConfig,
    SweepResult,
    child_seed,
    emit_plot_data,
    load_config,
    read_table,
    run_simulation,
    run_simulation_traced,
    sweep,
)

__all__ = [
    "__version__",
    "DEFAULT_BETAS", "Scheme", "SimParams", "noise_only",
    "FundState", "MarketState", "NoiseState", "StepReport",
    "ClearingFailure", "ClearingProblem", "aggregate_excess_demand",
    "clear_price", "fund_demand",
    "BasleParams", "adaptive_lambda_basle", "basle_haircut",
    "effective_interest_basle", "net_exposure", "spread_cost",
    "HedgeParams", "adaptive_lambda_hedge", "adaptive_lambda_hedge_short",
    "binding_lambda_hedge", "bs_price", "call_strike", "effective_spread",
    "hedge_cost", "hedge_strikes", "premium_cap", "put_strike",
    "RunTrace", "Simulation", "handle_default_and_reintro", "investor_flow",
    "ou_step", "policy_cost_term", "redeemable_cash", "update_wealth",
    "RunMetrics", "adjusted_return", "investor_returns",
    "investor_returns_windows", "manager_profits", "run_metrics",
    "ExperimentConfig", "SweepResult", "child_seed", "emit_plot_data",
    "load_config", "read_table", "run_simulation", "run_simulation_traced",
    "sweep",
]
