"""Monte Carlo engine for the hard-to-borrow (HTB) stock model."""

from .correlation import DriverIncrement, estimate_covariation, make_correlated
from .errors import (DensityOverflowError, HtbError, InvalidInputError,
                     SimulationDivergedError)
from .girsanov import (DensityRecord, log_density_corrected, log_density_uncorrelated,
                       reweighted_expectation, solve_market_price_vector,
                       unit_expectation_check)
from .model import (HtbParams, MarketState, RiskPremiumSpec, gamma_price_of_risk,
                    intensity_from_log, pnl_increment, theta_price_of_risk)
from .pricing import (OptionSpec, PriceEstimate, black_scholes_reference,
                      carry_martingale_check, payoff_european, price_direct_q,
                      price_reweighted_p)
from .simulator import (Ensemble, Path, PathGrid, jump_indicator, simulate_ensemble, step_p,
                        step_q)

__version__ = "0.1.0"

__all__ = [
    "DensityOverflowError", "DensityRecord", "DriverIncrement", "Ensemble", "HtbError",
    "HtbParams", "InvalidInputError", "MarketState", "OptionSpec", "Path", "PathGrid",
    "PriceEstimate", "RiskPremiumSpec", "SimulationDivergedError", "black_scholes_reference",
    "carry_martingale_check", "estimate_covariation", "gamma_price_of_risk",
    "intensity_from_log", "jump_indicator", "log_density_corrected",
    "log_density_uncorrelated", "make_correlated", "payoff_european", "pnl_increment",
    "price_direct_q", "price_reweighted_p", "reweighted_expectation", "simulate_ensemble",
    "solve_market_price_vector", "step_p", "step_q", "theta_price_of_risk",
    "unit_expectation_check",
]
