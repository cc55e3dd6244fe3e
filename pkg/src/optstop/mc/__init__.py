"""Monte Carlo oracle for the stopping problems."""

from .simulate import (
    Estimate,
    PathEnsemble,
    PathOutcome,
    SimConfig,
    estimate,
    hitting_laplace_mc,
    simulate_levy,
    simulate_levy_payoff,
    simulate_ou,
    simulate_payoff,
    simulate_ssmp,
    simulate_ssmp_payoff,
    ssmp_passage,
)

__all__ = [
    "Estimate", "PathEnsemble", "PathOutcome", "SimConfig", "estimate", "hitting_laplace_mc",
    "simulate_levy", "simulate_levy_payoff", "simulate_ou", "simulate_payoff", "simulate_ssmp",
    "simulate_ssmp_payoff", "ssmp_passage",
]
