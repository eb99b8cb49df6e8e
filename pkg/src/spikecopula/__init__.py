"""Copula-based dependence analysis of spike trains from small stochastic LIF networks."""
from .copula import (DegenerateMargin, DependenceSummary, EmptyInput, PseudoObservations, ecdf,
                     empirical_copula, kendall_tau, pearson_r, pseudo_observations, spearman_rho,
                     summarize)
from .engine import NotPositiveSemiDefinite, RngStream, cholesky, correlated_increments, euler_step
from .intervals import (BACKWARD, FORWARD, CaseSet, EmptySample, PairedSample, backward_pairs,
                        enumerate_cases, forward_pairs, fpt_pairs)
from .network import (STANDARD, FptSample, NetworkSpec, NeuronParams, SimConfig, SpikeTrains,
                      TrialTimeout, read_spike_trains, simulate_fpt_trials, simulate_spike_trains,
                      validate_network, write_spike_trains)

__version__ = "0.1.0"

__all__ = [
    "BACKWARD", "CaseSet", "DegenerateMargin", "DependenceSummary", "EmptyInput", "EmptySample",
    "FORWARD", "FptSample", "NetworkSpec", "NeuronParams", "NotPositiveSemiDefinite",
    "PairedSample", "PseudoObservations", "RngStream", "STANDARD", "SimConfig", "SpikeTrains",
    "TrialTimeout", "backward_pairs", "cholesky", "correlated_increments", "ecdf",
    "empirical_copula", "enumerate_cases", "euler_step", "forward_pairs", "fpt_pairs",
    "kendall_tau", "pearson_r", "pseudo_observations", "read_spike_trains", "simulate_fpt_trials",
    "simulate_spike_trains", "spearman_rho", "summarize", "validate_network", "write_spike_trains",
]
