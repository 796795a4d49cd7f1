"""Mirror randomized benchmarking: circuit sampling, weak simulation and decay analysis."""
from .analysis import (
    AnalysisReport,
    DecayFit,
    DepthSummary,
    analyze,
    analyze_results,
    effective_polarization,
    error_rate,
    fit_decay,
)
from .circuits import (
    ConnectivityGraph,
    MirrorCircuit,
    MrbDesign,
    SamplerSpec,
    design_circuits,
    grid_graph,
    sample_layer,
    sample_mirror_circuit,
)
from .clifford import Layer, PauliString, invert_layer
from .infidelity import epsilon_layer, epsilon_omega
from .noise import (
    ErrorModel,
    StochasticPauliChannel,
    build_model1,
    build_model2,
    sample_random_model,
)
from .tableau import tableau_run
from .weaksim import ShotResult, hamming_histogram, simulate_shots, unravel_shots

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "ConnectivityGraph",
    "DecayFit",
    "DepthSummary",
    "ErrorModel",
    "Layer",
    "MirrorCircuit",
    "MrbDesign",
    "PauliString",
    "SamplerSpec",
    "ShotResult",
    "StochasticPauliChannel",
    "analyze",
    "analyze_results",
    "build_model1",
    "build_model2",
    "design_circuits",
    "effective_polarization",
    "epsilon_layer",
    "epsilon_omega",
    "error_rate",
    "fit_decay",
    "grid_graph",
    "hamming_histogram",
    "invert_layer",
    "sample_layer",
    "sample_mirror_circuit",
    "sample_random_model",
    "simulate_shots",
    "tableau_run",
    "unravel_shots",
]
