"""Microwave-activated CZ gates on a flux-tunable coupler: model, dynamics,
pulse optimization and benchmarking."""

from . import benchmark, cli, device, dynamics, io, metrics, optimize, pulses
from .benchmark import (
    DecayDataset,
    ErrorBudget,
    FitResult,
    NoiseModel,
    build_budget,
    extract_gate_error,
    fit_decay,
    gate_fidelity,
    leakage_error,
    pauli_error,
    xeb_simulate,
)
from .device import (
    CircuitParams,
    DeviceModel,
    SpectralParams,
    calibrate_g_curve,
    effective_coupling,
    find_decoupling_flux,
    load_device,
    reference_device,
    reference_spectral,
    working_point_check,
)
from .dynamics import SubspaceUnitary, diag_frequencies, evolve, interaction_frame
from .metrics import GateMetrics, ScanResult, extract_metrics, phase_scan, swap_scan
from .optimize import OptimizerConfig, delta_sweep, nelder_mead, optimize_cz, seed_pulse
from .pulses import PulseParams, TimeSeries, coupling_series, envelope, flux_pulse, spectrum

__version__ = "0.1.0"
