"""CZ figures of merit extracted from a frame-removed subspace propagator.

Convention: the propagator acts on {|00>,|01>,|10>,|11>,|02>,|20>}; single
qubit phases are corrected analytically (virtual Z) before comparing the
computational block against the ideal CZ.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .device import DeviceModel
from .dynamics import IDX, SubspaceUnitary, diag_frequencies, evolve, interaction_frame
from .pulses import PulseParams, average_amplitude

__all__ = [
    "GateMetrics",
    "ScanResult",
    "CZ_TARGET",
    "wrap_angle",
    "extract_metrics",
    "resonance_frequency",
    "swap_scan",
    "phase_scan",
]

CZ_TARGET = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)

_COMP = [IDX["00"], IDX["01"], IDX["10"], IDX["11"]]
_LEAK = [IDX["02"], IDX["20"]]


def wrap_angle(x):
    """Wrap angle(s) to (-pi, pi]."""
    out = -(np.mod(-np.asarray(x, dtype=float) + np.pi, 2.0 * np.pi) - np.pi)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GateMetrics:
    control_phase: float
    single_qubit_phases: tuple[float, float]
    leakage: float
    swap_error: float
    avg_fidelity: float

    @property
    def coherent_error(self) -> float:
        return 1.0 - self.avg_fidelity


def extract_metrics(u: SubspaceUnitary | np.ndarray) -> GateMetrics:
    """Control phase, leakage, swap error and phase-corrected gate fidelity.

    Expects a frame-removed (interaction picture) propagator. Virtual-Z
    corrections are read off the single-excitation diagonal phases; the
    average gate fidelity compares the corrected computational block M
    against CZ via F = (Tr(M+M) + |Tr M|^2) / 20.
    """
    m = u.matrix if isinstance(u, SubspaceUnitary) else np.asarray(u, dtype=complex)
    if m.shape != (6, 6):
        raise ValueError("expected a 6x6 propagator")
    if np.max(np.abs(m.conj().T @ m - np.eye(6))) > 1e-6:
        raise ValueError("propagator is not unitary")

    th_z1 = float(np.angle(m[IDX["10"], IDX["10"]]))
    th_z2 = float(np.angle(m[IDX["01"], IDX["01"]]))
    control = wrap_angle(np.angle(m[IDX["11"], IDX["11"]]) - th_z1 - th_z2)

    block = m[np.ix_(_COMP, _COMP)]
    leak = m[np.ix_(_LEAK, _COMP)]
    leakage = float(np.mean(np.sum(np.abs(leak) ** 2, axis=0)))
    swap_error = float(np.abs(m[IDX["01"], IDX["10"]]) ** 2)

    zc = np.diag(np.exp(1j * np.array([0.0, th_z2, th_z1, th_z1 + th_z2])))
    mcorr = CZ_TARGET.conj().T @ zc.conj().T @ block
    fid = (np.trace(mcorr.conj().T @ mcorr).real + np.abs(np.trace(mcorr)) ** 2) / 20.0
    return GateMetrics(
        control_phase=control,
        single_qubit_phases=(th_z1, th_z2),
        leakage=leakage,
        swap_error=swap_error,
        avg_fidelity=float(fid),
    )


@dataclass(frozen=True)
class ScanResult:
    """Grid scan output: values[i, j] at detuning y[i] (MHz) and amplitude x[j]."""

    x: np.ndarray  # average-amplitude proxy per column
    y: np.ndarray  # detuning from resonance (MHz)
    values: np.ndarray
    amplitude_scale: np.ndarray  # raw scale per column

    def __post_init__(self):
        if self.values.shape != (len(self.y), len(self.x)):
            raise ValueError("values must be len(y) x len(x)")


def resonance_frequency(model: DeviceModel) -> float:
    """Drive frequency (GHz) of the |11> <-> |20> transition at idle."""
    f = diag_frequencies(model)
    return float(abs(f[IDX["11"]] - f[IDX["20"]]))


def _scan_grid(model, base_pulse, amp_grid, detune_grid_mhz, include_shift):
    f_res = resonance_frequency(model)
    amp_grid = np.asarray(amp_grid, dtype=float)
    det_grid = np.asarray(detune_grid_mhz, dtype=float)
    if amp_grid.size == 0 or det_grid.size == 0:
        raise ValueError("scan grids must be non-empty")
    for det in det_grid:
        for amp in amp_grid:
            pulse = base_pulse.with_(amplitude_scale=float(amp), f_carrier=f_res + det * 1e-3)
            yield det, amp, pulse


def swap_scan(
    model: DeviceModel,
    base_pulse: PulseParams,
    amp_grid,
    detune_grid_mhz,
    include_shift: bool = False,
) -> ScanResult:
    """Population remaining in |11> after the pulse, vs amplitude and detuning."""
    amp_grid = np.asarray(amp_grid, dtype=float)
    det_grid = np.asarray(detune_grid_mhz, dtype=float)
    vals = np.empty((det_grid.size, amp_grid.size))
    it = _scan_grid(model, base_pulse, amp_grid, det_grid, include_shift)
    for (i, j), (det, amp, pulse) in zip(np.ndindex(vals.shape), it):
        u = evolve(model, pulse, include_shift=include_shift)
        vals[i, j] = np.abs(u.matrix[IDX["11"], IDX["11"]]) ** 2
    abar = np.array([average_amplitude(base_pulse.with_(amplitude_scale=float(a))) for a in amp_grid])
    return ScanResult(x=abar, y=det_grid, values=vals, amplitude_scale=amp_grid)


def _control_phase_from(u: np.ndarray) -> float:
    """Conditional phase via the two Ramsey-style preparations of qubit 1.

    Qubit 1 starts in a superposition with qubit 2 in |0> or |1>; the phase
    picked up by qubit 1 is compared between the two cases.
    """
    i00, i01, i10, i11 = (IDX["00"], IDX["01"], IDX["10"], IDX["11"])
    # qubit 2 in |1>: input (|01> + |11>)/sqrt(2)
    a1 = (u[i11, i01] + u[i11, i11]) / np.sqrt(2.0)
    b1 = (u[i01, i01] + u[i01, i11]) / np.sqrt(2.0)
    # qubit 2 in |0>: input (|00> + |10>)/sqrt(2)
    a0 = (u[i10, i00] + u[i10, i10]) / np.sqrt(2.0)
    b0 = (u[i00, i00] + u[i00, i10]) / np.sqrt(2.0)
    th1 = np.angle(a1) - np.angle(b1)
    th0 = np.angle(a0) - np.angle(b0)
    return wrap_angle(th1 - th0)


def phase_scan(
    model: DeviceModel,
    base_pulse: PulseParams,
    amp_grid,
    detune_grid_mhz,
    include_shift: bool = False,
) -> ScanResult:
    """Control phase (rad, wrapped to (-pi, pi]) vs amplitude and detuning."""
    amp_grid = np.asarray(amp_grid, dtype=float)
    det_grid = np.asarray(detune_grid_mhz, dtype=float)
    vals = np.empty((det_grid.size, amp_grid.size))
    it = _scan_grid(model, base_pulse, amp_grid, det_grid, include_shift)
    for (i, j), (det, amp, pulse) in zip(np.ndindex(vals.shape), it):
        u = interaction_frame(evolve(model, pulse, include_shift=include_shift), model)
        vals[i, j] = _control_phase_from(u.matrix)
    abar = np.array([average_amplitude(base_pulse.with_(amplitude_scale=float(a))) for a in amp_grid])
    return ScanResult(x=abar, y=det_grid, values=vals, amplitude_scale=amp_grid)
