"""CSV/JSON emitters for series, spectra, scans, traces and reports.

Numbers are written with shortest round-trip precision (repr) so re-running a
configuration reproduces output files byte for byte.
"""

from __future__ import annotations

import json
import os
from contextlib import contextmanager

import numpy as np

from .benchmark import BudgetReport, DecayDataset
from .dynamics import SubspaceUnitary
from .metrics import GateMetrics, ScanResult
from .pulses import TimeSeries

__all__ = [
    "atomic_write",
    "fmt",
    "write_series_csv",
    "write_spectrum_csv",
    "write_curve_csv",
    "write_scan_csv",
    "write_trace_csv",
    "write_sweep_csv",
    "write_decay_csv",
    "metrics_to_dict",
    "unitary_to_dict",
    "write_json",
]


def fmt(x) -> str:
    """Shortest exact decimal for a float."""
    return repr(float(x))


@contextmanager
def atomic_write(path):
    """Write to `path`.partial and rename on success; the partial file stays
    behind (suffixed) if writing fails."""
    tmp = f"{path}.partial"
    fh = open(tmp, "w")
    try:
        yield fh
    except BaseException:
        fh.close()
        raise
    fh.close()
    os.replace(tmp, path)


def _write_rows(path, header: list[str], rows):
    with atomic_write(path) as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_series_csv(path, series: TimeSeries, value_name: str = "value"):
    _write_rows(path, ["t_ns", value_name], zip(series.t, series.values))


def write_spectrum_csv(path, freqs, mags):
    _write_rows(path, ["freq_GHz", "magnitude"], zip(freqs, mags))


def write_curve_csv(path, phi, g_mhz):
    _write_rows(path, ["phi", "g_MHz"], zip(phi, g_mhz))


def write_scan_csv(path, scan: ScanResult):
    """Matrix CSV: first row the amplitude grid, first column the detunings."""
    with atomic_write(path) as fh:
        fh.write("detuning_MHz\\amplitude," + ",".join(fmt(a) for a in scan.x) + "\n")
        for det, row in zip(scan.y, scan.values):
            fh.write(fmt(det) + "," + ",".join(fmt(v) for v in row) + "\n")


def write_trace_csv(path, trace):
    names = list(trace.names) if trace.names else [f"x{i}" for i in range(trace.best_x.shape[1])]
    _write_rows(
        path,
        ["iter", "best_cost"] + names,
        ([i, c] + list(x) for i, (c, x) in enumerate(zip(trace.best_cost, trace.best_x))),
    )


def write_sweep_csv(path, sweep):
    _write_rows(path, ["delta_MHz", "coherent_error"], sweep)


def write_decay_csv(path, data: DecayDataset):
    _write_rows(
        path,
        ["m", "alpha", "sqrt_purity", "leak_pop"],
        zip(data.depths, data.alpha, data.sqrt_purity, data.leak_pop),
    )


def metrics_to_dict(metrics: GateMetrics) -> dict:
    return {
        "control_phase_rad": metrics.control_phase,
        "single_qubit_phases_rad": list(metrics.single_qubit_phases),
        "leakage": metrics.leakage,
        "swap_error": metrics.swap_error,
        "avg_fidelity": metrics.avg_fidelity,
        "coherent_error": metrics.coherent_error,
    }


def unitary_to_dict(u: SubspaceUnitary) -> dict:
    """Row-major 6x6 matrix as [re, im] pairs."""
    return {
        "t_total_ns": u.t_total,
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in u.matrix],
    }


def budget_to_dict(report: BudgetReport) -> dict:
    out = {}
    for label, row in report.rows.items():
        out[label] = {
            "n_qubits": row.n_qubits,
            "p_xeb": row.p_xeb,
            "p_spb": row.p_spb,
            "r_p_xeb": row.r_p_xeb,
            "r_p_spb": row.r_p_spb,
            "r_leak": row.r_leak,
            "r_p_dec": row.r_p_dec,
            "r_p_ctrl": row.r_p_ctrl,
            "fidelity": row.fidelity,
        }
    return out


def write_json(path, payload: dict):
    with atomic_write(path) as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
