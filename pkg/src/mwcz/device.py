"""Device model for two transmons joined by a flux-tunable coupler.

Builds qubit/coupler spectra either from circuit parameters (capacitances,
junction critical currents) or directly from spectral parameters, and exposes
the effective qubit-qubit coupling as a function of the coupler flux bias.
Frequencies are linear (GHz) throughout; couplings are in MHz.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import constants
from scipy.optimize import brentq, least_squares

__all__ = [
    "CircuitParams",
    "SpectralParams",
    "DeviceModel",
    "ElementEnergies",
    "CollisionMargin",
    "CouplerDegeneracyError",
    "DispersiveRegimeWarning",
    "CalibrationError",
    "transmon_spectrum",
    "junction_energies",
    "ej_of_flux",
    "coupler_frequency",
    "effective_coupling",
    "spectral_from_circuit",
    "calibrate_g_curve",
    "find_decoupling_flux",
    "working_point_check",
    "load_device",
    "reference_spectral",
    "reference_device",
    "COUPLING_ANCHORS",
]

# E_J/h per nA of critical current: I_c * Phi0 / (2 pi h) = I_c / (4 pi e)
_EJ_GHZ_PER_NA = 1e-9 / (4.0 * np.pi * constants.e) / 1e9
# E_C/h for 1 fF: e^2 / (2 C h)
_EC_GHZ_FF = constants.e**2 / (2.0 * 1e-15 * constants.h) / 1e9

TRANSMON_RATIO_MIN = 20.0


class CouplerDegeneracyError(ValueError):
    """Coupler frequency too close to a qubit for the dispersive coupling formula."""


class DispersiveRegimeWarning(UserWarning):
    """Coupler within 10x g_qc of a qubit; dispersive coupling only approximate."""


class CalibrationError(RuntimeError):
    def __init__(self, message: str, residual_mhz: float):
        super().__init__(message)
        self.residual_mhz = residual_mhz


@dataclass(frozen=True)
class CircuitParams:
    """Lumped-element circuit parameters: capacitances in fF, critical currents in nA."""

    c_qubit1: float
    c_qubit2: float
    c_coupler: float
    c_qq: float
    c_qc1: float
    c_qc2: float
    ic_q1a: float
    ic_q1b: float
    ic_q2a: float
    ic_q2b: float
    ic_ca: float
    ic_cb: float

    def __post_init__(self):
        for name in ("c_qubit1", "c_qubit2", "c_coupler", "c_qq", "c_qc1", "c_qc2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"capacitance {name} must be > 0")
        for name in ("ic_q1a", "ic_q1b", "ic_q2a", "ic_q2b", "ic_ca", "ic_cb"):
            if getattr(self, name) <= 0:
                raise ValueError(f"critical current {name} must be > 0")


@dataclass(frozen=True)
class SpectralParams:
    """Spectral description of the device.

    Qubit 01 frequencies and anharmonicities in GHz, coupler maximum frequency
    and SQUID asymmetry, bare couplings in MHz.
    """

    f01_q1: float
    f01_q2: float
    eta_q1: float
    eta_q2: float
    fc_max: float
    d_coupler: float
    g_qq: float
    g_qc1: float
    g_qc2: float

    def __post_init__(self):
        if self.f01_q1 <= 0 or self.f01_q2 <= 0 or self.fc_max <= 0:
            raise ValueError("qubit and coupler frequencies must be > 0")
        if not 0 <= self.d_coupler < 1:
            raise ValueError("d_coupler must lie in [0, 1)")

    @property
    def fc_min(self) -> float:
        return coupler_frequency(self, 0.5)


@dataclass(frozen=True)
class ElementEnergies:
    """Josephson/charging energies of one circuit element (GHz, frequency units)."""

    ej_max: float
    d: float
    ec: float


@dataclass(frozen=True)
class CollisionMargin:
    k: int
    channel: str  # "swap" (detuning) or "leak" (leakage detuning)
    margin_mhz: float
    flag: str  # "pass" or "warn"


def transmon_spectrum(ej: float, ec: float) -> tuple[float, float]:
    """Transmon 01 frequency and anharmonicity from E_J, E_C (GHz).

    Uses f01 = sqrt(8 E_J E_C) - E_C and eta = -E_C. Emits a warning outside
    the transmon regime (E_J/E_C < 20) but still returns the values.
    """
    if ej <= 0 or ec <= 0:
        raise ValueError("ej and ec must be positive")
    if ej / ec < TRANSMON_RATIO_MIN:
        warnings.warn(
            f"E_J/E_C = {ej / ec:.2f} is below the transmon regime "
            f"(>= {TRANSMON_RATIO_MIN:.0f}); spectrum approximation degraded",
            stacklevel=2,
        )
    f01 = np.sqrt(8.0 * ej * ec) - ec
    return float(f01), float(-ec)


def junction_energies(params: CircuitParams) -> dict[str, ElementEnergies]:
    """Per-element (ej_max, d, ec) from critical currents and node capacitances.

    Parallel junctions add; the charging energy uses the total capacitance
    attached to each node.
    """
    out = {}
    for name, (ica, icb, csum) in {
        "qubit1": (params.ic_q1a, params.ic_q1b, params.c_qubit1 + params.c_qc1 + params.c_qq),
        "qubit2": (params.ic_q2a, params.ic_q2b, params.c_qubit2 + params.c_qc2 + params.c_qq),
        "coupler": (params.ic_ca, params.ic_cb, params.c_coupler + params.c_qc1 + params.c_qc2),
    }.items():
        ej_max = (ica + icb) * _EJ_GHZ_PER_NA
        d = abs(ica - icb) / (ica + icb)
        ec = _EC_GHZ_FF / csum
        out[name] = ElementEnergies(ej_max=ej_max, d=d, ec=ec)
    return out


def ej_of_flux(ej_max: float, d: float, phi):
    """Flux-tunable Josephson energy of an asymmetric SQUID.

    E_J(phi) = E_J,max * sqrt(cos^2(pi phi) + d^2 sin^2(pi phi)); phi in units
    of the flux quantum. Even and 1-periodic, bounded in [d*E_J,max, E_J,max].
    """
    phi = np.asarray(phi, dtype=float)
    c = np.cos(np.pi * phi)
    s = np.sin(np.pi * phi)
    val = ej_max * np.sqrt(c * c + d * d * s * s)
    return float(val) if val.ndim == 0 else val


def coupler_frequency(spectral: SpectralParams, phi):
    """Coupler 01 frequency vs flux, f ~ sqrt(E_J(phi)), normalized to fc_max."""
    phi = np.asarray(phi, dtype=float)
    c = np.cos(np.pi * phi)
    s = np.sin(np.pi * phi)
    val = spectral.fc_max * (c * c + spectral.d_coupler**2 * s * s) ** 0.25
    return float(val) if val.ndim == 0 else val


def effective_coupling(spectral: SpectralParams, phi, check: bool = True):
    """Effective qubit-qubit coupling (MHz) at coupler flux phi (Phi0 units).

    Dispersive tunable-coupler expression: the direct coupling plus the
    coupler-mediated virtual exchange,

        g_eff = g_qq + (g_qc1 g_qc2 / 2) (1/D1 + 1/D2 - 1/S1 - 1/S2),

    with Di = fi - fc(phi) and Si = fi + fc(phi).

    Raises CouplerDegeneracyError when the coupler approaches either qubit
    within 2x the qubit-coupler coupling; warns inside 10x (dispersive
    accuracy degrades there).
    """
    phi_arr = np.asarray(phi, dtype=float)
    fc = coupler_frequency(spectral, phi_arr)
    f1, f2 = spectral.f01_q1, spectral.f01_q2
    d1 = f1 - fc
    d2 = f2 - fc
    if check:
        for label, det, gqc in (("qubit1", d1, spectral.g_qc1), ("qubit2", d2, spectral.g_qc2)):
            gqc_ghz = abs(gqc) * 1e-3
            amin = float(np.min(np.abs(det)))
            if gqc_ghz > 0 and amin <= 2.0 * gqc_ghz:
                idx = int(np.argmin(np.abs(det)))
                fc_bad = float(np.ravel(fc)[idx]) if fc.ndim else float(fc)
                fq = f1 if label == "qubit1" else f2
                raise CouplerDegeneracyError(
                    f"coupler at {fc_bad:.4f} GHz degenerate with {label} at {fq:.4f} GHz "
                    f"(|detuning| = {amin * 1e3:.1f} MHz <= 2x g_qc = {2 * gqc * 1.0:.1f} MHz)"
                )
            if gqc_ghz > 0 and amin <= 10.0 * gqc_ghz:
                warnings.warn(
                    f"coupler within 10x g_qc of {label}; dispersive coupling approximate",
                    DispersiveRegimeWarning,
                    stacklevel=2,
                )
    s1 = f1 + fc
    s2 = f2 + fc
    virt = (spectral.g_qc1 * 1e-3) * (spectral.g_qc2 * 1e-3) / 2.0 * (
        1.0 / d1 + 1.0 / d2 - 1.0 / s1 - 1.0 / s2
    )
    g = spectral.g_qq + virt * 1e3
    return float(g) if np.ndim(phi) == 0 else g


def spectral_from_circuit(circuit: CircuitParams) -> SpectralParams:
    """Spectral parameters derived from circuit values.

    Qubit/coupler spectra use the transmon closed form at zero qubit flux;
    bare couplings use the capacitance-ratio estimate
    g = (C_c / sqrt(C_a C_b)) sqrt(f_a f_b) / 2.
    """
    en = junction_energies(circuit)
    f1, eta1 = transmon_spectrum(en["qubit1"].ej_max, en["qubit1"].ec)
    f2, eta2 = transmon_spectrum(en["qubit2"].ej_max, en["qubit2"].ec)
    fc, _ = transmon_spectrum(en["coupler"].ej_max, en["coupler"].ec)
    g_qc1 = 0.5 * circuit.c_qc1 / np.sqrt(circuit.c_qubit1 * circuit.c_coupler) * np.sqrt(f1 * fc) * 1e3
    g_qc2 = 0.5 * circuit.c_qc2 / np.sqrt(circuit.c_qubit2 * circuit.c_coupler) * np.sqrt(f2 * fc) * 1e3
    g_qq = 0.5 * circuit.c_qq / np.sqrt(circuit.c_qubit1 * circuit.c_qubit2) * np.sqrt(f1 * f2) * 1e3
    return SpectralParams(
        f01_q1=f1,
        f01_q2=f2,
        eta_q1=eta1,
        eta_q2=eta2,
        fc_max=fc,
        d_coupler=en["coupler"].d,
        g_qq=g_qq,
        g_qc1=g_qc1,
        g_qc2=g_qc2,
    )


@dataclass(frozen=True)
class DeviceModel:
    """Spectral parameters plus the idle flux working point.

    `g_override`, when given, replaces the dispersive coupling curve with an
    arbitrary callable phi -> MHz (used for synthetic/linearized devices).
    """

    spectral: SpectralParams
    flux_idle: float
    g_override: Callable[[np.ndarray], np.ndarray] | None = None

    def g(self, phi, check: bool = True):
        """Effective coupling curve g(phi) in MHz."""
        if self.g_override is not None:
            val = self.g_override(np.asarray(phi, dtype=float))
            return float(val) if np.ndim(phi) == 0 else np.asarray(val, dtype=float)
        return effective_coupling(self.spectral, phi, check=check)

    def freq_shift(self, phi):
        """Dispersive qubit frequency shifts (MHz) relative to the idle point.

        delta_i(phi) = g_qci^2 (1/Di(phi) - 1/Di(flux_idle)); zero at idle.
        """
        phi = np.asarray(phi, dtype=float)
        sp = self.spectral
        fc = coupler_frequency(sp, phi)
        fc0 = coupler_frequency(sp, self.flux_idle)
        d1 = (sp.g_qc1 * 1e-3) ** 2 * (1.0 / (sp.f01_q1 - fc) - 1.0 / (sp.f01_q1 - fc0)) * 1e3
        d2 = (sp.g_qc2 * 1e-3) ** 2 * (1.0 / (sp.f01_q2 - fc) - 1.0 / (sp.f01_q2 - fc0)) * 1e3
        if np.ndim(phi) == 0:
            return float(d1), float(d2)
        return d1, d2


def calibrate_g_curve(
    anchors: Sequence[tuple[float, float]],
    initial: SpectralParams,
    free: Sequence[str] = ("g_qq", "g_scale", "fc_max", "d_coupler"),
    max_nfev: int = 2000,
    residual_tol_mhz: float = 1.0,
) -> SpectralParams:
    """Least-squares fit of the coupling curve to (phi, g_MHz) anchor points.

    Free parameters are a subset of {"g_qq", "g_scale", "fc_max", "d_coupler"};
    "g_scale" multiplies both qubit-coupler couplings, preserving their ratio.
    Raises CalibrationError (carrying the best residual) when the fit cannot
    reproduce the anchors to `residual_tol_mhz`.
    """
    anchors = [(float(p), float(g)) for p, g in anchors]
    if len(anchors) < 1:
        raise ValueError("need at least one anchor")
    if len(anchors) < len(free):
        # underdetermined fits are allowed; lsq settles near the initial guess
        pass
    allowed = ("g_qq", "g_scale", "fc_max", "d_coupler")
    for name in free:
        if name not in allowed:
            raise ValueError(f"unknown free parameter {name!r}")

    fq_max = max(initial.f01_q1, initial.f01_q2)
    x0, lo, hi = [], [], []
    for name in free:
        if name == "g_qq":
            x0.append(initial.g_qq), lo.append(-200.0), hi.append(200.0)
        elif name == "g_scale":
            x0.append(1.0), lo.append(1e-3), hi.append(50.0)
        elif name == "fc_max":
            x0.append(initial.fc_max), lo.append(fq_max + 0.5), hi.append(40.0)
        else:
            x0.append(initial.d_coupler), lo.append(0.01), hi.append(0.95)

    def build(x) -> SpectralParams:
        kw = {}
        for name, v in zip(free, x):
            if name == "g_scale":
                kw["g_qc1"] = initial.g_qc1 * v
                kw["g_qc2"] = initial.g_qc2 * v
            else:
                kw[name] = v
        return replace(initial, **kw)

    def resid(x):
        sp = build(x)
        try:
            return np.array([effective_coupling(sp, p, check=False) - g for p, g in anchors])
        except FloatingPointError:  # pragma: no cover
            return np.full(len(anchors), 1e6)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = least_squares(resid, x0, bounds=(lo, hi), max_nfev=max_nfev)
    best = float(np.max(np.abs(res.fun)))
    if best > residual_tol_mhz:
        raise CalibrationError(
            f"calibration did not converge: worst anchor residual {best:.3f} MHz "
            f"exceeds {residual_tol_mhz} MHz",
            residual_mhz=best,
        )
    return build(res.x)


def find_decoupling_flux(model: DeviceModel, bracket: tuple[float, float]) -> float:
    """Flux (Phi0 units) inside `bracket` where the effective coupling vanishes."""
    lo, hi = bracket
    glo = model.g(lo)
    ghi = model.g(hi)
    if np.sign(glo) == np.sign(ghi):
        raise ValueError(
            f"g does not change sign on [{lo}, {hi}]: g({lo}) = {glo:.3f}, g({hi}) = {ghi:.3f} MHz"
        )
    root = brentq(lambda p: model.g(p), lo, hi, xtol=1e-12, rtol=8.9e-16)
    return float(root)


def working_point_check(
    model: DeviceModel,
    f_target: float,
    harmonics: int = 3,
    drive_peak_mhz: float = 0.0,
) -> list[CollisionMargin]:
    """Collision margins |k f_target - Delta| and |k f_target - Delta_leak|.

    Harmonics k = 0..`harmonics` of the drive at `f_target` (GHz) are compared
    against the swap detuning Delta = |f10 - f01| and the leakage detuning
    Delta_leak = |f11 - f02| (whose mirror is the driven |11>-|20> transition
    itself). Margins below 10x the drive envelope peak are flagged "warn".
    """
    sp = model.spectral
    delta = abs(sp.f01_q1 - sp.f01_q2) * 1e3
    delta_leak = abs(sp.f01_q1 - sp.f01_q2 - sp.eta_q2) * 1e3
    out = []
    for k in range(harmonics + 1):
        fk = k * f_target * 1e3
        for channel, dref in (("swap", delta), ("leak", delta_leak)):
            margin = abs(fk - dref)
            flag = "warn" if margin < 10.0 * drive_peak_mhz else "pass"
            out.append(CollisionMargin(k=k, channel=channel, margin_mhz=margin, flag=flag))
    return out


# -- device description files -------------------------------------------------

def load_device(source) -> DeviceModel:
    """Build a DeviceModel from a description dict or a JSON file path.

    The document carries either a "spectral" block (SpectralParams fields) or
    a "circuit" block (CircuitParams fields), plus "flux_idle". An optional
    "anchors" list of [phi, g_MHz] pairs triggers calibration of the curve.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source) as fh:
            doc = json.load(fh)
    elif isinstance(source, Mapping):
        doc = dict(source)
    else:
        raise TypeError("source must be a mapping or a path to a JSON file")

    if "spectral" in doc:
        spectral = SpectralParams(**doc["spectral"])
    elif "circuit" in doc:
        spectral = spectral_from_circuit(CircuitParams(**doc["circuit"]))
    else:
        raise ValueError("device description needs a 'spectral' or 'circuit' block")

    anchors = doc.get("anchors")
    if anchors:
        spectral = calibrate_g_curve([tuple(a) for a in anchors], spectral)

    if "flux_idle" not in doc:
        raise ValueError("device description needs 'flux_idle'")
    return DeviceModel(spectral=spectral, flux_idle=float(doc["flux_idle"]))


# -- reference working point ---------------------------------------------------

# Measured coupling anchors of the modeled device: (coupler flux / Phi0, g in MHz)
COUPLING_ANCHORS = ((0.0, 11.0), (0.5, -22.0), (-0.35, 0.0))

_REF_TABLE = dict(
    f01_q1=4.770,
    f01_q2=4.839,
    eta_q1=-0.232,
    eta_q2=-0.230,
)

_ref_cache: dict[bool, SpectralParams] = {}


def reference_spectral(calibrated: bool = True) -> SpectralParams:
    """Working-point spectral parameters of the modeled two-qubit device.

    With `calibrated`, the coupler curve parameters are fit to the measured
    coupling anchors (COUPLING_ANCHORS); otherwise the raw initial guess is
    returned.
    """
    if calibrated in _ref_cache:
        return _ref_cache[calibrated]
    initial = SpectralParams(
        **_REF_TABLE,
        fc_max=13.0,
        d_coupler=0.336,
        g_qq=12.0,
        g_qc1=300.0,
        g_qc2=300.0,
    )
    sp = calibrate_g_curve(COUPLING_ANCHORS, initial) if calibrated else initial
    _ref_cache[calibrated] = sp
    return sp


def reference_device(flux_idle: float | None = None) -> DeviceModel:
    """Calibrated DeviceModel idled at the coupling-off flux."""
    sp = reference_spectral(calibrated=True)
    probe = DeviceModel(spectral=sp, flux_idle=-0.35)
    if flux_idle is None:
        flux_idle = find_decoupling_flux(probe, (-0.45, -0.25))
    return DeviceModel(spectral=sp, flux_idle=float(flux_idle))
