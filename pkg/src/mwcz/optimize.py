"""Nelder-Mead simplex optimization of the CZ control pulse.

The simplex uses the classic reflection/expansion/contraction/shrink
coefficients (1, 2, 0.5, 0.5) and records the running best cost, which is
non-increasing by construction. The gate cost is the coherent error of the
phase-corrected propagator; optional Gaussian noise emulates measurement
fluctuation in the cost readout.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .device import DeviceModel, SpectralParams, working_point_check
from .dynamics import evolve, interaction_frame
from .metrics import extract_metrics, resonance_frequency
from .pulses import DEFAULT_SHAPE_RATIO, PulseParams, envelope_shape

__all__ = [
    "OptimizerConfig",
    "OptimizationTrace",
    "NelderMeadError",
    "CollisionError",
    "FREE_PARAM_NAMES",
    "nelder_mead",
    "coherent_cost",
    "seed_pulse",
    "optimize_cz",
    "delta_sweep",
]

FREE_PARAM_NAMES = ("lambda1", "lambda3", "lambda4", "amplitude_scale", "f_carrier")


class NelderMeadError(RuntimeError):
    pass


class CollisionError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    """Pulse-optimization settings.

    free_params is a subset of FREE_PARAM_NAMES (lambda2 stays fixed as the
    shape anchor; the overall scale lives in amplitude_scale). simplex_init
    maps parameter names to initial displacements; unspecified entries default
    to 5% of magnitude with floors (0.02 for lambdas, 3 MHz for the carrier).
    """

    free_params: tuple[str, ...] = FREE_PARAM_NAMES
    max_iters: int = 200
    tolerance: float = 1e-6
    simplex_init: dict = field(default_factory=dict)
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        for name in self.free_params:
            if name not in FREE_PARAM_NAMES:
                raise ValueError(f"unknown free parameter {name!r}")
        for v in self.simplex_init.values():
            if v <= 0:
                raise ValueError("simplex displacements must be > 0")

    def displacement(self, name: str, value: float) -> float:
        if name in self.simplex_init:
            return float(self.simplex_init[name])
        if name == "f_carrier":
            return min(0.05 * abs(value), 3e-3) or 3e-3
        if name == "amplitude_scale":
            return 0.05 * abs(value) or 0.01
        return max(0.05 * abs(value), 0.02)


@dataclass
class OptimizationTrace:
    best_cost: np.ndarray  # running best per iteration (non-increasing)
    best_x: np.ndarray  # parameter vector attaining best_cost[i]
    evaluations: int
    converged: bool
    names: tuple[str, ...] = ()


def nelder_mead(
    cost,
    x0,
    displacements=None,
    max_iters: int = 200,
    tolerance: float = 1e-6,
) -> OptimizationTrace:
    """Minimize `cost` from `x0` with the standard simplex moves.

    Stops when the simplex cost spread drops below `tolerance` or after
    `max_iters` iterations. Raises NelderMeadError on a NaN cost, naming the
    offending parameter vector.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if displacements is None:
        displacements = np.where(np.abs(x0) > 1e-12, 0.05 * np.abs(x0), 0.1)
    displacements = np.asarray(displacements, dtype=float)

    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        v = float(cost(x))
        if np.isnan(v):
            raise NelderMeadError(f"cost returned NaN at x = {np.asarray(x).tolist()}")
        return v

    simplex = np.vstack([x0] + [x0 + displacements[i] * np.eye(n)[i] for i in range(n)])
    fvals = np.array([f(x) for x in simplex])

    best_cost, best_x = [], []
    converged = False
    alpha, gamma, rho, sig = 1.0, 2.0, 0.5, 0.5

    for _ in range(max_iters):
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        best_cost.append(fvals[0])
        best_x.append(simplex[0].copy())
        if fvals[-1] - fvals[0] < tolerance:
            converged = True
            break

        centroid = simplex[:-1].mean(axis=0)
        xr = centroid + alpha * (centroid - simplex[-1])
        fr = f(xr)
        if fr < fvals[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + rho * (xr - centroid)
            else:
                xc = centroid + rho * (simplex[-1] - centroid)
            fc = f(xc)
            if fc < min(fr, fvals[-1]):
                simplex[-1], fvals[-1] = xc, fc
            else:
                for i in range(1, n + 1):
                    simplex[i] = simplex[0] + sig * (simplex[i] - simplex[0])
                    fvals[i] = f(simplex[i])

    order = np.argsort(fvals, kind="stable")
    simplex, fvals = simplex[order], fvals[order]
    if not best_cost or fvals[0] < best_cost[-1]:
        best_cost.append(fvals[0])
        best_x.append(simplex[0].copy())
    # enforce the running-best view (simplex best is already monotone, but the
    # appended tail must not regress)
    best = np.minimum.accumulate(np.asarray(best_cost))
    return OptimizationTrace(
        best_cost=best,
        best_x=np.asarray(best_x),
        evaluations=evals,
        converged=converged,
    )


def _apply_vector(base: PulseParams, names, x) -> PulseParams:
    return base.with_(**{name: float(v) for name, v in zip(names, x)})


def coherent_cost(
    model: DeviceModel,
    base_pulse: PulseParams,
    free_params=FREE_PARAM_NAMES,
    sigma: float = 0.0,
    rng: np.random.Generator | None = None,
    include_shift: bool = False,
):
    """Cost function: parameter vector -> coherent error of the resulting gate.

    Deterministic when sigma = 0; otherwise each call adds Gaussian noise of
    width sigma drawn from `rng` (measurement-fluctuation stand-in).
    """
    if sigma > 0 and rng is None:
        rng = np.random.default_rng(0)

    def cost(x):
        pulse = _apply_vector(base_pulse, free_params, x)
        u = interaction_frame(evolve(model, pulse, include_shift=include_shift), model)
        err = extract_metrics(u).coherent_error
        if sigma > 0:
            err += float(rng.normal(0.0, sigma))
        return err

    return cost


def _shape_integral(pulse: PulseParams) -> float:
    """Integral of the unit-scale envelope shape over the active window (ns)."""
    ta = pulse.t_active
    t = np.linspace(0.0, ta, 4001)
    return float(np.trapz(envelope_shape(pulse, t), t))


def seed_pulse(model: DeviceModel, t_active: float = 100.0, t_pad: float = 3.0) -> PulseParams:
    """Starting pulse: default shape ratio, resonant carrier, area-rule amplitude.

    The amplitude is set so the rotating-frame pulse area of the driven
    |11> <-> |20> transition is one full cycle: integral of sqrt(2) Omega(t) dt
    = 2 pi (angular units), with Omega estimated from the local slope of the
    coupling curve at the idle flux.
    """
    l1, l2, l3, l4 = DEFAULT_SHAPE_RATIO
    pulse = PulseParams(
        lambda1=l1,
        lambda2=l2,
        lambda3=l3,
        lambda4=l4,
        amplitude_scale=1.0,
        f_carrier=resonance_frequency(model),
        phase=0.0,
        t_active=t_active,
        t_pad=t_pad,
    )
    eps = 1e-4
    slope = (model.g(model.flux_idle + eps) - model.g(model.flux_idle - eps)) / (2 * eps)
    area = abs(_shape_integral(pulse))  # ns (unit scale)
    if area <= 0 or slope == 0:
        raise ValueError("degenerate seed: zero shape area or flat coupling curve")
    scale = 1.0 / (np.sqrt(2.0) * abs(slope) * 1e-3 * area)
    return pulse.with_(amplitude_scale=scale)


def optimize_cz(
    model: DeviceModel,
    t_active: float = 100.0,
    config: OptimizerConfig | None = None,
    t_pad: float = 3.0,
    include_shift: bool = False,
    initial: PulseParams | None = None,
):
    """Optimize the pulse for a CZ at the model's working point.

    Returns (optimized PulseParams, GateMetrics re-verified by a fresh
    propagation, OptimizationTrace). Hard collisions of the carrier harmonics
    with the swap/leakage detunings raise CollisionError.
    """
    config = config or OptimizerConfig()
    pulse = initial if initial is not None else seed_pulse(model, t_active, t_pad)

    gpk = _drive_peak(model, pulse)
    margins = working_point_check(model, pulse.f_carrier, harmonics=2, drive_peak_mhz=gpk)
    hard = [m for m in margins if m.margin_mhz < 2.0 * gpk]
    if hard:
        worst = min(hard, key=lambda m: m.margin_mhz)
        raise CollisionError(
            f"hard collision: k={worst.k} {worst.channel} margin {worst.margin_mhz:.1f} MHz "
            f"< 2x drive peak {gpk:.1f} MHz"
        )

    rng = np.random.default_rng(config.seed)
    cost = coherent_cost(
        model, pulse, config.free_params, sigma=config.sigma, rng=rng, include_shift=include_shift
    )

    # coarse amplitude refinement stands in for the swap/phase-scan seeding
    if "amplitude_scale" in config.free_params:
        i_amp = config.free_params.index("amplitude_scale")
        x_probe = np.array([getattr(pulse, n) for n in config.free_params])
        best_amp, best_val = pulse.amplitude_scale, np.inf
        for factor in (0.85, 1.0, 1.15):
            x_probe[i_amp] = pulse.amplitude_scale * factor
            v = cost(x_probe)
            if v < best_val:
                best_amp, best_val = x_probe[i_amp], v
        pulse = pulse.with_(amplitude_scale=float(best_amp))

    x0 = np.array([getattr(pulse, n) for n in config.free_params])
    disp = np.array([config.displacement(n, v) for n, v in zip(config.free_params, x0)])
    trace = nelder_mead(cost, x0, disp, max_iters=config.max_iters, tolerance=config.tolerance)
    trace.names = tuple(config.free_params)

    final = _apply_vector(pulse, config.free_params, trace.best_x[-1])
    u = interaction_frame(evolve(model, final, include_shift=include_shift), model)
    metrics = extract_metrics(u)
    return final, metrics, trace


def _drive_peak(model: DeviceModel, pulse: PulseParams) -> float:
    from .pulses import flux_value

    t = np.linspace(0.0, pulse.t_total, 2001)
    return float(np.max(np.abs(model.g(model.flux_idle + flux_value(pulse, t)))))


def delta_sweep(
    model: DeviceModel,
    deltas_mhz,
    t_active: float = 100.0,
    iters: int = 200,
    include_shift: bool = False,
) -> list[tuple[float, float]]:
    """Best coherent error vs qubit detuning Delta, re-optimized at each point.

    For each Delta (MHz) the spectator qubit is moved to f_q1 - Delta, keeping
    qubit 1 (whose |2> level the drive targets) fixed, and the pulse is
    re-optimized from a fresh seed. Collisions of the drive harmonics with the
    swap/leakage detunings appear as error spikes.
    """
    results = []
    for delta in np.asarray(deltas_mhz, dtype=float):
        if delta == 0.0:
            raise ValueError("delta grid must avoid exact qubit degeneracy")
        sp = model.spectral
        shifted = replace(sp, f01_q2=sp.f01_q1 - delta * 1e-3)
        m = DeviceModel(spectral=shifted, flux_idle=model.flux_idle, g_override=model.g_override)
        cfg = OptimizerConfig(max_iters=iters)
        try:
            _, metrics, _ = optimize_cz(m, t_active=t_active, config=cfg, include_shift=include_shift)
            err = metrics.coherent_error
        except CollisionError:
            err = 1.0  # unoptimizable working point: report saturated error
        results.append((float(delta), float(err)))
    return results
