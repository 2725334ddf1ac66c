"""Time evolution of the driven two-transmon interaction subspace.

The propagator is integrated in the frame rotating at the idle transition
frequencies, where the only surviving terms are the coupling-driven
off-diagonals (with explicit phase factors) and, optionally, the flux-induced
diagonal frequency shifts. The six-state basis splits into an uncoupled |00>,
a 2x2 swap block {|01>,|10>} and a 3x3 block {|11>,|02>,|20>}, which are
propagated separately with fixed-step RK4 plus automatic step halving.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .device import DeviceModel, working_point_check
from .pulses import PulseParams, flux_value

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


__all__ = [
    "BASIS",
    "SubspaceUnitary",
    "StepConvergenceError",
    "diag_frequencies",
    "evolve",
    "interaction_frame",
    "lab_frame",
]

BASIS = ("00", "01", "10", "11", "02", "20")
IDX = {s: i for i, s in enumerate(BASIS)}

SQRT2 = np.sqrt(2.0)
UNITARITY_TOL = 1e-8


class StepConvergenceError(RuntimeError):
    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class SubspaceUnitary:
    """6x6 propagator on the ordered basis {|00>,|01>,|10>,|11>,|02>,|20>}."""

    matrix: np.ndarray
    t_total: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (6, 6):
            raise ValueError("matrix must be 6x6")
        defect = np.max(np.abs(m.conj().T @ m - np.eye(6)))
        if defect > UNITARITY_TOL:
            raise ValueError(f"matrix not unitary: max |U+U - I| = {defect:.2e}")
        object.__setattr__(self, "matrix", m)


def diag_frequencies(model: DeviceModel, phi: float | None = None, include_shift: bool = False) -> np.ndarray:
    """Diagonal frequencies (GHz) of the six basis states at coupler flux phi.

    f11 = f10 + f01 (static ZZ taken as zero at the decoupling idle point),
    f20 = 2 f10 + eta1, f02 = 2 f01 + eta2. With include_shift the dispersive
    qubit shifts at phi are added (doubled for the doubly excited levels).
    """
    sp = model.spectral
    f10 = sp.f01_q1  # |10>: qubit 1 excited
    f01 = sp.f01_q2
    if include_shift:
        if phi is None:
            phi = model.flux_idle
        d1, d2 = model.freq_shift(phi)
        f10 = f10 + d1 * 1e-3
        f01 = f01 + d2 * 1e-3
    return np.array(
        [
            0.0,
            f01,
            f10,
            f10 + f01,
            2.0 * f01 + sp.eta_q2,
            2.0 * f10 + sp.eta_q1,
        ]
    )


@njit(cache=True)
def _rk4_block(c, diag, pairs, n, dt, nsteps):  # pragma: no cover - jit kernel
    """RK4 on dU/dt = -2j pi H(t) U for one n x n block.

    c[p, i] holds the complex coupling coefficient of pair p at half-step i;
    diag[r, i] the diagonal (GHz). pairs[p] = (row, col) of each coupling.
    """
    U = np.eye(n, dtype=np.complex128)
    H = np.zeros((n, n), dtype=np.complex128)
    Us = np.zeros((n, n), dtype=np.complex128)
    K = np.zeros((n, n), dtype=np.complex128)
    acc = np.zeros((n, n), dtype=np.complex128)
    noff = pairs.shape[0]
    m2pij = -2j * np.pi
    for i in range(nsteps):
        for stage in range(4):
            if stage == 0:
                idx = 2 * i
                a = 0.0
                w = dt / 6.0
            elif stage == 3:
                idx = 2 * i + 2
                a = dt
                w = dt / 6.0
            else:
                idx = 2 * i + 1
                a = dt / 2.0
                w = dt / 3.0
            for r in range(n):
                for s in range(n):
                    H[r, s] = 0.0
                    Us[r, s] = U[r, s] + a * K[r, s]
            for p in range(noff):
                r = pairs[p, 0]
                s = pairs[p, 1]
                H[r, s] = c[p, idx]
                H[s, r] = np.conj(c[p, idx])
            for r in range(n):
                H[r, r] = diag[r, idx]
            for r in range(n):
                for s in range(n):
                    z = 0.0 + 0.0j
                    for q in range(n):
                        z += H[r, q] * Us[q, s]
                    K[r, s] = m2pij * z
            if stage == 0:
                for r in range(n):
                    for s in range(n):
                        acc[r, s] = U[r, s] + w * K[r, s]
            else:
                for r in range(n):
                    for s in range(n):
                        acc[r, s] += w * K[r, s]
        for r in range(n):
            for s in range(n):
                U[r, s] = acc[r, s]
    return U


_PAIRS_A = np.array([[1, 0]], dtype=np.int64)  # H[|10>,|01>] in block order (01, 10)
_PAIRS_B = np.array([[0, 1], [0, 2]], dtype=np.int64)  # (11,02), (11,20)


def _propagate(model: DeviceModel, pulse: PulseParams, include_shift: bool, dt: float) -> np.ndarray:
    """Interaction-frame propagator at fixed step dt (g sampled at half steps)."""
    t_total = pulse.t_total
    nsteps = max(int(round(t_total / dt)), 1)
    dt = t_total / nsteps
    th = np.arange(2 * nsteps + 1) * (dt / 2.0)

    phi = model.flux_idle + flux_value(pulse, th)
    g = np.asarray(model.g(phi), dtype=float) * 1e-3  # MHz -> GHz

    f = diag_frequencies(model, include_shift=False)
    w_swap = f[IDX["10"]] - f[IDX["01"]]
    w_leak = f[IDX["11"]] - f[IDX["02"]]
    w_targ = f[IDX["11"]] - f[IDX["20"]]
    cA = (g * np.exp(2j * np.pi * w_swap * th))[None, :]
    cB = np.vstack(
        [
            SQRT2 * g * np.exp(2j * np.pi * w_leak * th),
            SQRT2 * g * np.exp(2j * np.pi * w_targ * th),
        ]
    )
    if include_shift:
        d1, d2 = model.freq_shift(phi)
        d1 = np.asarray(d1) * 1e-3
        d2 = np.asarray(d2) * 1e-3
        diagA = np.vstack([d2, d1])
        diagB = np.vstack([d1 + d2, 2.0 * d2, 2.0 * d1])
    else:
        diagA = np.zeros((2, th.size))
        diagB = np.zeros((3, th.size))

    UA = _rk4_block(np.ascontiguousarray(cA), np.ascontiguousarray(diagA), _PAIRS_A, 2, dt, nsteps)
    UB = _rk4_block(np.ascontiguousarray(cB), np.ascontiguousarray(diagB), _PAIRS_B, 3, dt, nsteps)
    U = np.eye(6, dtype=complex)
    U[1:3, 1:3] = UA
    U[3:6, 3:6] = UB
    return U


def evolve(
    model: DeviceModel,
    pulse: PulseParams,
    include_shift: bool = False,
    step_tol: float = 1e-7,
    initial_dt: float = 0.04,
    max_refines: int = 10,
) -> SubspaceUnitary:
    """Propagate the subspace Hamiltonian over the pulse; lab-frame unitary.

    The fixed RK4 step is halved until a further halving changes no matrix
    entry by more than `step_tol`. Deterministic for fixed inputs. Collision
    margins of the carrier against the swap/leakage detunings are checked and
    reported as warnings only.
    """
    # drive-envelope peak (MHz) for the collision check
    tgrid = np.linspace(0.0, pulse.t_total, 2001)
    gpk = float(np.max(np.abs(model.g(model.flux_idle + flux_value(pulse, tgrid)))))
    margins = working_point_check(model, pulse.f_carrier, harmonics=3, drive_peak_mhz=gpk)
    bad = [m for m in margins if m.flag == "warn"]
    if bad:
        worst = min(bad, key=lambda m: m.margin_mhz)
        warnings.warn(
            f"drive harmonics near a collision: k={worst.k} {worst.channel} margin "
            f"{worst.margin_mhz:.1f} MHz < 10x drive peak {gpk:.1f} MHz",
            stacklevel=2,
        )

    dt = initial_dt
    u_prev = _propagate(model, pulse, include_shift, dt)
    delta = np.inf
    for _ in range(max_refines):
        dt /= 2.0
        u_next = _propagate(model, pulse, include_shift, dt)
        delta = float(np.max(np.abs(u_next - u_prev)))
        if delta < step_tol:
            u_int = u_next
            break
        u_prev = u_next
    else:
        raise StepConvergenceError(
            f"step halving did not converge below {step_tol:.1e} "
            f"(achieved {delta:.2e} at dt = {dt:.2e} ns)",
            achieved=delta,
        )

    f = diag_frequencies(model, include_shift=False)
    phases = np.exp(-2j * np.pi * f * pulse.t_total)
    u_lab = phases[:, None] * u_int
    return SubspaceUnitary(matrix=u_lab, t_total=pulse.t_total)


def interaction_frame(u: SubspaceUnitary, model: DeviceModel) -> SubspaceUnitary:
    """Remove the idle-frequency diagonal phases (computational rotating frame)."""
    f = diag_frequencies(model, include_shift=False)
    phases = np.exp(2j * np.pi * f * u.t_total)
    return SubspaceUnitary(matrix=phases[:, None] * u.matrix, t_total=u.t_total)


def lab_frame(u: SubspaceUnitary, model: DeviceModel) -> SubspaceUnitary:
    """Inverse of interaction_frame."""
    f = diag_frequencies(model, include_shift=False)
    phases = np.exp(-2j * np.pi * f * u.t_total)
    return SubspaceUnitary(matrix=phases[:, None] * u.matrix, t_total=u.t_total)
