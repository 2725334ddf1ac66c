"""Cross-entropy / speckle-purity benchmarking on a two-qutrit noise model.

Random cycles (independent Haar single-qubit rotations followed by the
two-qubit gate) are propagated as 9-dimensional density matrices so leakage
into the second excited states is tracked as a first-class population.
Amplitude damping and pure dephasing enter per time slot from T1/T2; the
second excited level relaxes and dephases at the usual enhanced rates.

Estimators (per circuit, D computational outcomes, probabilities renormalized
over the computational subspace):

    alpha  = (D sum(p_noisy p_ideal) - 1) / (D sum(p_ideal^2) - 1)
    sqrt_P = sqrt( Var(p_noisy) / Var(p_ideal) )

The variance-ratio purity estimator carries the Porter-Thomas normalization
implicitly, is exactly 1 for noiseless circuits, and obeys sqrt_P >= alpha by
Cauchy-Schwarz. Decays are fitted to y = A p^m + B and converted to Pauli /
leakage error rates and gate fidelities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .dynamics import SubspaceUnitary

__all__ = [
    "NoiseModel",
    "DecayDataset",
    "FitResult",
    "ErrorBudget",
    "BudgetReport",
    "FitError",
    "xeb_simulate",
    "single_qubit_xeb",
    "fit_decay",
    "pauli_error",
    "leakage_error",
    "extract_gate_error",
    "gate_fidelity",
    "build_budget",
    "budget_table",
    "ideal_cz_9",
    "embed_subspace_unitary",
]

_COMP9 = np.array([0, 1, 3, 4])  # |00>,|01>,|10>,|11> in the 3x3-indexed space
_MAP_6_TO_9 = np.array([0, 1, 3, 4, 2, 6])  # basis order 00,01,10,11,02,20


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    """Relaxation/dephasing times (us) and gate slot durations (ns)."""

    t1_q1: float
    t1_q2: float
    t2_q1: float
    t2_q2: float
    t_single: float = 50.0
    t_cz: float = 106.0

    def __post_init__(self):
        for name in ("t1_q1", "t1_q2", "t2_q1", "t2_q2", "t_single", "t_cz"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.t2_q1 > 2.0 * self.t1_q1 or self.t2_q2 > 2.0 * self.t1_q2:
            raise ValueError("T2 cannot exceed 2*T1")

    def tphi(self, qubit: int) -> float:
        """Pure dephasing time (us); inf when T2 = 2 T1."""
        t1 = (self.t1_q1, self.t1_q2)[qubit]
        t2 = (self.t2_q1, self.t2_q2)[qubit]
        rate = 1.0 / t2 - 1.0 / (2.0 * t1)
        return np.inf if rate <= 0 else 1.0 / rate


@dataclass(frozen=True)
class DecayDataset:
    depths: np.ndarray
    alpha: np.ndarray
    sqrt_purity: np.ndarray
    leak_pop: np.ndarray
    n_circuits: int
    seed: int

    def __post_init__(self):
        d = np.asarray(self.depths, dtype=int)
        if np.any(np.diff(d) <= 0):
            raise ValueError("depths must be strictly increasing")
        for name in ("alpha", "sqrt_purity", "leak_pop"):
            if len(getattr(self, name)) != d.size:
                raise ValueError("dataset arrays must have equal length")
        object.__setattr__(self, "depths", d)


@dataclass(frozen=True)
class FitResult:
    a: float
    p: float
    b: float
    residual: float

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError("decay base p must lie in (0, 1]")


# -- channels -----------------------------------------------------------------

def _qutrit_damping_kraus(gamma1: float, gamma2: float) -> list[np.ndarray]:
    """Amplitude damping: |1>->|0> with prob gamma1, |2>->|1> with gamma2."""
    k0 = np.diag([1.0, np.sqrt(1.0 - gamma1), np.sqrt(1.0 - gamma2)]).astype(complex)
    k1 = np.zeros((3, 3), dtype=complex)
    k1[0, 1] = np.sqrt(gamma1)
    k2 = np.zeros((3, 3), dtype=complex)
    k2[1, 2] = np.sqrt(gamma2)
    return [k0, k1, k2]


def _slot_channel(noise: NoiseModel, t_ns: float):
    """Precomputed 9-dim Kraus sets and dephasing mask for one time slot."""
    t_us = t_ns * 1e-3
    eye3 = np.eye(3, dtype=complex)
    kraus = []
    for qubit, t1 in ((0, noise.t1_q1), (1, noise.t1_q2)):
        g1 = 1.0 - np.exp(-t_us / t1)
        g2 = 1.0 - np.exp(-2.0 * t_us / t1)  # doubled relaxation of level 2
        ks = _qutrit_damping_kraus(g1, g2)
        if qubit == 0:
            kraus.append([np.kron(k, eye3) for k in ks])
        else:
            kraus.append([np.kron(eye3, k) for k in ks])
    levels = np.arange(3)
    w = np.ones((9, 9))
    for qubit in (0, 1):
        tphi = noise.tphi(qubit)
        if np.isinf(tphi):
            continue
        diff = levels[:, None] - levels[None, :]
        wq = np.exp(-(diff**2) * t_us / tphi)
        if qubit == 0:
            w *= np.kron(wq, np.ones((3, 3)))
        else:
            w *= np.kron(np.ones((3, 3)), wq)
    return kraus, w


def _apply_slot(rho: np.ndarray, slot) -> np.ndarray:
    kraus, w = slot
    for ks in kraus:
        rho = sum(k @ rho @ k.conj().T for k in ks)
    return rho * w


def _haar_2x2(rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _embed_qubit_gate(u: np.ndarray) -> np.ndarray:
    m = np.eye(3, dtype=complex)
    m[:2, :2] = u
    return m


def ideal_cz_9() -> np.ndarray:
    m = np.eye(9, dtype=complex)
    m[4, 4] = -1.0
    return m


def embed_subspace_unitary(u) -> np.ndarray:
    """Embed a 6x6 subspace propagator into the two-qutrit space (identity elsewhere)."""
    m6 = u.matrix if isinstance(u, SubspaceUnitary) else np.asarray(u, dtype=complex)
    if m6.shape == (9, 9):
        return m6
    if m6.shape != (6, 6):
        raise ValueError("gate must be 6x6 (subspace) or 9x9")
    m9 = np.eye(9, dtype=complex)
    m9[np.ix_(_MAP_6_TO_9, _MAP_6_TO_9)] = m6
    return m9


def _depolarize_comp(rho: np.ndarray, lam: float) -> np.ndarray:
    """Depolarize within the computational subspace with channel weight lam."""
    scr = rho.copy()
    tr_comp = np.real(np.trace(rho[np.ix_(_COMP9, _COMP9)]))
    scr[np.ix_(_COMP9, _COMP9)] = 0.0
    # comp<->leak coherences are scrambled away
    scr[_COMP9, :] = 0.0
    scr[:, _COMP9] = 0.0
    keep = rho.copy()
    keep[_COMP9, :] = 0.0
    keep[:, _COMP9] = 0.0
    scrambled = keep.copy()
    scrambled[_COMP9, _COMP9] = tr_comp / 4.0
    return (1.0 - lam) * rho + lam * scrambled


def _estimators(p_ideal: np.ndarray, p_comp: np.ndarray):
    """(alpha, sqrt_purity, leakage) from ideal and raw computational probabilities."""
    d = p_ideal.size
    tot = float(np.sum(p_comp))
    leak = 1.0 - tot
    p_n = p_comp / tot if tot > 0 else np.full(d, 1.0 / d)
    var_i = float(np.var(p_ideal))
    denom = d * float(np.sum(p_ideal**2)) - 1.0
    alpha = (d * float(np.sum(p_n * p_ideal)) - 1.0) / denom if denom > 0 else 0.0
    sqrt_p = float(np.sqrt(np.var(p_n) / var_i)) if var_i > 0 else 0.0
    return alpha, sqrt_p, leak


def xeb_simulate(
    gate,
    noise: NoiseModel | None,
    depths,
    n_circuits: int = 30,
    seed: int = 0,
    shots: int | None = None,
    depolarizing: float = 0.0,
) -> DecayDataset:
    """Simulate the two-qubit benchmarking cycle and return decay estimates.

    `gate` is the two-qubit gate applied each cycle: None for the ideal CZ, a
    SubspaceUnitary / 6x6 matrix, or a full 9x9 unitary. The ideal reference
    circuit always uses the ideal CZ, so coherent gate error shows up in alpha
    but not in the purity. `depolarizing` injects a synthetic per-cycle Pauli
    error of the given rate into the computational subspace. Exact
    probabilities by default; `shots` switches to multinomial sampling.
    """
    depths = np.asarray(sorted(int(m) for m in depths))
    if depths.size < 2:
        raise ValueError("need at least 2 depths")
    if n_circuits < 1:
        raise ValueError("n_circuits must be >= 1")
    g9 = ideal_cz_9() if gate is None else embed_subspace_unitary(gate)
    cz4 = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
    slots = None
    if noise is not None:
        slots = (_slot_channel(noise, noise.t_single), _slot_channel(noise, noise.t_cz))
    lam = depolarizing * 16.0 / 15.0
    if not 0.0 <= lam <= 1.0:
        raise ValueError("depolarizing rate out of range")

    children = np.random.SeedSequence(seed).spawn(n_circuits)
    acc = np.zeros((3, depths.size))
    for child in children:
        rng = np.random.default_rng(child)
        rho = np.zeros((9, 9), dtype=complex)
        rho[0, 0] = 1.0
        psi = np.zeros(4, dtype=complex)
        psi[0] = 1.0
        rec = 0
        for m in range(1, depths[-1] + 1):
            u1 = _haar_2x2(rng)
            u2 = _haar_2x2(rng)
            u9 = np.kron(_embed_qubit_gate(u1), _embed_qubit_gate(u2))
            rho = u9 @ rho @ u9.conj().T
            psi = np.kron(u1, u2) @ psi
            if slots is not None:
                rho = _apply_slot(rho, slots[0])
            rho = g9 @ rho @ g9.conj().T
            psi = cz4 @ psi
            if slots is not None:
                rho = _apply_slot(rho, slots[1])
            if lam > 0.0:
                rho = _depolarize_comp(rho, lam)
            if m == depths[rec]:
                p_ideal = np.abs(psi) ** 2
                if shots is None:
                    p_comp = np.real(np.diag(rho))[_COMP9]
                else:
                    probs = np.clip(np.real(np.diag(rho)), 0.0, None)
                    probs /= probs.sum()
                    counts = rng.multinomial(shots, probs)
                    p_comp = counts[_COMP9] / shots
                acc[:, rec] += _estimators(p_ideal, p_comp)
                rec += 1
                if rec == depths.size:
                    break
    acc /= n_circuits
    return DecayDataset(
        depths=depths,
        alpha=acc[0],
        sqrt_purity=acc[1],
        leak_pop=acc[2],
        n_circuits=n_circuits,
        seed=seed,
    )


def single_qubit_xeb(
    t1_us: float,
    t2_us: float,
    t_slot_ns: float,
    depths,
    n_circuits: int = 30,
    seed: int = 0,
    shots: int | None = None,
) -> DecayDataset:
    """Single-qubit benchmarking cycle (one random rotation per cycle) on a qutrit."""
    depths = np.asarray(sorted(int(m) for m in depths))
    if depths.size < 2:
        raise ValueError("need at least 2 depths")
    noise = NoiseModel(t1_q1=t1_us, t1_q2=t1_us, t2_q1=t2_us, t2_q2=t2_us, t_single=t_slot_ns)
    t_us = t_slot_ns * 1e-3
    g1 = 1.0 - np.exp(-t_us / t1_us)
    g2 = 1.0 - np.exp(-2.0 * t_us / t1_us)
    kraus = _qutrit_damping_kraus(g1, g2)
    tphi = noise.tphi(0)
    diff = np.arange(3)[:, None] - np.arange(3)[None, :]
    w = np.ones((3, 3)) if np.isinf(tphi) else np.exp(-(diff**2) * t_us / tphi)

    children = np.random.SeedSequence(seed).spawn(n_circuits)
    acc = np.zeros((3, depths.size))
    for child in children:
        rng = np.random.default_rng(child)
        rho = np.zeros((3, 3), dtype=complex)
        rho[0, 0] = 1.0
        psi = np.zeros(2, dtype=complex)
        psi[0] = 1.0
        rec = 0
        for m in range(1, depths[-1] + 1):
            u = _haar_2x2(rng)
            u3 = _embed_qubit_gate(u)
            rho = u3 @ rho @ u3.conj().T
            rho = sum(k @ rho @ k.conj().T for k in kraus) * w
            psi = u @ psi
            if m == depths[rec]:
                p_ideal = np.abs(psi) ** 2
                if shots is None:
                    p_comp = np.real(np.diag(rho))[:2]
                else:
                    probs = np.clip(np.real(np.diag(rho)), 0.0, None)
                    probs /= probs.sum()
                    counts = rng.multinomial(shots, probs)
                    p_comp = counts[:2] / shots
                acc[:, rec] += _estimators(p_ideal, p_comp)
                rec += 1
                if rec == depths.size:
                    break
    acc /= n_circuits
    return DecayDataset(
        depths=depths,
        alpha=acc[0],
        sqrt_purity=acc[1],
        leak_pop=acc[2],
        n_circuits=n_circuits,
        seed=seed,
    )


# -- fits and the error-budget chain -------------------------------------------

def fit_decay(m, y, p0: float | None = None) -> FitResult:
    """Fit y = A p^m + B; raises FitError on degenerate input or failure."""
    m = np.asarray(m, dtype=float)
    y = np.asarray(y, dtype=float)
    if m.size < 3:
        raise FitError("need at least 3 points")
    if np.ptp(y) < 1e-14:
        raise FitError("constant data: decay base is unidentifiable")

    def model(mm, a, p, b):
        return a * p**mm + b

    b0 = float(y[-1])
    a0 = float(y[0] - b0)
    if abs(a0) < 1e-12:
        a0 = np.sign(a0 or 1.0) * 1e-3
    guess = (a0, p0 if p0 is not None else 0.97, b0)
    try:
        popt, _ = curve_fit(
            model,
            m,
            y,
            p0=guess,
            bounds=([-2.0, 1e-9, -1.0], [2.0, 1.0, 2.0]),
            maxfev=20000,
        )
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"decay fit failed: {exc}") from exc
    resid = float(np.sqrt(np.mean((model(m, *popt) - y) ** 2)))
    return FitResult(a=float(popt[0]), p=float(popt[1]), b=float(popt[2]), residual=resid)


def pauli_error(p: float, n_qubits: int) -> float:
    """Cycle Pauli error r = (1 - p) (4^N - 1) / 4^N."""
    if not 0.0 < p <= 1.0:
        raise ValueError("decay base p must lie in (0, 1]")
    if n_qubits not in (1, 2):
        raise ValueError("n_qubits must be 1 or 2")
    dim = 4.0**n_qubits
    return (1.0 - p) * (dim - 1.0) / dim


def leakage_error(fit: FitResult, n_qubits: int) -> float:
    """Leakage error rate r_leak = -A (1 - p_leak) (4^N - 1) / 4^N."""
    if n_qubits not in (1, 2):
        raise ValueError("n_qubits must be 1 or 2")
    dim = 4.0**n_qubits
    return -fit.a * (1.0 - fit.p) * (dim - 1.0) / dim


def extract_gate_error(cycle: float, q1: float, q2: float) -> float:
    """Two-qubit gate error from the cycle and single-qubit errors.

    (1 - r_cycle) = (1 - r_gate)(1 - r_q1)(1 - r_q2).
    """
    for name, r in (("cycle", cycle), ("q1", q1), ("q2", q2)):
        if not 0.0 <= r < 1.0:
            raise ValueError(f"rate {name} = {r} outside [0, 1)")
    return 1.0 - (1.0 - cycle) / ((1.0 - q1) * (1.0 - q2))


def gate_fidelity(r_p: float, n_qubits: int) -> float:
    """Gate fidelity F = 1 - r_p 2^N / (2^N + 1)."""
    if not 0.0 <= r_p < 1.0:
        raise ValueError("r_p must lie in [0, 1)")
    dim = 2.0**n_qubits
    return 1.0 - r_p * dim / (dim + 1.0)


@dataclass(frozen=True)
class ErrorBudget:
    """One error-budget row; subtraction identities hold by construction."""

    label: str
    n_qubits: int
    r_p_xeb: float
    r_p_spb: float
    r_leak: float
    r_p_dec: float
    r_p_ctrl: float
    fidelity: float
    p_xeb: float | None = None
    p_spb: float | None = None

    def __post_init__(self):
        for name in ("r_p_xeb", "r_p_spb", "r_leak", "r_p_dec", "r_p_ctrl"):
            if getattr(self, name) < -1e-6:
                raise ValueError(f"{name} = {getattr(self, name)} below fit-noise tolerance")


@dataclass(frozen=True)
class BudgetReport:
    rows: dict


def _budget_row(label, n, p_xeb, p_spb, r_leak) -> ErrorBudget:
    r_xeb = pauli_error(p_xeb, n)
    r_spb = pauli_error(p_spb, n)
    return ErrorBudget(
        label=label,
        n_qubits=n,
        p_xeb=p_xeb,
        p_spb=p_spb,
        r_p_xeb=r_xeb,
        r_p_spb=r_spb,
        r_leak=r_leak,
        r_p_dec=r_spb - r_leak,
        r_p_ctrl=r_xeb - r_spb,
        fidelity=gate_fidelity(max(r_xeb, 0.0), n),
    )


def build_budget(
    cycle_fits: tuple[FitResult, FitResult],
    single_fits=None,
    leak_fit: FitResult | None = None,
    n_qubits: int = 2,
    single_leak_fits=None,
) -> BudgetReport:
    """Assemble the benchmarking error budget.

    cycle_fits = (xeb_fit, spb_fit) of the two-qubit cycle; single_fits, when
    given, is ((q1_xeb, q1_spb), (q2_xeb, q2_spb)) and enables the extracted
    two-qubit-gate row. Rows: q1, q2, cycle, cz.
    """
    rows: dict[str, ErrorBudget] = {}
    leak_cycle = leakage_error(leak_fit, n_qubits) if leak_fit is not None else 0.0
    cyc = _budget_row("cycle", n_qubits, cycle_fits[0].p, cycle_fits[1].p, leak_cycle)

    if single_fits is not None:
        leak_singles = []
        for i, (fx, fs) in enumerate(single_fits):
            lf = None if single_leak_fits is None else single_leak_fits[i]
            r_leak = leakage_error(lf, 1) if lf is not None else 0.0
            leak_singles.append(r_leak)
            rows[f"q{i + 1}"] = _budget_row(f"q{i + 1}", 1, fx.p, fs.p, r_leak)
        rows["cycle"] = cyc
        q1, q2 = rows["q1"], rows["q2"]
        r_xeb = extract_gate_error(cyc.r_p_xeb, q1.r_p_xeb, q2.r_p_xeb)
        r_spb = extract_gate_error(cyc.r_p_spb, q1.r_p_spb, q2.r_p_spb)
        r_leak = 1.0 - (1.0 - cyc.r_leak) / ((1.0 - q1.r_leak) * (1.0 - q2.r_leak))
        rows["cz"] = ErrorBudget(
            label="cz",
            n_qubits=n_qubits,
            r_p_xeb=r_xeb,
            r_p_spb=r_spb,
            r_leak=r_leak,
            r_p_dec=r_spb - r_leak,
            r_p_ctrl=r_xeb - r_spb,
            fidelity=gate_fidelity(max(r_xeb, 0.0), n_qubits),
        )
    else:
        rows["cycle"] = cyc
        rows["cz"] = ErrorBudget(
            label="cz",
            n_qubits=n_qubits,
            r_p_xeb=cyc.r_p_xeb,
            r_p_spb=cyc.r_p_spb,
            r_leak=cyc.r_leak,
            r_p_dec=cyc.r_p_dec,
            r_p_ctrl=cyc.r_p_ctrl,
            fidelity=cyc.fidelity,
        )
    return BudgetReport(rows=rows)


def budget_table(report: BudgetReport) -> str:
    """Aligned text table of the budget rows."""
    headers = ("gate", "p_xeb", "r_p,xeb", "p_spb", "r_p,spb", "r_leak", "r_p,dec", "r_p,ctrl", "fidelity")

    def pct(x):
        return "" if x is None else f"{100.0 * x:.2f}%"

    lines = [headers]
    for row in report.rows.values():
        lines.append(
            (
                row.label,
                pct(row.p_xeb),
                pct(row.r_p_xeb),
                pct(row.p_spb),
                pct(row.r_p_spb),
                pct(row.r_leak),
                pct(row.r_p_dec),
                pct(row.r_p_ctrl),
                pct(row.fidelity),
            )
        )
    widths = [max(len(line[i]) for line in lines) for i in range(len(headers))]
    return "\n".join("  ".join(cell.rjust(w) for cell, w in zip(line, widths)) for line in lines)
