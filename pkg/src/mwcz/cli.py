"""Command-line front end: config-driven experiments emitting CSV/JSON files.

Subcommands: gcurve, pulse, scan, optimize, sweep-delta, xeb, budget. All
numerical knobs live in the JSON config; flags only override paths and the
seed. Outputs are deterministic for a fixed config + seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import benchmark as bm
from . import io as mio
from .device import DeviceModel, load_device
from .dynamics import evolve, interaction_frame
from .metrics import extract_metrics, phase_scan, swap_scan
from .optimize import OptimizerConfig, delta_sweep, optimize_cz, seed_pulse
from .pulses import PulseParams, coupling_series, flux_pulse, spectrum

__all__ = ["main"]


def _load_config(path: str) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    cfg["_dir"] = os.path.dirname(os.path.abspath(path))
    return cfg


def _device(cfg: dict) -> DeviceModel:
    dev = cfg.get("device")
    if dev is None:
        raise ValueError("config needs a 'device' entry (path or inline block)")
    if isinstance(dev, str):
        if not os.path.isabs(dev):
            dev = os.path.join(cfg["_dir"], dev)
        return load_device(dev)
    return load_device(dev)


def _grid(spec, default=None):
    if spec is None:
        return np.asarray(default, dtype=float)
    if isinstance(spec, dict):
        return np.linspace(float(spec["min"]), float(spec["max"]), int(spec["points"]))
    return np.asarray(spec, dtype=float)


def _pulse(cfg: dict, model: DeviceModel, **overrides) -> PulseParams:
    block = dict(cfg.get("pulse") or {})
    block.update(overrides)
    if not block:
        return seed_pulse(model)
    defaults = seed_pulse(
        model,
        t_active=float(block.pop("t_active", 100.0)),
        t_pad=float(block.pop("t_pad", 3.0)),
    )
    return defaults.with_(**block)


def _out(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def cmd_gcurve(args, cfg):
    model = _device(cfg)
    gc = cfg.get("gcurve") or {}
    phi = np.linspace(float(gc.get("phi_min", -0.5)), float(gc.get("phi_max", 0.5)), int(gc.get("points", 501)))
    g = model.g(phi, check=False)
    mio.write_curve_csv(_out(args, "gcurve.csv"), phi, g)


def cmd_pulse(args, cfg):
    model = _device(cfg)
    pulse = _pulse(cfg, model)
    flux = flux_pulse(pulse)
    coup = coupling_series(model, flux)
    freqs, mags = spectrum(coup)
    mio.write_series_csv(_out(args, "flux.csv"), flux, "flux_phi0")
    mio.write_series_csv(_out(args, "coupling.csv"), coup, "g_MHz")
    mio.write_spectrum_csv(_out(args, "spectrum.csv"), freqs, mags)


def cmd_scan(args, cfg):
    model = _device(cfg)
    sc = cfg.get("scan") or {}
    kind = args.kind or sc.get("kind", "swap")
    base = _pulse(cfg, model, t_active=float(sc.get("t_active", 250.0)))
    amps = _grid(sc.get("amplitudes"), default=np.linspace(0.0, 2.0 * base.amplitude_scale, 11))
    dets = _grid(sc.get("detunings_mhz"), default=np.linspace(-10.0, 10.0, 11))
    fn = swap_scan if kind == "swap" else phase_scan
    scan = fn(model, base, amps, dets)
    mio.write_scan_csv(_out(args, f"scan_{kind}.csv"), scan)


def cmd_optimize(args, cfg):
    model = _device(cfg)
    oc = dict(cfg.get("optimizer") or {})
    t_active = float(oc.pop("t_active", 100.0))
    config = OptimizerConfig(
        free_params=tuple(oc.get("free_params", OptimizerConfig().free_params)),
        max_iters=int(oc.get("max_iters", 200)),
        tolerance=float(oc.get("tolerance", 1e-6)),
        sigma=float(oc.get("sigma", 0.0)),
        seed=int(args.seed if args.seed is not None else cfg.get("seed", 0)),
    )
    pulse, metrics, trace = optimize_cz(model, t_active=t_active, config=config)
    mio.write_trace_csv(_out(args, "trace.csv"), trace)
    mio.write_json(_out(args, "metrics.json"), mio.metrics_to_dict(metrics))
    mio.write_json(
        _out(args, "pulse.json"),
        {
            "pulse": {
                "lambda1": pulse.lambda1,
                "lambda2": pulse.lambda2,
                "lambda3": pulse.lambda3,
                "lambda4": pulse.lambda4,
                "amplitude_scale": pulse.amplitude_scale,
                "f_carrier": pulse.f_carrier,
                "phase": pulse.phase,
                "t_active": pulse.t_active,
                "t_pad": pulse.t_pad,
                "sample_dt": pulse.sample_dt,
            }
        },
    )
    u = interaction_frame(evolve(model, pulse), model)
    mio.write_json(_out(args, "unitary.json"), mio.unitary_to_dict(u))


def cmd_sweep_delta(args, cfg):
    model = _device(cfg)
    sw = cfg.get("sweep") or {}
    deltas = _grid(sw.get("deltas_mhz"), default=np.linspace(50.0, 200.0, 16))
    sweep = delta_sweep(
        model,
        deltas,
        t_active=float(sw.get("t_active", 100.0)),
        iters=int(sw.get("iters", 200)),
    )
    mio.write_sweep_csv(_out(args, "sweep_delta.csv"), sweep)


def _noise(cfg) -> bm.NoiseModel | None:
    block = cfg.get("noise")
    return bm.NoiseModel(**block) if block else None


def _run_xeb(args, cfg):
    xc = cfg.get("xeb") or {}
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    depths = [int(m) for m in xc.get("depths", (1, 2, 4, 8, 16, 32, 64))]
    return bm.xeb_simulate(
        gate=None,
        noise=_noise(cfg),
        depths=depths,
        n_circuits=int(xc.get("n_circuits", 30)),
        seed=seed,
        shots=xc.get("shots"),
        depolarizing=float(xc.get("depolarizing", 0.0)),
    ), xc, seed


def cmd_xeb(args, cfg):
    data, _, _ = _run_xeb(args, cfg)
    mio.write_decay_csv(_out(args, "xeb_decay.csv"), data)


def cmd_budget(args, cfg):
    data, xc, seed = _run_xeb(args, cfg)
    noise = _noise(cfg)
    fits = {
        "xeb": bm.fit_decay(data.depths, data.alpha),
        "spb": bm.fit_decay(data.depths, data.sqrt_purity),
    }
    leak_fit = None
    if np.ptp(data.leak_pop) > 1e-12:
        leak_fit = bm.fit_decay(data.depths, data.leak_pop)
    singles = None
    if noise is not None:
        depths = data.depths
        nc = int(xc.get("n_circuits", 30))
        singles = []
        for t1, t2 in ((noise.t1_q1, noise.t2_q1), (noise.t1_q2, noise.t2_q2)):
            sq = bm.single_qubit_xeb(t1, t2, noise.t_single, depths, n_circuits=nc, seed=seed + 1)
            singles.append((bm.fit_decay(sq.depths, sq.alpha), bm.fit_decay(sq.depths, sq.sqrt_purity)))
    report = bm.build_budget((fits["xeb"], fits["spb"]), singles, leak_fit)
    mio.write_decay_csv(_out(args, "xeb_decay.csv"), data)
    mio.write_json(_out(args, "budget.json"), mio.budget_to_dict(report))
    with mio.atomic_write(_out(args, "budget.txt")) as fh:
        fh.write(bm.budget_table(report) + "\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mwcz", description=__doc__)
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gcurve")
    sub.add_parser("pulse")
    p_scan = sub.add_parser("scan")
    p_scan.add_argument("--kind", choices=("swap", "phase"), default=None)
    sub.add_parser("optimize")
    sub.add_parser("sweep-delta")
    sub.add_parser("xeb")
    sub.add_parser("budget")

    args = parser.parse_args(argv)
    handlers = {
        "gcurve": cmd_gcurve,
        "pulse": cmd_pulse,
        "scan": cmd_scan,
        "optimize": cmd_optimize,
        "sweep-delta": cmd_sweep_delta,
        "xeb": cmd_xeb,
        "budget": cmd_budget,
    }
    try:
        cfg = _load_config(args.config)
        handlers[args.command](args, cfg)
    except Exception as exc:
        print(f"mwcz {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
