"""Command-line front end: prc, synth, tongue, rate.

Exit codes: 0 success, 1 usage or parse failure, 2 numerical failure,
3 infeasible request.  Every command writes a run manifest next to its
outputs; identical inputs reproduce identical artifacts.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import arnold, exports, ode, phase, simharness, synthesis
from .errors import InfeasibleEnergyError, SubentrainError
from .interaction import SubharmonicRatio, fixed_points, interaction

log = logging.getLogger("subentrain")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_INFEASIBLE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _parse_ratio(text: str) -> SubharmonicRatio:
    try:
        n, m = text.split(":")
        return SubharmonicRatio(int(n), int(m))
    except ValueError as exc:
        raise _UsageError(f"ratio must be coprime integers 'N:M': {exc}") from exc


def _parse_target(text: str, omega: float) -> float:
    """Absolute rad/ms, or a multiple of the natural frequency like '1.03x'."""
    if text.endswith("x"):
        return float(text[:-1]) * omega
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="subentrain",
                description="Optimal subharmonic entrainment waveform toolkit")
    p.add_argument("--output-dir", default=".", help="directory for artifacts")
    p.add_argument("--jobs", type=int, default=1, help="max concurrent sweep workers")
    p.add_argument("--seedless", action="store_true",
                   help="reserved; all computations are already deterministic")
    sub = p.add_subparsers(dest="command", required=True)

    prc = sub.add_parser("prc", help="reduce an ODE model to a phase model")
    prc.add_argument("config", help="model configuration JSON")
    prc.add_argument("--adjoint", action="store_true",
                     help="cross-check the projection PRC with the adjoint method")

    synth = sub.add_parser("synth", help="synthesize an optimal waveform")
    synth.add_argument("model", help="phase model JSON")
    synth.add_argument("--ratio", required=True, help="subharmonic ratio N:M")
    synth.add_argument("--target", required=True,
                       help="target frequency in rad/ms, or a multiple like 1.03x")
    synth.add_argument("--family", required=True,
                       choices=["min", "fast", "ensemble", "range"])
    synth.add_argument("--power", type=float, help="energy for fast/range families")
    synth.add_argument("--omega1", help="ensemble band lower frequency (rad/ms or Nx)")
    synth.add_argument("--omega2", help="ensemble band upper frequency (rad/ms or Nx)")

    tng = sub.add_parser("tongue", help="Arnold tongue boundaries")
    tng.add_argument("model", help="phase model JSON")
    tng.add_argument("waveform", help="waveform JSON")
    tng.add_argument("--mode", default="theory",
                     choices=["theory", "phase-sim", "state-sim", "all"])
    tng.add_argument("--points", type=int, default=arnold.DEFAULT_POINTS)
    tng.add_argument("--span", type=float, default=arnold.DEFAULT_SPAN,
                     help="half-width of the grid as a fraction of the tip frequency")
    tng.add_argument("--config", help="ODE model config JSON (needed for state-sim)")

    rate = sub.add_parser("rate", help="entrainment-rate experiment")
    rate.add_argument("model", help="phase model JSON")
    rate.add_argument("waveform", help="waveform JSON")
    rate.add_argument("--target", help="override the waveform's target frequency")
    rate.add_argument("--state-space", action="store_true",
                      help="estimate the rate from the full ODE model")
    rate.add_argument("--config", help="ODE model config JSON (needed for state-space)")
    rate.add_argument("--cycles", type=int, default=120)
    return p


def cmd_prc(args, outdir: Path) -> int:
    manifest = exports.RunManifest("prc", parameters={"adjoint": args.adjoint})
    manifest.add_input(args.config)
    config = exports.read_json(args.config)
    field, opts = ode.model_from_config(config)
    cycle = ode.find_limit_cycle(field, ode.HH_REST_STATE, dt=opts["dt"],
                                 resolution=opts["resolution"])
    model = phase.prc_projection(field, cycle)
    print(f"period T = {cycle.period:.6f} ms, omega = {model.omega:.6f} rad/ms")
    paths = {name: outdir / name for name in
             ("phase_model.json", "prc.csv", "limit_cycle.csv")}
    exports.save_phase_model(paths["phase_model.json"], model)
    exports.save_prc_csv(paths["prc.csv"], model)
    exports.save_limit_cycle_csv(paths["limit_cycle.csv"], cycle)
    manifest.parameters["period"] = cycle.period
    if args.adjoint:
        adj = phase.prc_adjoint(field, cycle)
        grid = np.linspace(0.0, 2.0 * np.pi, 2048, endpoint=False)
        dev = float(np.max(np.abs(model.Z.eval(grid) - adj.Z.eval(grid))))
        zmax = float(np.max(np.abs(model.Z.eval(grid))))
        print(f"adjoint cross-check: max deviation {dev:.3e} ({dev / zmax:.3e} of max|Z|)")
        manifest.parameters["adjoint_max_deviation"] = dev
    for path in paths.values():
        manifest.add_output(path)
    manifest.write(outdir / "prc_manifest.json")
    return EXIT_OK


def cmd_synth(args, outdir: Path) -> int:
    manifest = exports.RunManifest("synth")
    manifest.add_input(args.model)
    model = exports.load_phase_model(args.model)
    ratio = _parse_ratio(args.ratio)
    omega_target = _parse_target(args.target, model.omega)
    family = args.family
    manifest.parameters = {"ratio": str(ratio), "target": omega_target, "family": family}

    if family == "min":
        wf = synthesis.min_energy_single(model, ratio, omega_target)
        extra = {}
    elif family == "fast":
        if args.power is None:
            raise _UsageError("--family fast requires --power")
        result = synthesis.fast_waveform(model, ratio, omega_target, args.power)
        wf, extra = result.waveform, {"predicted_rate": result.predicted_rate}
    elif family == "ensemble":
        if args.omega1 is None or args.omega2 is None:
            raise _UsageError("--family ensemble requires --omega1 and --omega2")
        spec = synthesis.EnsembleSpec(_parse_target(args.omega1, model.omega),
                                      _parse_target(args.omega2, model.omega),
                                      omega_target)
        sol = synthesis.ensemble_waveform(model, ratio, spec)
        wf = sol.waveform
        extra = {"case": sol.case, "mu_plus": sol.mu_plus, "mu_minus": sol.mu_minus,
                 "predicted_range": [sol.omega_minus, sol.omega_plus]}
    else:
        if args.power is None:
            raise _UsageError("--family range requires --power")
        result = synthesis.max_range_waveform(model, ratio, args.power, omega_target)
        wf, extra = result.waveform, {"predicted_width": result.predicted_width}

    lam = interaction(model.Z, wf.series, ratio)
    stable, unstable = fixed_points(lam, model.omega - omega_target)
    paths = {name: outdir / name for name in
             ("waveform.json", "waveform.csv", "interaction.csv",
              "interaction_meta.json", "locking.json")}
    exports.save_waveform(paths["waveform.json"], wf)
    exports.save_waveform_csv(paths["waveform.csv"], wf)
    exports.save_interaction(paths["interaction.csv"], paths["interaction_meta.json"], lam)
    exports.write_json(paths["locking.json"], {
        "delta_omega": model.omega - omega_target,
        "energy": wf.energy,
        "rms": wf.rms,
        "stable_phases": stable,
        "unstable_phases": unstable,
        **extra,
    })
    print(f"{family} waveform {ratio}: energy {wf.energy:.6g}, rms {wf.rms:.6g}")
    for path in paths.values():
        manifest.add_output(path)
    manifest.write(outdir / "synth_manifest.json")
    return EXIT_OK


def _theory_minimum(model, ratio, vtilde_series, grid):
    tongue = arnold.single_tongue(model, ratio, vtilde_series, grid)
    return tongue, tongue.p_min()


def cmd_tongue(args, outdir: Path) -> int:
    manifest = exports.RunManifest("tongue", parameters={
        "mode": args.mode, "points": args.points, "span": args.span})
    manifest.add_input(args.model)
    manifest.add_input(args.waveform)
    model = exports.load_phase_model(args.model)
    wf = exports.load_waveform(args.waveform)
    if args.points < 1:
        raise _UsageError("grid must contain at least one point")
    ratio = wf.ratio
    vtilde = wf.unit_energy()
    digest = exports.sha256_obj(wf.to_dict())
    grid = arnold.default_forcing_grid(model, ratio, args.span, args.points)
    tongue, p_theory = _theory_minimum(model, ratio, vtilde.series, grid)
    tongue = arnold.TongueBoundary(axis=tongue.axis, abscissas=tongue.abscissas,
                                   p_left=tongue.p_left, p_right=tongue.p_right,
                                   case=tongue.case, ratio=ratio, label="theory",
                                   waveform_digest=digest)
    outputs = []

    if args.mode in ("theory", "all"):
        exports.save_tongue(outdir / "tongue_theory.csv", outdir / "tongue_theory_meta.json", tongue)
        outputs += [outdir / "tongue_theory.csv", outdir / "tongue_theory_meta.json"]

    p_phase = p_state = None
    if args.mode in ("phase-sim", "all"):
        p_phase = _simulated_boundary(model, vtilde, grid, p_theory,
                                      manifest, args.jobs, kind="phase")
    if args.mode in ("state-sim", "all"):
        if not args.config:
            raise _UsageError("state-sim needs --config with the ODE model")
        manifest.add_input(args.config)
        p_state = _simulated_boundary(model, vtilde, grid, p_theory, manifest,
                                      args.jobs, kind="state", config=args.config)
    if args.mode != "theory":
        exports.save_sweep_csv(outdir / "tongue_sweep.csv", grid, p_theory, p_phase, p_state)
        outputs.append(outdir / "tongue_sweep.csv")

    for path in outputs:
        manifest.add_output(path)
    manifest.write(outdir / "tongue_manifest.json")
    return EXIT_OK


def _simulated_boundary(model, vtilde, grid, p_theory, manifest, jobs, kind, config=None):
    from .simharness import TongueJob, phase_lock_test, state_lock_test, tongue_sweep

    ratio = vtilde.ratio
    if kind == "state":
        cfg = exports.read_json(config)
        field, opts = ode.model_from_config(cfg)
        cycle = ode.find_limit_cycle(field, ode.HH_REST_STATE, dt=opts["dt"],
                                     resolution=opts["resolution"])
    job_list = []
    for x, p_est in zip(grid, p_theory):
        if not np.isfinite(p_est) or p_est <= 0.0:
            manifest.warnings.append(f"no theoretical boundary at abscissa {x:.6g}; skipped")
            continue
        omega_target = ratio.M / ratio.N * x
        shape = synthesis.Waveform(vtilde.series, x, ratio, omega_target, vtilde.family)
        if kind == "phase":
            test = phase_lock_test(model, shape)
        else:
            test = state_lock_test(field, cycle, shape)
        job_list.append(TongueJob(abscissa=float(x), p_estimate=float(p_est), lock_test=test))
    swept = tongue_sweep(job_list, ratio, label=f"{kind}-sim", max_workers=jobs)
    by_x = dict(zip(swept.abscissas.tolist(), swept.p_left.tolist()))
    out = np.array([by_x.get(float(x), np.nan) for x in grid])
    n_failed = int(np.sum(~np.isfinite(swept.p_left)))
    if n_failed:
        manifest.warnings.append(f"{kind}-sim: {n_failed} boundary points failed")
    return out


def cmd_rate(args, outdir: Path) -> int:
    manifest = exports.RunManifest("rate", parameters={"state_space": args.state_space})
    manifest.add_input(args.model)
    manifest.add_input(args.waveform)
    model = exports.load_phase_model(args.model)
    wf = exports.load_waveform(args.waveform)
    omega_target = (_parse_target(args.target, model.omega)
                    if args.target else wf.omega_target)
    if omega_target != wf.omega_target:
        wf = synthesis.Waveform(wf.series, wf.ratio.forcing_frequency(omega_target),
                                wf.ratio, omega_target, wf.family)
    lam = interaction(model.Z, wf.series, wf.ratio)
    dw = model.omega - omega_target
    stable, _ = fixed_points(lam, dw)
    if not stable:
        print("waveform does not lock at this detuning", file=sys.stderr)
        return EXIT_INFEASIBLE
    phi_star = stable[0]
    theory = float(lam.series.derivative().eval(phi_star))

    if args.state_space:
        if not args.config:
            raise _UsageError("--state-space needs --config with the ODE model")
        manifest.add_input(args.config)
        cfg = exports.read_json(args.config)
        field, opts = ode.model_from_config(cfg)
        cycle = ode.find_limit_cycle(field, ode.HH_REST_STATE, dt=opts["dt"],
                                     resolution=opts["resolution"])
        start = cycle.state_at_phase(phi_star - 0.4)
        peaks = simharness.forced_peak_times(field, cycle, wf, args.cycles, x0=start)
        estimate = simharness.rate_state(peaks, omega_target)
    else:
        psi = simharness.integrate_phase(model, wf, phi_star - 0.4, args.cycles)
        estimate = simharness.rate_phase(psi, omega_target, phi_star=phi_star)

    exports.save_rate(outdir / "rate.json", estimate, theory)
    manifest.add_output(outdir / "rate.json")
    manifest.write(outdir / "rate_manifest.json")
    print(f"kappa = {estimate.kappa:.6g} ({estimate.source}), theory {theory:.6g}")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ENTRAIN_LOG", "WARNING").upper(),
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    handlers = {"prc": cmd_prc, "synth": cmd_synth, "tongue": cmd_tongue, "rate": cmd_rate}
    try:
        return handlers[args.command](args, outdir)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleEnergyError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SubentrainError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
