"""Experiment driver: reproduces the theorem-level claims as desk-scale
numerical experiments and emits CSV/JSON artifacts.

Configuration is a flat JSON object; common keys can also be given as
flags.  Exit codes: 0 success, 2 constraint violation, 3 ill-conditioned
operator, 4 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import gram, hum, modal, spectral, stabilize
from .errors import ConstraintViolation, GGKdVError, IllConditioned

COMMANDS = ("spectrum", "gaps", "resonance", "observe", "ingham",
            "control", "stabilize", "duality")


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            cell if isinstance(cell, str) else _fmt(cell) for cell in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


class ConfigError(Exception):
    pass


def _params_from(cfg: dict) -> spectral.PhysicalParams:
    preset = cfg.get("preset")
    if preset is not None:
        if preset not in spectral.PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        return spectral.PRESETS[preset]
    try:
        return spectral.PhysicalParams(
            float(cfg.get("a", 1.0)), float(cfg.get("c", 1.0)),
            float(cfg.get("d", 1.0)), float(cfg.get("r", 1.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _state_from(spec_val, N: int, rng: np.random.Generator) -> modal.ModalState:
    if spec_val in (None, "zero"):
        return modal.ModalState.zeros(N)
    if spec_val == "random":
        return modal.ModalState.random(N, rng)
    if isinstance(spec_val, list):
        flat = np.array([complex(re, im) for re, im in spec_val])
        if len(flat) != 2 * (2 * N + 1):
            raise ConfigError("state coefficient list has wrong length")
        return modal.ModalState(N, flat.reshape(2, 2 * N + 1))
    raise ConfigError(f"cannot interpret state spec {spec_val!r}")


def _signal_terms(sig) -> list[dict]:
    if not sig:
        return []
    return [{"amp_re": float(np.real(a)), "amp_im": float(np.imag(a)),
             "freq": float(f), "degree": int(d)} for a, f, d in sig.terms]


def cmd_spectrum(cfg, out: Path, quiet: bool) -> int:
    params = _params_from(cfg)
    N = int(cfg.get("N", 8))
    table = spectral.spectrum_table(params, N)
    rows = []
    for b in (spectral.Branch.PLUS, spectral.Branch.MINUS):
        for k in table.ks:
            col = k + N
            z = table.z[b, col]
            rows.append((str(int(k)), str(b), table.omega[b, col],
                         z[0], 0.0, z[1], 0.0))
    _write_csv(out / "spectrum.csv",
               ["k", "branch", "omega", "z1_re", "z1_im", "z2_re", "z2_im"],
               rows)
    return 0


def cmd_gaps(cfg, out: Path, quiet: bool) -> int:
    params = _params_from(cfg)
    N = int(cfg.get("N", 200))
    report = spectral.gap_report(params, N)
    rows = []
    ks = np.arange(-N, N)
    for k, gp in zip(ks, report.plus_gaps):
        rows.append((str(int(k)), "+", gp))
    for k, gm in zip(ks, report.minus_gaps):
        rows.append((str(int(k)), "-", gm))
    _write_csv(out / "gaps.csv", ["k", "branch", "gap"], rows)
    _write_json(out / "gaps_summary.json", {
        "N": N,
        "A_const": report.A_const,
        "B_or_slope": report.B_or_slope,
        "gamma_inf_estimate": report.gamma_inf_estimate,
        "D_plus_estimate": report.D_plus_estimate,
        "T0": report.T0,
    })
    return 0


def cmd_resonance(cfg, out: Path, quiet: bool) -> int:
    params = _params_from(cfg)
    N = int(cfg.get("N", 12))
    tol = float(cfg.get("tol", 1e-9))
    report = spectral.resonance_check(params, N, tol)
    rows = [(str(k1), str(b1), str(k2), str(b2))
            for (k1, b1), (k2, b2) in report.violations]
    _write_csv(out / "resonance.csv",
               ["k1", "branch1", "k2", "branch2"], rows)
    if not quiet:
        print(f"resonance pairs within {tol}: {len(rows)}; "
              f"k0_degenerate={report.k0_degenerate}")
    return 0


def cmd_observe(cfg, out: Path, quiet: bool) -> int:
    params = _params_from(cfg)
    ns = cfg.get("ns") or [int(cfg.get("N", 8))]
    mode = {"both": "both", "u": "u_only", "v": "v_only"}.get(
        cfg.get("mode", "both"), cfg.get("mode", "both"))
    lengths = cfg.get("window_lengths") or [float(cfg.get("window_length", 1.0))]
    x0 = float(cfg.get("x0", 0.0))
    rows = []
    for N in ns:
        for length in lengths:
            window = gram.ObservationWindow(0.0, float(length))
            rep = gram.observability_constants(params, int(N), x0, window, mode)
            rows.append((str(int(N)), length, mode, rep.alpha, rep.beta,
                         str(rep.kernel_dim)))
    _write_csv(out / "observability.csv",
               ["N", "window_length", "mode", "alpha", "beta", "kernel_dim"],
               rows)
    return 0


def cmd_ingham(cfg, out: Path, quiet: bool) -> int:
    if "frequencies" in cfg:
        freqs = [float(f) for f in cfg["frequencies"]]
    else:
        lo, hi = int(cfg.get("freq_min", -5)), int(cfg.get("freq_max", 5))
        freqs = list(range(lo, hi + 1))
    window = gram.ObservationWindow(float(cfg.get("t0", 0.0)),
                                    float(cfg.get("t1", 2 * np.pi)))
    direct, inverse = gram.ingham_report(freqs, window)
    _write_csv(out / "ingham.csv",
               ["family_size", "window_length", "direct_const", "inverse_const"],
               [(str(len(freqs)), window.length, direct, inverse)])
    return 0


def cmd_control(cfg, out: Path, quiet: bool) -> int:
    params = _params_from(cfg)
    N = int(cfg.get("N", 6))
    x0 = float(cfg.get("x0", 0.0))
    T = float(cfg.get("T", 1.0))
    mode = {"both": "both", "f": "f_only", "g": "g_only"}.get(
        cfg.get("mode", "both"), cfg.get("mode", "both"))
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    initial = _state_from(cfg.get("initial", "random"), N, rng)
    target = _state_from(cfg.get("target", "zero"), N, rng)
    plan = hum.solve_control(params, N, x0, T, initial, target, mode)
    error = hum.verify_roundtrip(params, N, plan, initial, target)
    _write_json(out / "plan.json", {
        "mode": mode, "N": N, "x0": x0, "T": T,
        "f": _signal_terms(plan.f), "g": _signal_terms(plan.g),
        "cost": hum.control_cost(plan),
    })
    _write_csv(out / "verify.csv",
               ["N", "T", "mode", "relative_error"],
               [(str(N), T, mode, error)])
    if not quiet:
        print(f"round-trip relative error {error:.3e}")
    return 0


def cmd_stabilize(cfg, out: Path, quiet: bool) -> int:
    params = _params_from(cfg)
    N = int(cfg.get("N", 6))
    x0 = float(cfg.get("x0", 0.0))
    omega_target = float(cfg.get("omega_target", 0.5))
    Th = float(cfg.get("Th", 2.0))
    T_sim = float(cfg.get("T_sim", 20.0))
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    state0 = _state_from(cfg.get("initial", "random"), N, rng)
    gains = stabilize.feedback_gains(params, N, x0, omega_target, Th)
    report = stabilize.closed_loop_simulate(params, N, gains, state0, T_sim)
    _write_csv(out / "decay.csv", ["t", "energy", "log_energy"],
               [(t, e, np.log(max(e, 1e-300)))
                for t, e in zip(report.times, report.energies)])
    _write_json(out / "stabilize_summary.json", {
        "omega_target": omega_target,
        "fitted_rate": report.fitted_decay_rate,
        "fitted_M": report.fitted_M,
        "abscissa": report.abscissa,
    })
    return 0


def cmd_duality(cfg, out: Path, quiet: bool) -> int:
    params = _params_from(cfg)
    N = int(cfg.get("N", 6))
    x0 = float(cfg.get("x0", 0.0))
    T = float(cfg.get("T", 1.0))
    draws = int(cfg.get("draws", 5))
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    from .signals import ExponentialSignal
    rows = []
    for i in range(draws):
        initial = modal.ModalState.random(N, rng)
        seed_state = modal.ModalState.random(N, rng)
        f = ExponentialSignal.from_terms(
            [(rng.standard_normal() + 1j * rng.standard_normal(),
              rng.uniform(-5, 5), 0) for _ in range(3)])
        g = ExponentialSignal.from_terms(
            [(rng.standard_normal() + 1j * rng.standard_normal(),
              rng.uniform(-5, 5), 0) for _ in range(3)])
        res = hum.duality_residual(params, N, f, g, x0, initial, seed_state, T)
        rows.append((str(i), res))
    _write_csv(out / "duality.csv", ["draw", "residual"], rows)
    return 0


_DISPATCH = {
    "spectrum": cmd_spectrum,
    "gaps": cmd_gaps,
    "resonance": cmd_resonance,
    "observe": cmd_observe,
    "ingham": cmd_ingham,
    "control": cmd_control,
    "stabilize": cmd_stabilize,
    "duality": cmd_duality,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ggkdv", description="coupled-KdV pointwise control experiments")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="flat JSON config file")
    parser.add_argument("--out", type=Path, default=Path("."),
                        help="output directory")
    parser.add_argument("--preset", choices=sorted(spectral.PRESETS))
    parser.add_argument("--seed", type=int)
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = {}
        if args.config is not None:
            try:
                cfg = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
            if not isinstance(cfg, dict):
                raise ConfigError("config must be a JSON object")
        if args.preset is not None:
            cfg["preset"] = args.preset
        if args.seed is not None:
            cfg["seed"] = args.seed
        out = args.out
        out.mkdir(parents=True, exist_ok=True)

        params = _params_from(cfg)
        if params.resonant:
            print(f"warning: resonant parameters (a*d=1); critical time "
                  f"T0={spectral.critical_time(params):.6g}", file=sys.stderr)

        return _DISPATCH[args.command](cfg, out, args.quiet)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except ConstraintViolation as exc:
        print(f"constraint violation: {exc}", file=sys.stderr)
        return 2
    except IllConditioned as exc:
        print(f"ill-conditioned: {exc}", file=sys.stderr)
        return 3
    except GGKdVError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
