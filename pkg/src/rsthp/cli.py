"""Command line front end.

Subcommands:
  sweep-snr              ergodic sum rate vs SNR (perfect CSIT or a fixed
                         error variance)
  sweep-error-variance   ergodic sum rate vs error variance at fixed SNR
  sweep-alpha            ergodic sum rate vs SNR with SNR-scaled error
                         variance
  validate-chain         self-checks of the modulo chain algebra
  cross-check-sinr       closed-form SINRs vs the signal-model estimator

Sweeps write the main table (CSV or structured text) to --out plus a
sidecar <out>.config.json echoing the resolved configuration. Outputs
depend only on the configuration, so a rerun with the same arguments is
byte-identical. Exit codes: 0 success, 1 a validation check failed,
2 bad arguments or configuration.
"""

import argparse
import json
import os
import sys

import numpy as np

from .channel import CHANNEL_STREAM, ErrorRegime, complex_gaussian, draw_error_ensemble, stream_rng
from .exceptions import SimulatorError
from .precoding import ALL_SCHEME_TAGS, SchemeTag, build_precoders, parse_scheme_tag
from .rates import CROSS_CHECK_TOL, cross_check_sinr
from .sweeps import SweepConfig, SweepResult, run_sweep, snr_db_to_power
from .thp_chain import (
    measure_power_loss,
    modulo_reduce,
    qam_constellation,
    random_feedback_matrix,
    run_perfect_csit_chain,
    thp_encode,
)

CSV_HEADER = "scheme,x_value,x_kind,esr_bps_hz,ci_halfwidth,chosen_split_mean,seed"

_ALL_SCHEME_TEXT = ",".join(s.tag for s in ALL_SCHEME_TAGS)


def default_seed() -> int:
    """Default master seed; the RSTHP_SEED environment variable overrides."""
    return int(os.environ.get("RSTHP_SEED", "12345"))


def parse_grid(text: str) -> tuple[float, ...]:
    """Parse "start:step:stop" (stop inclusive) or a comma list of values."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid range must be start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0.0:
            raise ValueError(f"grid step must be positive, got {step}")
        values = []
        k = 0
        while True:
            v = start + k * step
            if v > stop + 1e-9 * max(1.0, step):
                break
            values.append(v)
            k += 1
        return tuple(values)
    return tuple(float(p) for p in text.split(","))


def parse_schemes(text: str) -> tuple[SchemeTag, ...]:
    return tuple(parse_scheme_tag(p) for p in text.split(","))


def _fmt(value: float) -> str:
    # repr keeps full float precision and is stable across runs.
    return repr(float(value))


def format_csv(result: SweepResult) -> str:
    lines = [CSV_HEADER]
    for cell in result.cells:
        lines.append(
            ",".join(
                (
                    cell.scheme_tag,
                    _fmt(cell.x_value),
                    cell.x_kind,
                    _fmt(cell.esr),
                    _fmt(cell.ci_halfwidth),
                    _fmt(cell.chosen_split_mean),
                    str(result.config.master_seed),
                )
            )
        )
    return "\n".join(lines) + "\n"


def format_structured(result: SweepResult) -> str:
    rows = [
        {
            "scheme": cell.scheme_tag,
            "x_value": cell.x_value,
            "x_kind": cell.x_kind,
            "esr_bps_hz": cell.esr,
            "ci_halfwidth": cell.ci_halfwidth,
            "chosen_split_mean": cell.chosen_split_mean,
            "seed": result.config.master_seed,
        }
        for cell in result.cells
    ]
    return json.dumps({"x_kind": result.x_kind, "rows": rows}, indent=2, sort_keys=True) + "\n"


def config_as_dict(config: SweepConfig) -> dict:
    return {
        "n_users": config.n_users,
        "n_tx": config.n_tx,
        "schemes": [s.tag for s in config.schemes],
        "error_regime": {
            "kind": config.error_regime.kind,
            "sigma_e2": config.error_regime.sigma_e2,
            "alpha": config.error_regime.alpha,
        },
        "snr_grid_db": list(config.snr_grid_db),
        "error_variance_grid": list(config.error_variance_grid),
        "n_channels": config.n_channels,
        "n_error_samples": config.n_error_samples,
        "power_loss": config.power_loss,
        "power_split_grid": list(config.power_split_grid),
        "master_seed": config.master_seed,
        "sigma_n2": config.sigma_n2,
        "x_kind": config.x_kind,
    }


def write_sweep_outputs(result: SweepResult, out_path: str, out_format: str) -> str:
    text = format_csv(result) if out_format == "csv" else format_structured(result)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    sidecar = out_path + ".config.json"
    with open(sidecar, "w", encoding="utf-8", newline="") as fh:
        json.dump(config_as_dict(result.config), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar


def _common_sweep_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--users", type=int, default=4, help="number of single-antenna users")
    parser.add_argument("--tx-antennas", type=int, default=4, help="transmit antennas")
    parser.add_argument(
        "--schemes",
        type=str,
        default=_ALL_SCHEME_TEXT,
        help=f"comma list of schemes (default: {_ALL_SCHEME_TEXT})",
    )
    parser.add_argument("--channels", type=int, default=50, help="channel draws to average over")
    parser.add_argument(
        "--error-samples", type=int, default=100, help="CSIT error draws per channel"
    )
    parser.add_argument(
        "--lambda",
        dest="power_loss",
        type=float,
        default=0.75,
        help="modulo power loss factor for THP schemes",
    )
    parser.add_argument(
        "--split-grid",
        type=str,
        default="0:0.05:0.95",
        help="power-split search grid (start:step:stop or comma list)",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=default_seed(),
        help="master seed (env RSTHP_SEED overrides the default)",
    )
    parser.add_argument("--out", type=str, required=True, help="output table path")
    parser.add_argument("--format", choices=("csv", "text"), default="csv")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")


def _config_from_args(args, regime: ErrorRegime, snr_grid, variance_grid=()) -> SweepConfig:
    return SweepConfig(
        n_users=args.users,
        n_tx=args.tx_antennas,
        schemes=parse_schemes(args.schemes),
        error_regime=regime,
        snr_grid_db=tuple(snr_grid),
        error_variance_grid=tuple(variance_grid),
        n_channels=args.channels,
        n_error_samples=args.error_samples,
        power_loss=args.power_loss,
        power_split_grid=parse_grid(args.split_grid),
        master_seed=args.seed,
    )


def _finish_sweep(args, config: SweepConfig) -> int:
    result = run_sweep(config, n_jobs=args.jobs)
    sidecar = write_sweep_outputs(result, args.out, args.format)
    for cell in result.cells:
        print(
            f"{cell.scheme_tag:12s} {cell.x_kind}={cell.x_value:g} "
            f"esr={cell.esr:.4f} +-{cell.ci_halfwidth:.4f} "
            f"split={cell.chosen_split_mean:.3f}"
        )
    print(f"wrote {args.out} and {sidecar}")
    return 0


def cmd_sweep_snr(args) -> int:
    if args.error_variance > 0.0:
        regime = ErrorRegime.fixed_variance(args.error_variance)
    else:
        regime = ErrorRegime.perfect()
    config = _config_from_args(args, regime, parse_grid(args.snr_db))
    return _finish_sweep(args, config)


def cmd_sweep_error_variance(args) -> int:
    snr_grid = parse_grid(args.snr_db)
    variance_grid = parse_grid(args.error_variance)
    # error_regime is unused on this path; each grid point carries its own.
    config = _config_from_args(
        args, ErrorRegime.fixed_variance(variance_grid[0]), snr_grid, variance_grid
    )
    return _finish_sweep(args, config)


def cmd_sweep_alpha(args) -> int:
    regime = ErrorRegime.snr_scaled(args.alpha)
    config = _config_from_args(args, regime, parse_grid(args.snr_db))
    return _finish_sweep(args, config)


def _print_check(name: str, passed: bool, detail: str) -> bool:
    print(f"{'ok  ' if passed else 'FAIL'} {name}: {detail}")
    return passed


def cmd_validate_chain(args) -> int:
    qam = qam_constellation(4)
    lattice = qam.lattice()
    tau = lattice.tau
    rng = np.random.default_rng(args.seed)
    all_ok = True

    spread = 4.0 * complex_gaussian(rng, (args.samples,))
    reduced = modulo_reduce(spread, lattice)
    in_cell = bool(
        np.all(reduced.real >= -tau / 2)
        and np.all(reduced.real < tau / 2)
        and np.all(reduced.imag >= -tau / 2)
        and np.all(reduced.imag < tau / 2)
    )
    all_ok &= _print_check(
        "modulo range", in_cell, f"{args.samples} wide draws land in the cell"
    )

    feedback = random_feedback_matrix(4, 1.0, args.seed + 1)
    symbols = rng.choice(qam.points, size=(args.samples, 4))
    w, d = thp_encode(symbols, feedback, lattice)
    residual = np.max(np.abs(w @ feedback.T - symbols - d))
    offsets = d / tau
    on_lattice = float(
        np.max(np.abs(offsets.real - np.round(offsets.real)))
        + np.max(np.abs(offsets.imag - np.round(offsets.imag)))
    )
    ok = bool(residual < 1e-10 and on_lattice < 1e-10)
    all_ok &= _print_check(
        "encode identity",
        ok,
        f"max |B w - s - d| = {residual:.2e}, offsets on lattice to {on_lattice:.2e}",
    )

    e_tr = snr_db_to_power(15.0)
    worst = 0.0
    for c in range(args.channels):
        h_est = complex_gaussian(stream_rng(args.seed, CHANNEL_STREAM, c), (4, 4))
        noise = complex_gaussian(stream_rng(args.seed, 7, c), (4,))
        s = np.random.default_rng(args.seed + c).choice(qam.points, size=4)
        for base in ("cthp", "dthp"):
            precoders = build_precoders(h_est, SchemeTag(base), e_tr, 0.75)
            trace = run_perfect_csit_chain(
                precoders, s, noise, lattice, beta_scale=args.inject_beta_scale
            )
            if base == "cthp":
                expected = trace.v + noise / precoders.beta
            else:
                expected = trace.v + precoders.g_diag * noise / precoders.beta
            worst = max(worst, float(np.max(np.abs(trace.received - expected))))
    ok = worst < 1e-9
    all_ok &= _print_check(
        "chain cancellation",
        ok,
        f"worst residual over {args.channels} channels, both structures: {worst:.2e}",
    )

    # Fixed feedback matrix: the loss estimate is a property of the
    # protocol, only the symbol draw should follow the user seed.
    dense = random_feedback_matrix(8, 1.5, 77)
    loss = measure_power_loss(qam, dense, lattice, 200000, args.seed + 3)
    ok = 0.72 <= loss <= 0.78
    all_ok &= _print_check(
        "power loss", ok, f"4-QAM estimate {loss:.4f} (expected in [0.72, 0.78])"
    )

    return 0 if all_ok else 1


def cmd_cross_check_sinr(args) -> int:
    e_tr = snr_db_to_power(args.snr_db)
    sigma_e2 = args.error_variance
    perfect = sigma_e2 == 0.0
    failed = False
    for scheme in parse_schemes(args.schemes):
        h_est = complex_gaussian(stream_rng(args.seed, CHANNEL_STREAM, 0), (args.users, args.tx_antennas))
        if perfect:
            h_e = np.zeros_like(h_est)
        else:
            h_e = draw_error_ensemble(
                args.users, args.tx_antennas, sigma_e2, 1, args.seed, 0
            )[0]
        precoders = build_precoders(
            h_est, scheme, e_tr, args.power_loss, power_split=args.split
        )
        check = cross_check_sinr(precoders, h_e, 1.0, args.samples, args.seed)
        print(f"scheme {scheme.tag} (csit={check.closed.csit}):")
        for k in range(args.users):
            closed = check.closed.private[k]
            est = check.estimated.private[k]
            gap = abs(est - closed) / closed
            print(
                f"  user {k}: closed {closed:.4f}  simulated {est:.4f}  gap {gap:.2%}"
            )
        if check.closed.common is not None:
            for k in range(args.users):
                closed = check.closed.common[k]
                est = check.estimated.common[k]
                gap = abs(est - closed) / closed
                print(
                    f"  common@user {k}: closed {closed:.4f}  simulated {est:.4f}  gap {gap:.2%}"
                )
        for note in check.annotations:
            print(f"  note: {note}")
        if perfect and check.max_rel_gap_private > CROSS_CHECK_TOL:
            failed = True
            print(
                f"  FAIL perfect-CSIT gap {check.max_rel_gap_private:.2%} "
                f"exceeds {CROSS_CHECK_TOL:.0%}"
            )
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsthp",
        description="Downlink precoding sum-rate simulator (zero-forcing, "
        "Tomlinson-Harashima, and rate-splitting schemes)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep-snr", help="ergodic sum rate vs SNR")
    _common_sweep_arguments(p)
    p.add_argument("--snr-db", type=str, default="0:5:30", help="SNR grid in dB")
    p.add_argument(
        "--error-variance",
        type=float,
        default=0.0,
        help="fixed CSIT error variance (0 = perfect CSIT)",
    )
    p.set_defaults(handler=cmd_sweep_snr)

    p = sub.add_parser(
        "sweep-error-variance", help="ergodic sum rate vs CSIT error variance"
    )
    _common_sweep_arguments(p)
    p.add_argument("--snr-db", type=str, default="15", help="fixed SNR in dB (one value)")
    p.add_argument(
        "--error-variance",
        type=str,
        default="0.05,0.1,0.2,0.3,0.4,0.5",
        help="error variance grid",
    )
    p.set_defaults(handler=cmd_sweep_error_variance)

    p = sub.add_parser(
        "sweep-alpha", help="ergodic sum rate vs SNR with SNR-scaled error variance"
    )
    _common_sweep_arguments(p)
    p.add_argument("--snr-db", type=str, default="0:5:30", help="SNR grid in dB")
    p.add_argument(
        "--alpha", type=float, default=0.6, help="error variance decay exponent"
    )
    p.set_defaults(handler=cmd_sweep_alpha)

    p = sub.add_parser("validate-chain", help="modulo chain self-checks")
    p.add_argument("--channels", type=int, default=100)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument(
        "--inject-beta-scale", type=float, default=1.0, help=argparse.SUPPRESS
    )
    p.set_defaults(handler=cmd_validate_chain)

    p = sub.add_parser(
        "cross-check-sinr", help="closed-form SINRs vs signal-model simulation"
    )
    p.add_argument("--users", type=int, default=4)
    p.add_argument("--tx-antennas", type=int, default=4)
    p.add_argument("--schemes", type=str, default="cthp,dthp")
    p.add_argument("--snr-db", type=float, default=15.0)
    p.add_argument("--error-variance", type=float, default=0.0)
    p.add_argument("--split", type=float, default=0.0, help="common-stream power split")
    p.add_argument("--lambda", dest="power_loss", type=float, default=0.75)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=default_seed())
    p.set_defaults(handler=cmd_cross_check_sinr)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except SimulatorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
