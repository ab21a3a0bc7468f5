"""Command-line front end.

Subcommands:

    concurrence   one point: every concurrence reading at (theta, delay)
    sweep         CSV/JSON table over theta and delay grids
    hom           simulated Hong-Ou-Mandel scan with a Gaussian dip fit
    verify        randomized cross-check suites between algebra and oracle

Angles are degrees at this boundary (radians never leak out), lengths are
micrometers.  Exit codes: 0 success, 1 usage error, 2 numerical/fit failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .core_state import SingleParticleState, Spin
from . import entanglement, optics, verification
from .nolabel_algebra import expand_in_detector_basis, postselect_one_per_detector

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_VERIFICATION = 3

SWEEP_COLUMNS = (
    "theta_deg",
    "delay_um",
    "spatial_overlap",
    "overlap_paper",
    "overlap_quadrature",
    "c_closed_form",
    "c_wootters_normalized",
    "e_p",
)
SWEEP_NOISY_COLUMNS = SWEEP_COLUMNS + ("c_mc_mean", "c_mc_stddev")

#: delay -> |<phi_A|phi_B>| mappings selectable on the command line; 'fitted'
#: is the optical law's own Gaussian factor and keeps every column consistent
#: with C = sin^2(4 theta) exp(-l^2/(2 sigma^2))
PIPELINE_CONVENTIONS = ("fitted", "paper", "quadrature")


class _Parser(argparse.ArgumentParser):
    # argparse defaults to exit code 2 on usage problems; this project
    # reserves 2 for numerical failures
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


@dataclass(frozen=True)
class SweepConfig:
    theta_grid: tuple[float, ...]
    delay_grid: tuple[float, ...]
    sigma_um: float
    convention: str
    noisy: bool
    shots: float
    runs: int
    seed: int
    out: Optional[str]
    fmt: str


def _parse_grid(spec: str) -> tuple[float, ...]:
    """Comma list '0,30,60' or linspace 'start:stop:count'."""
    spec = spec.strip()
    try:
        if ":" in spec:
            start, stop, count = spec.split(":")
            n = int(count)
            if n < 1:
                raise ValueError
            return tuple(float(v) for v in np.linspace(float(start), float(stop), n))
        values = tuple(float(tok) for tok in spec.split(",") if tok.strip())
        if not values:
            raise ValueError
        return values
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad grid {spec!r}; use 'a,b,c' or 'start:stop:count'"
        ) from None


def _fmt(x: float) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # normalize -0.0
    return format(x, ".12g")


def _sigma_from_args(args) -> float:
    if getattr(args, "delta", None) is not None:
        return optics.delta_to_sigma(args.delta)
    return args.sigma_um


def _pipeline_overlap(convention: str, l_um: float, sigma_um: float) -> float:
    if convention == "fitted":
        return optics.effective_overlap(l_um, sigma_um)
    return optics.gaussian_overlap(l_um, convention, optics.sigma_to_delta(sigma_um))


def _point_values(theta_deg: float, delay_um: float, sigma_um: float, convention: str):
    """All derived quantities of one (theta, delay) grid point."""
    delta = optics.sigma_to_delta(sigma_um)
    ov = _pipeline_overlap(convention, delay_um, sigma_um)
    alphas, betas = optics.spatial_amplitudes_from_theta(theta_deg)
    phi_a, phi_b = optics.dist_vectors_for_overlap(ov)
    p_a = SingleParticleState(alphas, Spin.UP, phi_a)
    p_b = SingleParticleState(betas, Spin.DOWN, phi_b)
    rho = entanglement.trace_out_distinguishability(
        postselect_one_per_detector(expand_in_detector_basis(p_a, p_b))
    )
    e_p = entanglement.entanglement_of_particles(
        entanglement.number_distribution(p_a, p_b)
    )
    return {
        "theta_deg": theta_deg,
        "delay_um": delay_um,
        "spatial_overlap": optics.spatial_overlap_factor(theta_deg),
        "overlap_paper": optics.gaussian_overlap(delay_um, "paper", delta),
        "overlap_quadrature": optics.gaussian_overlap(delay_um, "quadrature", delta),
        "c_closed_form": entanglement.concurrence_closed_form(alphas, betas, ov),
        "c_wootters_normalized": entanglement.wootters_concurrence(rho, normalize=True),
        "e_p": e_p,
    }, rho


def cmd_concurrence(args) -> int:
    sigma = _sigma_from_args(args)
    values, _ = _point_values(args.theta_deg, args.delay_um, sigma, args.overlap_convention)
    lines = [
        ("theta_deg", args.theta_deg),
        ("delay_um", args.delay_um),
        ("sigma_um", sigma),
        ("spatial_overlap", values["spatial_overlap"]),
        ("overlap_paper", values["overlap_paper"]),
        ("overlap_quadrature", values["overlap_quadrature"]),
        ("C", optics.concurrence_optical(args.theta_deg, args.delay_um, sigma)),
        ("C_wootters", values["c_wootters_normalized"]),
        ("E_P", values["e_p"]),
    ]
    for name, val in lines:
        print(f"{name:<20} = {val:.6f}")
    return EXIT_OK


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", encoding="utf-8", newline=""), True
    except OSError as exc:
        print(f"error: cannot write {path!r}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE) from exc


def _write_table(handle, fmt: str, columns: Sequence[str], rows, metadata: dict):
    if fmt == "csv":
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    else:
        payload = {
            "metadata": metadata,
            "rows": [{c: row[c] for c in columns} for row in rows],
        }
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def cmd_sweep(args) -> int:
    sigma = _sigma_from_args(args)
    config = SweepConfig(
        theta_grid=args.theta_grid,
        delay_grid=args.delay_grid,
        sigma_um=sigma,
        convention=args.overlap_convention,
        noisy=args.noisy,
        shots=args.shots,
        runs=args.runs,
        seed=args.seed,
        out=args.out,
        fmt=args.format,
    )
    columns = SWEEP_NOISY_COLUMNS if config.noisy else SWEEP_COLUMNS
    rows = []
    row_index = 0
    for theta in config.theta_grid:
        for delay in config.delay_grid:
            values, rho = _point_values(theta, delay, sigma, config.convention)
            if config.noisy:
                # row-indexed generator so row order never couples the draws
                rng = np.random.default_rng([config.seed, row_index])
                draws = [
                    optics.sample_xstate_concurrence(rho, config.shots, rng)
                    for _ in range(config.runs)
                ]
                values["c_mc_mean"] = float(np.mean(draws))
                values["c_mc_stddev"] = float(np.std(draws, ddof=1))
            rows.append(values)
            row_index += 1
    metadata = {
        "command": "sweep",
        "version": __version__,
        "theta_grid": list(config.theta_grid),
        "delay_grid": list(config.delay_grid),
        "sigma_um": config.sigma_um,
        "overlap_convention": config.convention,
        "noisy": config.noisy,
        "shots": config.shots,
        "runs": config.runs,
        "seed": config.seed,
    }
    handle, owned = _open_out(config.out)
    try:
        _write_table(handle, config.fmt, columns, rows, metadata)
    finally:
        if owned:
            handle.close()
    return EXIT_OK


def cmd_hom(args) -> int:
    if not 0.0 <= args.visibility <= 1.0:
        print("error: visibility must lie in [0, 1]", file=sys.stderr)
        return EXIT_USAGE
    w = args.fwhm_um / optics.GAUSSIAN_FWHM_FACTOR

    def truth(l: float) -> float:
        return args.baseline * (
            1.0 - args.visibility * np.exp(-((l - args.center_um) ** 2) / (2.0 * w**2))
        )

    delays = args.delay_grid
    params = optics.ExperimentParams(
        sigma_um=args.fwhm_um / optics.GAUSSIAN_FWHM_FACTOR,
        shots=1.0,
        seed=args.seed,
        runs=args.runs,
    )
    if args.noisy:
        counts = optics.simulate_counts(params, truth, delays)
    else:
        counts = np.array([truth(l) for l in delays])

    rows = [{"delay_um": l, "counts": c} for l, c in zip(delays, counts)]
    metadata = {
        "command": "hom",
        "version": __version__,
        "visibility": args.visibility,
        "fwhm_um": args.fwhm_um,
        "baseline": args.baseline,
        "center_um": args.center_um,
        "noisy": args.noisy,
        "runs": args.runs,
        "seed": args.seed,
    }
    handle, owned = _open_out(args.out)
    try:
        _write_table(handle, args.format, ("delay_um", "counts"), rows, metadata)
    finally:
        if owned:
            handle.close()

    try:
        fit = optics.fit_gaussian_dip(
            list(zip(delays, counts)), poisson_weights=args.noisy
        )
    except optics.FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    print(f"fit: baseline    = {fit.baseline:.6f} +/- {fit.baseline_err:.6f}")
    print(f"fit: depth       = {fit.depth:.6f} +/- {fit.depth_err:.6f}")
    print(f"fit: center_um   = {fit.center_um:.6f} +/- {fit.center_err:.6f}")
    print(f"fit: fwhm_um     = {fit.fwhm_um:.6f} +/- {fit.fwhm_err:.6f}")
    print(f"fit: visibility  = {fit.visibility:.6f} +/- {fit.visibility_err:.6f}")
    print(f"fit: residual    = {fit.residual:.6g}")

    if args.noisy:
        def vis_estimator(c):
            return optics.fit_gaussian_dip(list(zip(delays, c)), poisson_weights=True).visibility

        def fwhm_estimator(c):
            return optics.fit_gaussian_dip(list(zip(delays, c)), poisson_weights=True).fwhm_um

        try:
            v_mean, v_std = optics.monte_carlo_errorbars(params, truth, delays, vis_estimator)
            f_mean, f_std = optics.monte_carlo_errorbars(params, truth, delays, fwhm_estimator)
        except (optics.FitError, optics.EstimatorError) as exc:
            print(f"monte carlo failed: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        print(f"mc ({args.runs} runs): visibility = {v_mean:.6f} +/- {v_std:.6f}")
        print(f"mc ({args.runs} runs): fwhm_um    = {f_mean:.6f} +/- {f_std:.6f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        results = verification.run_suites(
            trials=args.trials, seed=args.seed, tolerance_override=args.tolerance_override
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    failed = 0
    for r in results:
        if r.kind == "check":
            status = "PASS" if r.passed else "FAIL"
            print(
                f"[check ] {r.name:<36} max_dev={r.max_deviation:<12.3e} "
                f"tol={r.tolerance:.0e}  {status}"
            )
            failed += 0 if r.passed else 1
        else:
            print(
                f"[report] {r.name:<36} max_dev={r.max_deviation:<12.3e} ({r.note})"
            )
    checks = sum(1 for r in results if r.kind == "check")
    print(f"verification: {checks - failed}/{checks} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFICATION


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="twoboson",
        description="Entanglement of two identical bosons from spatial overlap "
        "and indistinguishability.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_sigma(p):
        group = p.add_mutually_exclusive_group()
        group.add_argument(
            "--sigma-um",
            type=float,
            default=optics.DEFAULT_SIGMA_UM,
            help="Gaussian width of the concurrence-vs-delay curve (um)",
        )
        group.add_argument(
            "--delta", type=float, default=None,
            help="spectral width (1/um); sigma = 1/(2 delta)",
        )

    p = sub.add_parser("concurrence", help="all concurrence readings at one point")
    p.add_argument("--theta-deg", type=float, required=True, help="half-wave-plate angle")
    p.add_argument("--delay-um", type=float, default=0.0, help="path delay (um)")
    add_sigma(p)
    p.add_argument(
        "--overlap-convention",
        choices=PIPELINE_CONVENTIONS,
        default="fitted",
        help="delay-to-overlap mapping used for the density-matrix pipeline",
    )
    p.set_defaults(func=cmd_concurrence)

    p = sub.add_parser("sweep", help="table of concurrence readings over grids")
    p.add_argument("--theta-grid", type=_parse_grid, default=_parse_grid("0:45:19"))
    p.add_argument("--delay-grid", type=_parse_grid, default=_parse_grid("0,30,60,300"))
    add_sigma(p)
    p.add_argument("--overlap-convention", choices=PIPELINE_CONVENTIONS, default="fitted")
    p.add_argument("--noisy", action="store_true", help="add Monte Carlo columns")
    p.add_argument("--shots", type=float, default=1000.0, help="counts scale per channel")
    p.add_argument("--runs", type=int, default=100, help="Monte Carlo resamples per row")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output path ('-' = stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("hom", help="simulate and fit a Hong-Ou-Mandel dip")
    p.add_argument("--visibility", type=float, default=1.0, help="true dip visibility")
    p.add_argument("--fwhm-um", type=float, default=132.0, help="true dip FWHM (um)")
    p.add_argument("--baseline", type=float, default=1000.0, help="coincidence level far from the dip")
    p.add_argument("--center-um", type=float, default=0.0, help="dip center")
    p.add_argument("--delay-grid", type=_parse_grid, default=_parse_grid("-300:300:61"))
    p.add_argument("--noisy", action="store_true", help="Poisson counts instead of exact rates")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="count table path ('-' = stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_hom)

    p = sub.add_parser("verify", help="run the randomized cross-check suites")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance-override", type=float, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValueError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
