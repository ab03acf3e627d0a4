"""Command-line surface: sweeps to CSV, sample-file evaluation, thresholds.

Every command is deterministic given its flags (including --seed).  Floats
are written with repr, i.e. the shortest string that parses back to the
same value, so emitted CSVs round-trip bit-identically.

Exit codes: 0 success, 2 configuration error, 3 resource cap exceeded,
4 input parse error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .analytic import (
    THRESHOLDS,
    channel_affine_xi,
    classical_bound_grid,
    db,
    fidelity_bounds,
    grid_squeezing_bounds_from_xi,
    loss_to_noise_variance,
    min_eta_for_band,
    xi_approx_symmetric,
    xi_finite_superposition,
    ApproxGKPParams,
)
from .estimator import (
    SampleParseError,
    UnmeasurableGridError,
    estimate_xi,
    load_samples,
    optimize_xi,
)
from .fock import ResourceCapError, wigner
from .operators import GridSpec, build_operator, ground_state, preset_grid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_PARSE = 4

THRESHOLD_NOTES = [
    "q0 classical bound follows the vacuum Gaussian integral: with rows "
    "(sqrt(pi)/2) x and sqrt(pi) p it equals 2 - exp(-pi/4) - exp(-pi) "
    "~= 1.5008; the variant 2 - exp(-pi/2) - exp(-pi) ~= 1.7489 that "
    "sometimes circulates substitutes pi/2 for the squared row length "
    "pi/4 and is inconsistent with that integral.",
    "fault-tolerance constants are quoted to two significant figures and "
    "were derived for peak-superposition reference states; the bands are "
    "reported verbatim without claiming exactness.",
    "scaled-basis loss map: the ft-necessary band (xi <= 0.312) becomes "
    "unreachable below eta ~= 0.9025 (roughly 10% loss); the ft-guaranteed "
    "band (xi <= 0.135) below eta ~= 0.9574.",
]


def _fmt(value) -> str:
    # repr of a plain float is the shortest string that round-trips exactly;
    # numpy scalars must be coerced first (their repr carries the dtype).
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_lines(path: str | None, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _write_csv(path, header, rows, preamble=()) -> None:
    lines = [f"# {line}" for line in preamble]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _write_lines(path, lines)


def _grid_from_args(args) -> GridSpec:
    if getattr(args, "grid", None) is not None:
        c11, c12, c21, c22, d1, d2 = args.grid
        return GridSpec(c11, c12, c21, c22, d1=d1, d2=d2, label="custom")
    return preset_grid(args.topology)


def _grid_dict(grid: GridSpec) -> dict:
    return {
        "c11": grid.c11,
        "c12": grid.c12,
        "c21": grid.c21,
        "c22": grid.c22,
        "d1": grid.d1,
        "d2": grid.d2,
        "label": grid.label,
        "gkp_valid": grid.gkp_valid,
    }


def cmd_ground_sweep(args) -> int:
    dims = list(args.dims)
    if dims != sorted(dims):
        raise ValueError("--dims must be ascending")
    rows = []
    for name in args.topology:
        grid = preset_grid(name)
        for dim in dims:
            gs = ground_state(build_operator(grid, dim, args.oversample))
            rows.append((name, dim, gs.xi_min, db(gs.xi_min), gs.degeneracy))
    _write_csv(
        args.output,
        ("topology", "N", "xi_min", "xi_min_db", "degeneracy"),
        rows,
        preamble=[f"oversample={args.oversample}"],
    )
    return EXIT_OK


def cmd_wigner(args) -> int:
    dim = args.dims[0]
    grid = preset_grid(args.topology[0])
    gs = ground_state(build_operator(grid, dim, args.oversample))
    if args.resolution < 1:
        raise ValueError("--resolution must be >= 1")
    axis = np.linspace(-args.extent, args.extent, args.resolution) if args.resolution > 1 else np.array([0.0])
    points = [(x, p) for p in axis for x in axis]
    values = wigner(gs.state, points)
    rows = [(x, p, w) for (x, p), w in zip(points, values)]
    _write_csv(
        args.output,
        ("x", "p", "w"),
        rows,
        preamble=[
            f"topology={args.topology[0]} N={dim} extent={_fmt(float(args.extent))} "
            f"resolution={args.resolution} oversample={args.oversample} "
            f"xi_min={_fmt(gs.xi_min)}"
        ],
    )
    return EXIT_OK


def cmd_fidelity_sweep(args) -> int:
    start, stop, count = args.fidelity_grid
    count = int(count)
    if count < 1:
        raise ValueError("--fidelity-grid count must be >= 1")
    f_values = np.linspace(start, stop, count)
    s0 = preset_grid("s0")
    classical = classical_bound_grid(s0)
    rows = []
    for g in args.g:
        xi1 = xi_approx_symmetric(g)
        for f in f_values:
            lower, upper = fidelity_bounds(float(f), g)
            rows.append(
                (
                    float(f),
                    g,
                    lower,
                    upper,
                    xi1,
                    classical,
                    THRESHOLDS.gaussian_bound,
                    THRESHOLDS.ft_sufficient_xi0,
                    THRESHOLDS.ft_necessary_xi0,
                )
            )
    _write_csv(
        args.output,
        ("f", "g", "xi_lower", "xi_upper", "xi_exact_state", "classical_bound",
         "gaussian_bound", "ft_guaranteed_xi", "ft_possible_xi"),
        rows,
    )
    return EXIT_OK


def cmd_channel_sweep(args) -> int:
    start, stop, count = args.xi_in
    count = int(count)
    if count < 1:
        raise ValueError("--xi-in count must be >= 1")
    xi_in_values = np.linspace(start, stop, count)
    rows = []
    for eta in args.eta:
        v = loss_to_noise_variance(eta) + args.nbar / eta
        for xi_in in xi_in_values:
            rows.append((eta, v, float(xi_in), channel_affine_xi(float(xi_in), v=v)))
    preamble = [
        f"nbar={_fmt(float(args.nbar))}",
        f"eta_min_ft_guaranteed={_fmt(min_eta_for_band(THRESHOLDS.ft_sufficient_xi0))}",
        f"eta_min_ft_possible={_fmt(min_eta_for_band(THRESHOLDS.ft_necessary_xi0))}",
    ]
    _write_csv(args.output, ("eta", "v_equivalent", "xi_in", "xi_out"), rows, preamble)
    return EXIT_OK


def cmd_peaks_sweep(args) -> int:
    grid = preset_grid("s0")
    rows = []
    for g in args.g:
        for s_max in args.smax:
            params = ApproxGKPParams(g=g, a=math.sqrt(math.pi / 2.0), s_max=int(s_max))
            rows.append((g, int(s_max), xi_finite_superposition(params, grid)))
    _write_csv(args.output, ("g", "s_max", "xi"), rows)
    return EXIT_OK


def cmd_estimate(args) -> int:
    samples = load_samples(args.input)
    report_dict: dict = {"schema_version": 1, "command": "estimate", "input": str(args.input)}
    if args.optimize:
        result = optimize_xi(
            samples,
            constrain_gkp_valid=args.gkp_valid,
            restarts=args.restarts,
            angle_tolerance=args.angle_tolerance,
        )
        report = estimate_xi(samples, result.best_grid, args.angle_tolerance,
                             bootstrap=args.bootstrap, seed=args.seed)
        report_dict.update(
            {
                "optimized": True,
                "m_gkp": result.m_gkp,
                "angles_used": list(result.angles_used),
                "notes": [result.note],
            }
        )
    else:
        grid = _grid_from_args(args)
        report = estimate_xi(samples, grid, args.angle_tolerance,
                             bootstrap=args.bootstrap, seed=args.seed)
        report_dict.update({"optimized": False, "m_gkp": None, "notes": []})
    report_dict["std_error_method"] = "bootstrap" if args.bootstrap else "delta"
    report_dict.update(
        {
            "xi": report.xi,
            "std_error": report.std_error,
            "xi_db": report.xi_db if math.isfinite(report.xi_db) else None,
            "grid": _grid_dict(report.grid),
            "classification": report.classification,
            "sample_counts": {repr(a): n for a, n in report.sample_counts.items()},
        }
    )
    _write_lines(args.output, [json.dumps(report_dict, indent=2, sort_keys=True)])
    return EXIT_OK


def cmd_thresholds(args) -> int:
    grid = _grid_from_args(args)
    classical = classical_bound_grid(grid)
    bounds_grid = grid.label if grid.label in ("q0", "s0") else "q0"
    payload = {
        "schema_version": 1,
        "command": "thresholds",
        "grid": _grid_dict(grid),
        "classical_bound": classical,
        "classical_bound_db": db(classical),
        "gaussian_bound": THRESHOLDS.gaussian_bound,
        "gaussian_bound_db": db(THRESHOLDS.gaussian_bound),
        "ft_sufficient_xi0": THRESHOLDS.ft_sufficient_xi0,
        "ft_sufficient_db": db(THRESHOLDS.ft_sufficient_xi0),
        "ft_necessary_xi0": THRESHOLDS.ft_necessary_xi0,
        "ft_necessary_db": db(THRESHOLDS.ft_necessary_xi0),
        "ft_symmetric_xi0": THRESHOLDS.ft_symmetric_xi0,
        "ft_symmetric_db": db(THRESHOLDS.ft_symmetric_xi0),
        "grid_ft_delta_sq": THRESHOLDS.grid_ft_delta_sq,
        "grid_ft_db": THRESHOLDS.grid_ft_db,
        "bound_formulas": {
            "q0": [
                "delta_x_sq(u=sqrt(pi))    <= -(4/pi) ln(1 - xi)",
                "delta_p_sq(u=2 sqrt(pi))  <= -(1/pi) ln(1 - xi)",
            ],
            "s0": [
                "delta_x_sq(u=sqrt(2 pi))  <= -(2/pi) ln(1 - xi)",
                "delta_p_sq(u=sqrt(2 pi))  <= -(2/pi) ln(1 - xi)",
            ],
        },
        "bounds_at_ft_symmetric": _bounds_dict(THRESHOLDS.ft_symmetric_xi0, bounds_grid),
        "notes": THRESHOLD_NOTES,
    }
    if args.json:
        _write_lines(args.output, [json.dumps(payload, indent=2, sort_keys=True)])
        return EXIT_OK
    lines = [
        f"grid: {grid.label or 'custom'} (gkp_valid={grid.gkp_valid})",
        f"classical bound: {classical:.6f} ({db(classical):+.2f} dB)",
        f"gaussian bound:  {THRESHOLDS.gaussian_bound:.6f} ({db(THRESHOLDS.gaussian_bound):+.2f} dB)",
        f"ft sufficient:   {THRESHOLDS.ft_sufficient_xi0:.3f} ({db(THRESHOLDS.ft_sufficient_xi0):+.2f} dB)",
        f"ft necessary:    {THRESHOLDS.ft_necessary_xi0:.3f} ({db(THRESHOLDS.ft_necessary_xi0):+.2f} dB)",
        f"ft symmetric:    {THRESHOLDS.ft_symmetric_xi0:.3f} ({db(THRESHOLDS.ft_symmetric_xi0):+.2f} dB)",
        f"grid ft band:    delta_sq <= {THRESHOLDS.grid_ft_delta_sq:.3f} ({THRESHOLDS.grid_ft_db:+.1f} dB)",
        "grid-squeezing bounds:",
    ]
    for name, formulas in payload["bound_formulas"].items():
        for f in formulas:
            lines.append(f"  {name}: {f}")
    lines.append("notes:")
    for note in THRESHOLD_NOTES:
        lines.append(f"  - {note}")
    _write_lines(args.output, lines)
    return EXIT_OK


def _bounds_dict(xi: float, grid_name: str) -> dict:
    b = grid_squeezing_bounds_from_xi(xi, grid_name)
    return {
        "grid": b.grid,
        "max_delta_x_sq": b.max_delta_x_sq,
        "max_delta_p_sq": b.max_delta_p_sq,
        "symmetric_delta_sq": b.symmetric_delta_sq,
        "pessimistic_delta_x_sq": b.pessimistic_delta_x_sq,
        "pessimistic_fixed_p_sq": b.pessimistic_fixed_p_sq,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gkpsq",
        description="Grid-state squeezing: operator sweeps, closed forms, sample estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, topologies=True, multi_topology=True):
        if topologies:
            nargs = "+" if multi_topology else 1
            p.add_argument("--topology", nargs=nargs, default=None, help="preset grid name(s)")
        p.add_argument("--oversample", type=int, default=10, help="build-dimension factor")
        p.add_argument("--output", default=None, help="output path ('-' or omitted: stdout)")

    p = sub.add_parser("ground-sweep", help="minimal xi per topology and dimension, CSV")
    p.add_argument("--topology", nargs="+", default=["q0", "q1", "s0", "s1", "hex"])
    p.add_argument("--dims", type=int, nargs="+", required=True, help="ascending dimensions")
    p.add_argument("--oversample", type=int, default=10)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_ground_sweep)

    p = sub.add_parser("wigner", help="Wigner function of a ground state on a square grid, CSV")
    p.add_argument("--topology", nargs=1, default=["q0"])
    p.add_argument("--dims", type=int, nargs=1, required=True)
    p.add_argument("--extent", type=float, default=6.0, help="half-width of the grid")
    p.add_argument("--resolution", type=int, default=81, help="points per axis")
    p.add_argument("--oversample", type=int, default=10)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_wigner)

    p = sub.add_parser("fidelity-sweep", help="squeezing bounds versus fidelity, CSV")
    p.add_argument("--g", type=float, nargs="+", required=True, help="peak variances")
    p.add_argument("--fidelity-grid", type=float, nargs=3, default=(0.0, 1.0, 101),
                   metavar=("START", "STOP", "COUNT"))
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_fidelity_sweep)

    p = sub.add_parser("channel-sweep", help="scaled-basis loss map xi_in -> xi_out, CSV")
    p.add_argument("--eta", type=float, nargs="+", required=True, help="transmissions")
    p.add_argument("--nbar", type=float, default=0.0, help="added thermal photons")
    p.add_argument("--xi-in", type=float, nargs=3, default=(0.0, 2.0, 81),
                   metavar=("START", "STOP", "COUNT"))
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_channel_sweep)

    p = sub.add_parser("peaks-sweep", help="squeezing of finite peak superpositions, CSV")
    p.add_argument("--g", type=float, nargs="+", required=True)
    p.add_argument("--smax", type=int, nargs="+", required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_peaks_sweep)

    p = sub.add_parser("estimate", help="evaluate a homodyne sample file, JSON report")
    p.add_argument("--input", required=True, help="CSV with header angle,value")
    p.add_argument("--topology", default="s0", help="preset grid to evaluate")
    p.add_argument("--grid", type=float, nargs=6, default=None,
                   metavar=("C11", "C12", "C21", "C22", "D1", "D2"))
    p.add_argument("--optimize", action="store_true", help="minimize over measured-angle grids")
    p.add_argument("--gkp-valid", action="store_true", default=True)
    p.add_argument("--no-gkp-valid", dest="gkp_valid", action="store_false")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--angle-tolerance", type=float, default=1e-6)
    p.add_argument("--bootstrap", type=int, default=None,
                   help="resample count for bootstrap error bars (default: delta method)")
    p.add_argument("--seed", type=int, default=0, help="bootstrap resampling seed")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("thresholds", help="classification constants and bound formulas")
    p.add_argument("--topology", default="q0")
    p.add_argument("--grid", type=float, nargs=6, default=None,
                   metavar=("C11", "C12", "C21", "C22", "D1", "D2"))
    p.add_argument("--json", action="store_true")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_thresholds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_CONFIG
        return EXIT_OK if code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except SampleParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, UnmeasurableGridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
