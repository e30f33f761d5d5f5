"""Command-line interface: ``gauge-me <subcommand> ...``.

Reports (rates, steady, lindblad-check) default to JSON, tables (sweep,
spectral, evolve, trajectories) to CSV. Output is deterministic: floats are
written with ``repr`` and JSON keys are sorted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from ._parallel import worker_count
from .dynamics import (
    DensityMatrix,
    emissions_to_csv,
    evolve,
    simulate_trajectories,
    steady_emission_rate,
    steady_state,
)
from .errors import (
    DomainError,
    LindbladViolationError,
    NoSteadyStateError,
    NumericalError,
    ScenarioError,
)
from .gauge import coupling_coefficients, custom_gauge, parse_gauge, spectral_weight
from .lindblad import build_dissipator, diagonalize, positivity_bound_scan, positivity_check, scan_to_csv
from .rates import PerturbativeValidityWarning, rate_set
from .scenarios import PRESET_NAMES, omega_from_wavelength, preset, resolve_scenario, serialize_scenario

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4
EXIT_REFUSED = 5

SWEEP_OUTPUTS = ("A_minus", "A_plus", "B_abs", "I_ss", "ratio")
_SWEEP_UNITS = {"A_minus": "per_s", "A_plus": "per_s", "B_abs": "per_s", "I_ss": "per_s"}
_VAR_UNITS = {"omega_max": "rad_s", "omega_min": "rad_s", "delta_t": "s"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _num(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return value


def _gauge_arg(text: str):
    try:
        return parse_gauge(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fmt(value) -> str:
    return repr(float(value))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    value = float(obj)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return value


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report(args, payload: dict) -> None:
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        keys = sorted(payload)
        writer.writerow(keys)
        writer.writerow([_cell(payload[k]) for k in keys])
        _emit(args, buf.getvalue())
    else:
        _emit(args, json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n")


def _cell(value):
    if isinstance(value, (bool, str)) or value is None:
        return "" if value is None else str(value)
    return _fmt(value)


def _table(args, header, rows) -> None:
    if args.format == "json":
        records = [dict(zip(header, row)) for row in rows]
        _emit(args, json.dumps(_jsonable(records), sort_keys=True, indent=2) + "\n")
        return
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    _emit(args, buf.getvalue())


def _scenario(args):
    scenario = resolve_scenario(args.scenario)
    if getattr(args, "alpha_family", None):
        return scenario.with_gauge(custom_gauge(args.alpha_family, scenario.params.omega0))
    if getattr(args, "gauge", None):
        return scenario.with_gauge(args.gauge)
    return scenario


def _initial_state(name: str) -> DensityMatrix:
    if name == "ground":
        return DensityMatrix.ground()
    if name == "excited":
        return DensityMatrix.excited()
    return DensityMatrix(0.5, 0.5, 0.5 + 0j)


def _grid(args):
    if args.points is None or args.points < 1:
        raise UsageError("--points must be >= 1")
    if args.start is None or args.stop is None:
        raise UsageError("--from and --to are required")
    if args.points == 1:
        if args.start != args.stop:
            raise UsageError("a single-point grid needs --from equal to --to")
        return np.array([args.start])
    if not args.start < args.stop:
        raise UsageError("grid must be strictly increasing (--from < --to)")
    if args.log:
        if args.start <= 0:
            raise UsageError("--log needs --from > 0")
        return np.geomspace(args.start, args.stop, args.points)
    return np.linspace(args.start, args.stop, args.points)


def _rates_payload(scenario, rates):
    p = scenario.params
    return {
        "scenario": scenario.name,
        "gauge": scenario.gauge.name,
        "A_minus": rates.A_minus,
        "A_plus": rates.A_plus,
        "B_abs": abs(rates.B),
        "B_arg": math.atan2(rates.B.imag, rates.B.real),
        "omega0_tilde": rates.omega0_tilde,
        "gamma_delta_t": p.gamma * p.delta_t,
        "perturbative": p.perturbative,
    }


# --- subcommands ------------------------------------------------------------

def cmd_rates(args) -> int:
    scenario = _scenario(args)
    _report(args, _rates_payload(scenario, rate_set(scenario.params, scenario.gauge)))
    return EXIT_OK


def cmd_steady(args) -> int:
    scenario = _scenario(args)
    rates = rate_set(scenario.params, scenario.gauge)
    rho = steady_state(rates)
    emission = steady_emission_rate(rates)
    payload = _rates_payload(scenario, rates)
    payload.update(
        rho22_ss=rho.rho22, I_ss_total=emission.total, I_ss_narrowband=emission.narrowband
    )
    _report(args, payload)
    return EXIT_OK


def cmd_evolve(args) -> int:
    scenario = _scenario(args)
    rates = rate_set(scenario.params, scenario.gauge)
    if args.points < 2:
        raise UsageError("--points must be >= 2")
    grid = np.linspace(0.0, args.t_final, args.points)
    frame = {"auto": None, "rotating": True, "lab": False}[args.frame]
    result = evolve(_initial_state(args.initial), rates, args.t_final, grid,
                    rotating_frame=frame, method=args.method)
    header = ["time_s", "rho11", "rho22", "rho12_re", "rho12_im"]
    rows = [[t, s.rho11, s.rho22, complex(s.rho12).real, complex(s.rho12).imag]
            for t, s in zip(result.times, result.states)]
    _table(args, header, rows)
    print(f"# frame={'rotating' if result.rotating_frame else 'lab'} method={result.method}",
          file=sys.stderr)
    return EXIT_OK


def _sweep_point(scenario, var, value, outputs):
    try:
        params = scenario.params.with_(**{var: float(value)})
        rates = rate_set(params, scenario.gauge)
        total = rates.A_minus + rates.A_plus
        values = {
            "A_minus": rates.A_minus,
            "A_plus": rates.A_plus,
            "B_abs": abs(rates.B),
            "I_ss": 2 * rates.A_minus * rates.A_plus / total if total > 0 else math.nan,
            "ratio": positivity_check(build_dissipator(rates)).ratio,
        }
        return [value] + [values[k] for k in outputs] + [""]
    except (DomainError, NumericalError, NoSteadyStateError) as exc:
        return [value] + [math.nan] * len(outputs) + [f"{type(exc).__name__}: {exc}"]


def cmd_sweep(args) -> int:
    scenario = _scenario(args)
    outputs = [o.strip() for o in args.outputs.split(",") if o.strip()]
    unknown = [o for o in outputs if o not in SWEEP_OUTPUTS]
    if unknown or not outputs:
        raise UsageError(f"--outputs must be a subset of {','.join(SWEEP_OUTPUTS)}")
    grid = _grid(args)
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        rows = list(pool.map(lambda v: _sweep_point(scenario, args.var, v, outputs), grid))
    header = [f"{args.var}_{_VAR_UNITS[args.var]}"]
    header += [f"{o}_{_SWEEP_UNITS[o]}" if o in _SWEEP_UNITS else o for o in outputs]
    header.append("error")
    _table(args, header, rows)
    return EXIT_OK


def cmd_spectral(args) -> int:
    if args.alpha_family:
        omega0 = _spectral_omega0(args)
        gauge = custom_gauge(args.alpha_family, omega0)
    else:
        gauge = args.gauge or parse_gauge("minimal")
        omega0 = _spectral_omega0(args)
    rows = []
    for w in _grid(args):
        try:
            u_minus, u_plus = coupling_coefficients(gauge, omega0, w)
            f_plus = spectral_weight(gauge, +1, omega0, w)
        except DomainError as exc:
            rows.append([w, math.nan, math.nan, math.nan, math.nan, f"{type(exc).__name__}: {exc}"])
            continue
        try:
            f_minus = spectral_weight(gauge, -1, omega0, w)
            err = ""
        except DomainError as exc:
            f_minus, err = math.nan, f"{type(exc).__name__}: {exc}"
        rows.append([w, f_minus, f_plus, u_minus, u_plus, err])
    header = ["omega_k_rad_s", "f_minus", "f_plus", "u_minus", "u_plus", "error"]
    _table(args, header, rows)
    return EXIT_OK


def _spectral_omega0(args):
    if args.wavelength_nm is not None:
        return omega_from_wavelength(args.wavelength_nm)
    if args.omega0 is not None:
        return args.omega0
    return resolve_scenario(args.scenario).params.omega0


def cmd_lindblad_check(args) -> int:
    scenario = _scenario(args)
    scanning = args.start is not None or args.stop is not None
    if args.format is None:
        args.format = "csv" if scanning else "json"
    if scanning:
        rows = positivity_bound_scan(scenario.params, scenario.gauge, _grid(args))
        if args.format == "json":
            header = ["omega_max_rad_s", "A_plus", "A_minus", "B_bound_abs", "ratio"]
            _table(args, header, [[r.omega_max, r.A_plus, r.A_minus, r.B_bound_abs, r.ratio]
                                  for r in rows])
        else:
            _emit(args, scan_to_csv(rows))
        return EXIT_OK
    rates = rate_set(scenario.params, scenario.gauge)
    M = build_dissipator(rates)
    report = positivity_check(M)
    decomposition = diagonalize(M)
    payload = {
        "scenario": scenario.name,
        "gauge": scenario.gauge.name,
        "holds": report.holds,
        "det": report.det,
        "ratio": report.ratio,
        "lambda_1": decomposition.lambdas[0],
        "lambda_2": decomposition.lambdas[1],
    }
    for i in range(2):
        v = decomposition.eigenvectors[:, i]
        payload[f"L{i + 1}_sigma_plus_re"] = v[0].real
        payload[f"L{i + 1}_sigma_plus_im"] = v[0].imag
        payload[f"L{i + 1}_sigma_minus_re"] = v[1].real
        payload[f"L{i + 1}_sigma_minus_im"] = v[1].imag
    _report(args, payload)
    return EXIT_OK


def cmd_trajectories(args) -> int:
    if args.n_traj < 1:
        raise UsageError("--n-traj must be >= 1")
    scenario = _scenario(args)
    rates = rate_set(scenario.params, scenario.gauge)
    M = build_dissipator(rates)
    report = positivity_check(M)
    if not report.holds:
        raise LindbladViolationError(
            f"Lindblad condition A_plus A_minus >= |B|^2 fails "
            f"(ratio = {report.ratio:.6g}); refusing to unravel"
        )
    decomposition = diagonalize(M)
    total = rates.A_minus + rates.A_plus
    t_final = args.t_final if args.t_final is not None else 10.0 / total
    rho0 = _initial_state(args.initial)
    ensemble = simulate_trajectories(
        rho0, decomposition, t_final, args.n_traj, args.seed,
        omega0_tilde=rates.omega0_tilde, n_points=args.points,
    )
    _emit(args, emissions_to_csv(ensemble.emissions))

    reference = evolve(rho0, rates, t_final, ensemble.times)
    ode = reference.rho22
    stderr = ensemble.rho22_stderr
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(stderr > 0, np.abs(ensemble.rho22 - ode) / stderr, 0.0)
    firsts = ensemble.first_emission_times()
    emitted = firsts[~np.isnan(firsts)]
    summary = {
        "n_traj": args.n_traj,
        "seed": args.seed,
        "t_final_s": t_final,
        "dt_s": ensemble.dt,
        "n_emissions": sum(len(r) for r in ensemble.emissions),
        "n_without_emission": int(np.isnan(firsts).sum()),
        "mean_first_emission_s": float(emitted.mean()) if emitted.size else math.nan,
        "first_emission_stderr_s": (
            float(emitted.std(ddof=1) / math.sqrt(emitted.size)) if emitted.size > 1 else math.nan
        ),
        "inverse_A_minus_s": 1.0 / rates.A_minus if rates.A_minus > 0 else math.inf,
        "max_rho22_deviation_in_stderr": float(z.max()),
        "max_abs_rho22_deviation": float(np.max(np.abs(ensemble.rho22 - ode))),
    }
    text = json.dumps(_jsonable(summary), sort_keys=True, indent=2) + "\n"
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stderr.write(text)
    return EXIT_OK


def cmd_preset_dump(args) -> int:
    names = [args.name] if args.name else list(PRESET_NAMES)
    chunks = []
    for name in names:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", PerturbativeValidityWarning)
                chunks.append(serialize_scenario(preset(name)))
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    _emit(args, "\n".join(chunks))
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gauge-me", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, default_format, gauge=True):
        p.add_argument("--scenario", default="lab_ion",
                       help=f"preset name ({', '.join(PRESET_NAMES)}) or scenario file")
        if gauge:
            p.add_argument("--gauge", type=_gauge_arg, help="minimal | multipolar | rotating (overrides scenario)")
            p.add_argument("--alpha-family", help="custom gauge family, e.g. constant:0.5")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"), default=default_format)

    def grid(p):
        p.add_argument("--from", dest="start", type=_num)
        p.add_argument("--to", dest="stop", type=_num)
        p.add_argument("--points", type=int, default=None)
        p.add_argument("--log", action="store_true", help="geometric spacing")

    p = sub.add_parser("rates", help="A_minus, A_plus and B")
    common(p, "json")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("steady", help="stationary state and photon emission rate")
    common(p, "json")
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("evolve", help="integrate the master equation")
    common(p, "csv")
    p.add_argument("--t-final", type=_num, required=True)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--initial", choices=("ground", "excited", "plus"), default="excited")
    p.add_argument("--method", choices=("auto", "rk", "exact"), default="auto")
    p.add_argument("--frame", choices=("auto", "rotating", "lab"), default="auto")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("sweep", help="rates over a grid of one parameter")
    common(p, "csv")
    p.add_argument("--var", choices=tuple(_VAR_UNITS), default="omega_max")
    p.add_argument("--outputs", default=",".join(SWEEP_OUTPUTS))
    grid(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectral", help="tabulate u_pm and f_pm over mode frequency")
    common(p, "csv")
    p.add_argument("--omega0", type=_num)
    p.add_argument("--wavelength-nm", type=_num)
    grid(p)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("lindblad-check", help="positivity condition and Lindblad channels")
    common(p, None)  # JSON report, or CSV when a scan grid is given
    grid(p)
    p.set_defaults(func=cmd_lindblad_check)

    p = sub.add_parser("trajectories", help="quantum-jump unraveling")
    common(p, "csv")
    p.add_argument("--n-traj", type=int, default=1000)
    p.add_argument("--t-final", type=_num)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--initial", choices=("ground", "excited", "plus"), default="excited")
    p.add_argument("--summary", help="write the comparison summary (JSON) here")
    p.set_defaults(func=cmd_trajectories)

    p = sub.add_parser("preset-dump", help="print presets in scenario-file format")
    p.add_argument("name", nargs="?")
    p.add_argument("--out")
    p.set_defaults(func=cmd_preset_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("missing subcommand")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PerturbativeValidityWarning)
            return args.func(args)
    except UsageError as exc:
        print(f"gauge-me: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LindbladViolationError as exc:
        print(f"gauge-me: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except NumericalError as exc:
        print(f"gauge-me: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ScenarioError, DomainError, NoSteadyStateError) as exc:
        print(f"gauge-me: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
