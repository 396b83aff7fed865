"""Command-line entry point: ``thermal-routing {steady,sweep,map,verify}``.

Exit codes: 0 success, 1 failed verification, 2 model error (no steady
state, linearisation failure, every sweep cell invalid), 3 config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib.metadata import PackageNotFoundError, version

from . import analysis, checks, optomech
from .config import ConfigError, RunConfig, load_config
from .dynamics import SteadyStateError, UnstableModelError, lyapunov_steady_state
from .model import CascadedParams, ParameterError

EXIT_OK, EXIT_CHECK, EXIT_MODEL, EXIT_CONFIG = 0, 1, 2, 3
SWEEP_COLUMNS = ("delta", "m3", "n1", "n2", "m1", "m2", "dn1", "dn2", "valid")


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0.1.0"


class ModelError(RuntimeError):
    pass


def fmt(x) -> str:
    """12 significant digits, correctly rounded; negative zero prints as 0."""
    if isinstance(x, bool):
        return "1" if x else "0"
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == 0:
        return "0"
    return f"{x:.12g}"


def _json_number(x):
    s = fmt(x)
    return None if s == "nan" else json.loads(s)


def _params_dict(p) -> dict:
    out = {}
    for key, value in vars(p).items():
        if isinstance(value, complex):
            out[key] = {"re": _json_number(value.real), "im": _json_number(value.imag)}
        elif hasattr(value, "__dataclass_fields__"):
            out[key] = _params_dict(value)
        else:
            out[key] = _json_number(value)
    return out


def _emit_pairs(pairs, output: str, out, metadata=None) -> None:
    if output == "json":
        doc = {"metadata": metadata or {}, "values": {k: _json_number(v) for k, v in pairs}}
        out.write(json.dumps(doc, indent=2) + "\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("quantity", "value"))
    for key, value in pairs:
        writer.writerow((key, fmt(value)))


def cascaded_template(cfg: RunConfig) -> CascadedParams:
    if isinstance(cfg.params, CascadedParams):
        return cfg.params
    return optomech.map_to_cascaded(optomech.linearize(cfg.params))


def _eigen_pairs(eigenvalues):
    pairs = []
    for k, ev in enumerate(eigenvalues, start=1):
        pairs += [(f"eig{k}_re", ev.real), (f"eig{k}_im", ev.imag)]
    return pairs


def run_steady(cfg: RunConfig, output: str, out) -> int:
    if cfg.sweep is not None:
        raise ConfigError("steady takes no [sweep] section; use the sweep subcommand", "sweep")
    pairs = []
    if isinstance(cfg.params, CascadedParams):
        p = cfg.params
    else:
        lin = optomech.linearize(cfg.params)
        p = optomech.map_to_cascaded(lin)
        rwa = lyapunov_steady_state(optomech.build_three_mode_rwa_drift(lin)).occupancies
        reduced = lyapunov_steady_state(optomech.adiabatic_eliminate(lin, cfg.omega_eval)).occupancies
        pairs += [
            ("rwa_n1", rwa[0]), ("rwa_n2", rwa[1]), ("rwa_nm", rwa[2]),
            ("reduced_n1", reduced[0]), ("reduced_n2", reduced[1]),
        ]
    r = analysis.routing_report(p)
    pairs = [
        ("n1", r.n1), ("n2", r.n2), ("m1", r.m1), ("m2", r.m2), ("m3", r.m3),
        ("dn1", r.dn1), ("dn2", r.dn2),
    ] + pairs + _eigen_pairs(r.eigenvalues)
    _emit_pairs(pairs, output, out, {"system": cfg.system, "version": tool_version()})
    return EXIT_OK


def run_sweep(cfg: RunConfig, output: str, out, jobs: int = 1) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep needs a [sweep] section", "sweep")
    template = cascaded_template(cfg)
    grid = analysis.sweep_grid(template, cfg.sweep.delta.values(), cfg.sweep.m3.values(), jobs=jobs)
    records = []
    for cell in grid.rows():
        r = cell.report
        records.append((cell.delta, cell.m3, r.n1, r.n2, r.m1, r.m2, r.dn1, r.dn2, cell.valid))
    if output == "json":
        doc = {
            "metadata": {
                "tool": "thermal-routing",
                "version": tool_version(),
                "system": cfg.system,
                "template": _params_dict(template),
                "targets": {"m1": _json_number(grid.targets[0]), "m2": _json_number(grid.targets[1])},
            },
            "records": [
                {k: (bool(v) if k == "valid" else _json_number(v)) for k, v in zip(SWEEP_COLUMNS, rec)}
                for rec in records
            ],
        }
        out.write(json.dumps(doc, indent=1) + "\n")
    else:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for rec in records:
            writer.writerow(tuple(fmt(v) for v in rec))
    if grid.n_valid == 0:
        raise ModelError("every sweep cell is invalid (negative private-bath occupancy required)")
    return EXIT_OK


def run_map(cfg: RunConfig, output: str, out) -> int:
    if isinstance(cfg.params, CascadedParams):
        raise ConfigError("map needs an optomech-linearized or optomech-full section", cfg.system)
    pairs = []
    if cfg.system == "optomech-full":
        css = optomech.classical_steady_state(cfg.params)
        pairs += [
            ("alpha1_re", css.alpha1.real), ("alpha1_im", css.alpha1.imag),
            ("alpha2_re", css.alpha2.real), ("alpha2_im", css.alpha2.imag),
            ("beta_re", css.beta.real), ("beta_im", css.beta.imag),
            ("residual", css.residual),
        ]
    lin = optomech.linearize(cfg.params)
    p = optomech.map_to_cascaded(lin)
    F = complex(p.F)
    pairs += [
        ("G1", lin.G1), ("G2", lin.G2), ("phi", p.phi),
        ("omega1", p.omega1), ("omega2", p.omega2),
        ("gamma1", p.gamma1), ("gamma2", p.gamma2),
        ("kappa1", p.kappa1), ("kappa2", p.kappa2),
        ("F_re", F.real), ("F_im", F.imag), ("F_abs", abs(F)),
        ("nbar1", p.nbar1), ("nbar2", p.nbar2), ("nbar3", p.nbar3),
        ("elimination_ratio", optomech.elimination_ratio(lin, cfg.omega_eval)),
    ]
    _emit_pairs(pairs, output, out, {"system": cfg.system, "version": tool_version()})
    return EXIT_OK


def run_verify(out, keys=None) -> int:
    results = checks.run_checks(keys)
    for r in results:
        out.write(r.line() + "\n")
    failed = [r.key for r in results if not r.passed]
    if failed:
        out.write(f"FAILED: {', '.join(failed)}\n")
        return EXIT_CHECK
    out.write(f"all {len(results)} checks passed\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermal-routing",
        description="Steady-state thermal occupancies and noise routing in cascaded networks.",
    )
    parser.add_argument("--version", action="version", version=tool_version())
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", required=needs_config, help="run configuration file")
        p.add_argument("--output", choices=("csv", "json"), help="output format (default: from config, else csv)")
        p.add_argument("--omega-eval", type=float, help="evaluation frequency for mechanical elimination")
        p.add_argument("--out", help="write to this file instead of standard output")

    common(sub.add_parser("steady", help="steady occupancies and routing for one parameter point"))
    sweep = sub.add_parser("sweep", help="routing over a detuning / shared-bath grid")
    common(sweep)
    sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    common(sub.add_parser("map", help="map optomechanical parameters onto the cascaded model"))
    verify = sub.add_parser("verify", help="run the built-in acceptance checks")
    verify.add_argument("--check", action="append", choices=sorted(checks.CHECKS), help="run only these checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        return run_verify(sys.stdout, args.check)

    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.omega_eval is not None:
        cfg = RunConfig(cfg.system, cfg.params, cfg.sweep, cfg.output, args.omega_eval)
    output = args.output or cfg.output

    buf = io.StringIO()
    code = EXIT_OK
    try:
        if args.command == "steady":
            code = run_steady(cfg, output, buf)
        elif args.command == "sweep":
            code = run_sweep(cfg, output, buf, jobs=max(1, args.jobs))
        else:
            code = run_map(cfg, output, buf)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnstableModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        for k, ev in enumerate(exc.eigenvalues if exc.eigenvalues is not None else [], start=1):
            print(f"  eig{k} = {fmt(ev.real)} {'+' if ev.imag >= 0 else '-'} {fmt(abs(ev.imag))}i", file=sys.stderr)
        return EXIT_MODEL
    except ModelError as exc:
        # the grid is still written so invalid cells can be inspected
        print(f"model error: {exc}", file=sys.stderr)
        code = EXIT_MODEL
    except (SteadyStateError, optomech.LinearizationError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL

    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
