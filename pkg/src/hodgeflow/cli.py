"""Command line entry point ``ohfl``.

Every subcommand takes its parameters from built-in defaults, then from an
optional JSON config file (``--config``), then from explicit flags.  The
resolved values are written into the report, so a run can be reproduced
from its report alone.  Exit codes: 0 success, 1 a check failed, 2 usage,
config or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


from . import besov, commutator, euler2d, heat, io, reports, verify
from .errors import CFLViolation, ConfigParseError, FormatError, HodgeflowError
from .fields import GeneratorSpec
from .heat import HeatSchedule
from .torus import TorusGrid

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def parse_number(text):
    """Float, fraction ``a/b`` or power ``2^x``."""
    text = str(text).strip()
    if "^" in text:
        base, exp = text.split("^", 1)
        return float(base) ** besov.eval_fraction(exp)
    return besov.eval_fraction(text)


def parse_schedule(value):
    """``"s_max,ratio,s_min"`` (or a dict / list with those entries) to a HeatSchedule."""
    if isinstance(value, HeatSchedule):
        return value
    if isinstance(value, dict):
        return HeatSchedule(**{k: parse_number(v) for k, v in value.items()})
    parts = value.split(",") if isinstance(value, str) else list(value)
    if len(parts) != 3:
        raise ValueError("schedule must be 's_max,ratio,s_min'")
    return HeatSchedule(*(parse_number(p) for p in parts))


def _schedule_text(s):
    return f"{s.s_max!r},{s.ratio!r},{s.s_min!r}"


def parse_vector(text):
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    return tuple(int(x) for x in str(text).split(","))


def parse_int_list(text):
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    return tuple(int(x) for x in str(text).split(",") if x.strip())


# option name -> (parser, default, help); a default of None means "not set"
_GEN_OPTS = {
    "kind": (str, "lacunary", "single_mode | lacunary | random_slope | taylor_green | sphere_mode | sphere_random"),
    "backend": (str, "torus", "torus or sphere"),
    "d": (int, 2, "torus dimension"),
    "N": (int, 256, "torus points per axis"),
    "L_max": (int, 16, "sphere band limit"),
    "alpha": (besov.eval_fraction, 0.5, "lacunary exponent"),
    "J": (int, 6, "number of lacunary shells"),
    "seed": (int, 0, "random seed"),
    "gamma": (float, 1.5, "spectral slope of random fields"),
    "k": (parse_vector, (1, 0), "wavevector of a single mode, e.g. 1,0"),
    "l": (int, 1, "sphere degree"),
    "m": (int, 0, "sphere order"),
}

_FIELD_INPUT = {"field": (str, None, "input OHFL field file (otherwise generated from the generator options)")}

SUBCOMMANDS = {
    "gen": ("generate a field and write it as OHFL", {**_GEN_OPTS, "out": (str, "field.ohfl", "output field file")}),
    "smooth": (
        "apply the heat flow to a field",
        {**_FIELD_INPUT, **_GEN_OPTS, "s": (parse_number, 0.1, "heat time"), "out": (str, None, "output field file")},
    ),
    "besov": (
        "heat-semigroup Besov norm and U-curve",
        {
            **_FIELD_INPUT,
            **_GEN_OPTS,
            "spec": (str, "0.5,3,inf", "alpha,p,r with r a number, inf or cN"),
            "schedule": (parse_schedule, besov.BESOV_SCHEDULE, "s_max,ratio,s_min"),
        },
    ),
    "besov-equiv": (
        "heat vs Littlewood-Paley norm ratios over the standard field set",
        {
            "alpha": (besov.eval_fraction, 0.5, "smoothness"),
            "p": (float, 3.0, "integrability"),
            "r": (str, "inf", "summability"),
            "N": (int, 128, "torus points per axis"),
            "band": (float, 4.0, "largest allowed max/min ratio"),
            "out": (str, None, "CSV output for the ratio table"),
        },
    ),
    "commutator": (
        "commutator, Duhamel decomposition and flux at one heat time",
        {
            **_FIELD_INPUT,
            **_GEN_OPTS,
            "s": (parse_number, 0.1, "heat time"),
            "quad_nodes": (int, 64, "graded Duhamel nodes"),
            "tolerance": (float, 1e-4, "largest allowed reconstruction residual"),
        },
    ),
    "flux-decay": (
        "fit the small-s decay of the energy flux",
        {
            **_FIELD_INPUT,
            **_GEN_OPTS,
            "generator": (str, "lacunary", "generator kind when no field is given"),
            "schedule": (parse_schedule, commutator.FLUX_SCHEDULE, "s_max,ratio,s_min"),
            "width": (float, 1.0, "fit window in decades"),
            "decompose": (bool, False, "compute W1..W3 norms by Duhamel quadrature"),
            "out": (str, None, "CSV output (s, flux, W1_norm, W2_norm, W3_norm)"),
        },
    ),
    "euler-run": (
        "integrate 2D Euler and write a trajectory",
        {
            "n": (int, 128, "points per axis"),
            "dt": (float, 1e-3, "time step"),
            "T": (float, 2.0, "final time"),
            "stride": (int, 10, "steps between snapshots"),
            "init": (str, "random:0", "taylor-green or random:SEED"),
            "out": (str, "traj.ohflt", "trajectory file"),
            "drift_tolerance": (float, 1e-6, "largest allowed relative energy drift"),
        },
    ),
    "euler-verify": (
        "smoothed energy identity and weak-form residual of a trajectory",
        {
            "trajectory": (str, None, "trajectory file"),
            "s_schedule": (parse_schedule, euler2d.EULER_SCHEDULE, "s_max,ratio,s_min"),
            "identity_tolerance": (float, 1e-3, "largest allowed relative LHS/RHS mismatch"),
            "pressure_tolerance": (float, 1e-10, "largest allowed pressure term"),
            "weak_tolerance": (float, 1e-5, "largest allowed weak-form residual"),
        },
    ),
    "verify": (
        "run the verification suites",
        {
            "criteria": (parse_int_list, (1, 2, 3, 4, 5, 6, 7, 8, 9), "comma separated criterion numbers"),
            "seed": (int, 0, "base seed"),
            "threshold": (str, None, "override a check threshold, NAME=VALUE (repeatable)"),
        },
    ),
}

_POSITIONAL = {"euler-verify": "trajectory"}


def build_parser():
    parser = argparse.ArgumentParser(prog="ohfl", description="Heat-flow smoothing, Besov norms, commutators and Euler runs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (help_text, opts) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="JSON config file; flags override its entries")
        p.add_argument("--report", help="write the JSON report here instead of stdout")
        for key, (conv, default, h) in opts.items():
            shown = _schedule_text(default) if isinstance(default, HeatSchedule) else default
            if _POSITIONAL.get(name) == key:
                p.add_argument(key, nargs="?", help=h)
                continue
            flag = "--" + key.replace("_", "-")
            if conv is bool:
                p.add_argument(flag, dest=key, action="store_const", const=True, default=None, help=h)
            elif key == "threshold":
                p.add_argument(flag, dest=key, action="append", default=None, help=h)
            else:
                p.add_argument(flag, dest=key, default=None, help=f"{h} (default: {shown})")
    return parser


def _key_line(text, key):
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def load_config(path, command):
    """Read a JSON config; raises ConfigParseError with line/field information."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigParseError("config must be a JSON object", line=1)
    opts = SUBCOMMANDS[command][1]
    out = {}
    for key, value in data.items():
        if key == "subcommand":
            if value != command:
                raise ConfigParseError(f"config is for {value!r}, not {command!r}", line=_key_line(text, key), field=key)
            continue
        norm = key.replace("-", "_")
        if norm not in opts:
            raise ConfigParseError("unknown option", line=_key_line(text, key), field=key)
        if norm == "threshold" and isinstance(value, dict):
            out[norm] = [f"{k}={v}" for k, v in value.items()]
            continue
        try:
            out[norm] = _convert(opts[norm][0], value)
        except (TypeError, ValueError) as exc:
            raise ConfigParseError(f"bad value {value!r}: {exc}", line=_key_line(text, key), field=key) from None
    return out


def _convert(conv, value):
    if conv is bool:
        if not isinstance(value, bool):
            raise TypeError("expected true or false")
        return value
    if conv in (int, float) and isinstance(value, bool):
        raise TypeError("expected a number")
    if conv is int and isinstance(value, float) and not value.is_integer():
        raise TypeError("expected an integer")
    if conv is str and not isinstance(value, str):
        raise TypeError("expected a string")
    return conv(value)


def resolve(command, args):
    """Merge defaults, config file and flags into one dict of parameters."""
    opts = SUBCOMMANDS[command][1]
    params = {k: v[1] for k, v in opts.items()}
    if args.config:
        params.update(load_config(args.config, command))
    for key, (conv, _, _) in opts.items():
        raw = getattr(args, key, None)
        if raw is None:
            continue
        if key == "threshold":
            params[key] = (params.get(key) or []) + raw
            continue
        try:
            params[key] = raw if conv is bool else conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigParseError(f"bad value {raw!r}: {exc}", field=key) from None
    return params


def _printable(params):
    out = {}
    for k, v in params.items():
        out[k] = _schedule_text(v) if isinstance(v, HeatSchedule) else v
    return out


def _generator(params, kind=None):
    return GeneratorSpec(
        kind=kind or params["kind"],
        backend=params["backend"],
        d=params["d"],
        N=params["N"],
        L_max=params["L_max"],
        alpha=params["alpha"],
        J=params["J"],
        seed=params["seed"],
        gamma=params["gamma"],
        k=tuple(params["k"]),
        l=params["l"],
        m=params["m"],
    )


def _field(params, kind=None):
    if params.get("field"):
        return io.read_field(params["field"])
    return _generator(params, kind).build()


def _emit(report, args):
    text = reports.dumps(report)
    if args.report:
        reports.write_json(args.report, report)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------------
# subcommands; each returns (results, passed)


def cmd_gen(p):
    u = _generator(p).build()
    io.write_field(p["out"], u)
    return {"out": p["out"], "backend": heat.backend_name(u), "l2_norm": heat.l2_norm(u)}, True


def cmd_smooth(p):
    u = _field(p)
    U = heat.apply_heat(u, p["s"])
    if p["out"]:
        io.write_field(p["out"], U)
    res = {
        "s": p["s"],
        "l2_before": heat.l2_norm(u),
        "l2_after": heat.l2_norm(U),
        "contraction": heat.l2_norm(U) / heat.l2_norm(u) if heat.l2_norm(u) > 0 else 1.0,
        "divergence_invariance_residual": heat.divergence_invariance_residual(u, p["s"]),
        "out": p["out"],
    }
    return res, res["contraction"] <= 1 + 1e-12


def cmd_besov(p):
    u = _field(p)
    spec = besov.BesovSpec.parse(p["spec"])
    sched = p["schedule"]
    if spec.r == "cN":
        norm, curve = besov.heat_besov_norm(u, spec, sched)
        flags = {"vanishing": curve.vanishing, "tail_slope": curve.tail_slope}
    else:
        norm = besov.heat_besov_norm(u, spec, sched)
        curve = besov.u_curve(u, spec.alpha, spec.p, sched)
        flags = {}
    return {"norm": norm, "spec": p["spec"], "curve": curve.to_dict(), "flags": flags}, True


def cmd_besov_equiv(p):
    fields = verify.standard_field_set(p["N"])
    r = p["r"] if p["r"] in ("inf", "cN") else float(p["r"])
    rep = besov.equivalence_report(fields, p["alpha"], p["p"], r)
    rows = rep.rows()
    if p["out"]:
        reports.write_csv(p["out"], rows, reports.EQUIV_COLUMNS, "besov-equiv")
    return {"rows": rows, "band": rep.band, "constant": rep.constant, "band_limit": p["band"]}, rep.band <= p["band"]


def cmd_commutator(p):
    u = _field(p)
    s = p["s"]
    dec = commutator.duhamel_reconstruct(u, s, commutator.GradedMesh(p["quad_nodes"]))
    res = dec.to_dict()
    res["flux"] = commutator.flux(u, s)
    res["tolerance"] = p["tolerance"]
    return res, dec.residual < p["tolerance"]


def cmd_flux_decay(p):
    u = _field(p, kind=p["generator"])
    rep = commutator.flux_decay_fit(u, p["alpha"], p["schedule"], p["width"], p["decompose"])
    if p["out"]:
        reports.write_csv(p["out"], rep.rows(), reports.FLUX_COLUMNS, "flux-decay")
    return {"summary": rep.summary(), "rows": rep.rows()}, rep.passed


def _initial(p, grid):
    init = p["init"]
    if init in ("taylor-green", "taylor_green"):
        from .fields import taylor_green

        return taylor_green(grid)
    if init.startswith("random"):
        seed = int(init.split(":", 1)[1]) if ":" in init else 0
        return euler2d.random_initial(grid, seed=seed)
    raise ConfigParseError(f"unknown initial condition {init!r}", field="init")


def cmd_euler_run(p):
    grid = TorusGrid(2, p["n"])
    try:
        traj = euler2d.run(_initial(p, grid), p["T"], p["dt"], p["stride"])
    except CFLViolation as exc:
        # keep what was computed; the report marks the trajectory invalid
        traj = exc.partial
    io.write_trajectory(p["out"], traj)
    res = traj.metadata()
    res.update(
        {
            "out": p["out"],
            "energy_initial": float(traj.energy[0]),
            "energy_drift": traj.energy_drift(),
            "max_divergence": traj.max_divergence(),
        }
    )
    return res, traj.valid and traj.energy_drift() < p["drift_tolerance"]


def cmd_euler_verify(p):
    if not p["trajectory"]:
        raise ConfigParseError("a trajectory file is required", field="trajectory")
    traj = io.read_trajectory(p["trajectory"])
    if not traj.valid:
        raise FormatError(f"{p['trajectory']} holds a run cut short by a CFL violation")
    rep = euler2d.smoothed_energy_identity_report(traj, p["s_schedule"])
    weak = euler2d.weak_form_residual(traj)
    res = rep.to_dict()
    res["weak_form_residual"] = weak
    ok = (
        rep.max_relative() < p["identity_tolerance"]
        and rep.max_pressure() < p["pressure_tolerance"]
        and weak < p["weak_tolerance"]
    )
    return res, ok


def _thresholds(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigParseError(f"expected NAME=VALUE, got {item!r}", field="threshold")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = parse_number(v)
        except ValueError:
            raise ConfigParseError(f"bad threshold value {v!r}", field="threshold") from None
    return out


def cmd_verify(p):
    cfg = verify.VerifyConfig(criteria=tuple(p["criteria"]), seed=p["seed"], thresholds=_thresholds(p["threshold"]))
    unknown = [n for n in cfg.criteria if n not in verify.CRITERIA]
    if unknown:
        raise ConfigParseError(f"unknown criteria {unknown}", field="criteria")

    def progress(r):
        print(r.line(), file=sys.stderr)

    ok, results = verify.verify_all(cfg, progress)
    return {"config": cfg.to_dict(), "criteria": [r.to_dict() for r in results], "all_pass": ok}, ok


COMMANDS = {
    "gen": cmd_gen,
    "smooth": cmd_smooth,
    "besov": cmd_besov,
    "besov-equiv": cmd_besov_equiv,
    "commutator": cmd_commutator,
    "flux-decay": cmd_flux_decay,
    "euler-run": cmd_euler_run,
    "euler-verify": cmd_euler_verify,
    "verify": cmd_verify,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        params = resolve(args.command, args)
        results, ok = COMMANDS[args.command](params)
    except HodgeflowError as exc:
        print(f"ohfl {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"ohfl {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = reports.make_report(args.command, results, _printable(params))
    report["pass"] = bool(ok)
    _emit(report, args)
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
