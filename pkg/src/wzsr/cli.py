"""Command-line front end: rate sweeps, region optimization and feasibility checks.

Exit codes are shared by every subcommand: 0 success, 2 invalid input,
3 I/O failure, 4 infeasible distortion targets.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from importlib import resources

import numpy as np

from . import dsbs, gaussian, refinability, scsep
from .finite_region import (
    DegradednessError,
    DegradedSource,
    InfeasibleError,
    OptimizerConfig,
    optimize_region,
)
from .probkit import JointPmf

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4

DSBS_COLUMNS = ["D1", "D2", "region", "rate_bits", "lb_bits", "wz_bits", "strict", "generalized"]
GAUSS_COLUMNS = [
    "D1", "D2", "region", "r1_bits", "sumrate_bits", "var_z1", "var_z2", "sr_verdict",
    "strict", "generalized",
]


class CliError(Exception):
    def __init__(self, msg, code=EXIT_INVALID):
        super().__init__(msg)
        self.code = code


def fmt(v):
    """Format a cell: 17 significant digits for floats, lower-case booleans."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(float(v), ".17g")
    return str(v)


def parse_range(text):
    """``a:b:n`` -> n evenly spaced values from a to b (n = 1 gives [a])."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}") from None
    if n < 1 or a > b:
        raise argparse.ArgumentTypeError(f"need n >= 1 and a <= b, got {text!r}")
    return np.linspace(a, b, n) if n > 1 else np.array([a])


def _json_float(v):
    return None if isinstance(v, float) and math.isinf(v) else v


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from exc


def _render(columns, rows, fmt_name, metadata=None):
    if fmt_name == "json":
        doc = {"columns": columns, "rows": [dict(zip(columns, r)) for r in rows]}
        if metadata is not None:
            doc = {"metadata": metadata, **doc}
        return json.dumps(doc, indent=2, default=_json_float) + "\n"
    buf = io.StringIO()
    for k, v in (metadata or {}).items():
        buf.write(f"# {k}={fmt(v)}\n")
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(fmt(v) for v in r) + "\n")
    return buf.getvalue()


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"malformed JSON in {path}: {exc}") from exc


def _grid(args, cfg, key, flag_value):
    if flag_value is not None:
        return flag_value
    spec = cfg.get("grid", {}).get(key)
    if spec is None:
        raise CliError(f"missing grid for {key}; pass --{key.lower()}-range a:b:n")
    lo, hi, steps = spec
    try:
        return parse_range(f"{lo}:{hi}:{steps}")
    except argparse.ArgumentTypeError as exc:
        raise CliError(str(exc)) from None


def _param(args, cfg, name, default=None):
    v = getattr(args, name, None)
    if v is None:
        v = cfg.get("params", {}).get(name, default)
    if v is None:
        raise CliError(f"missing parameter --{name.replace('_', '-')}")
    return float(v)


# -- subcommands -------------------------------------------------------------


def dsbs_rows(p, d1_values, d2_values):
    rows = []
    for D1 in d1_values:
        for D2 in d2_values:
            params = dsbs.DsbsParams(p, float(D1), float(D2))
            hb = dsbs.hb_rate(params)
            verdict = refinability.dsbs_verdict(params, hb=hb)
            rows.append([
                float(D1), float(D2), hb.region, hb.rate, dsbs.hb_lower_bound(params),
                dsbs.wz_rate_binary(p, float(D2)), verdict.strict, verdict.generalized,
            ])
    return rows


def cmd_dsbs_sweep(args):
    cfg = _load_config(args.config)
    p = _param(args, cfg, "p")
    d1 = _grid(args, cfg, "D1", args.d1_range)
    d2 = _grid(args, cfg, "D2", args.d2_range)
    try:
        rows = dsbs_rows(p, d1, d2)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    _emit(_render(DSBS_COLUMNS, rows, args.format), args.out)
    return EXIT_OK


def gauss_rows(base, d1_values, d2_values):
    rows = []
    for D1 in d1_values:
        for D2 in d2_values:
            params = gaussian.GaussParams(base.var_x, base.var_n1, base.var_n2, float(D1), float(D2))
            rep = gaussian.check_sr_gauss(params)
            verdict = refinability.gauss_verdict(params)
            rows.append([
                float(D1), float(D2), rep.region, rep.r1_min, rep.sumrate,
                float(rep.var_z1), float(rep.var_z2), rep.verdict,
                verdict.strict, verdict.generalized,
            ])
    return rows


def cmd_gauss_sweep(args):
    cfg = _load_config(args.config)
    try:
        sx = _param(args, cfg, "var_x")
        s1 = _param(args, cfg, "var_n1")
        s2 = _param(args, cfg, "var_n2")
        d1 = _grid(args, cfg, "D1", args.d1_range)
        d2 = _grid(args, cfg, "D2", args.d2_range)
        # placeholder distortions only carry the variances
        base = gaussian.GaussParams(sx, s1, s2, 1.0, 1.0)
        rows = gauss_rows(base, d1, d2)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    dv = gaussian.derived(base)
    meta = {"var_x": sx, "var_n1": s1, "var_n2": s2,
            "D1_star": dv.d1_star, "D2_star": dv.d2_star, "gamma": dv.gamma}
    _emit(_render(GAUSS_COLUMNS, rows, args.format, metadata=meta), args.out)
    return EXIT_OK


def load_finite_config(path):
    """Parse a finite-optimize config into (source, distortion, D, cards, cfg dict)."""
    if path is None:
        text = resources.files("wzsr").joinpath("data/dsbs_fixture.json").read_text()
        cfg = json.loads(text)
    else:
        cfg = _load_config(path)
    try:
        pmf = JointPmf.from_json(cfg["pmf"])
        distortion = np.asarray(cfg["distortion"], dtype=float)
        D = np.asarray(cfg["D"], dtype=float)
        cards = [int(c) for c in cfg["cards"]]
    except (KeyError, TypeError) as exc:
        raise CliError(f"config is missing or has a malformed field: {exc}") from exc
    except ValueError as exc:
        raise CliError(f"invalid config: {exc}") from exc
    try:
        source = DegradedSource(pmf)
    except DegradednessError as exc:
        raise CliError(f"{exc} (max violation {exc.max_violation:.17g} bits)") from exc
    return source, distortion, D, cards, cfg


def cmd_finite_optimize(args):
    source, distortion, D, cards, cfg = load_finite_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    restarts = args.restarts if args.restarts is not None else int(cfg.get("restarts", 64))
    opt = OptimizerConfig(restarts=restarts, seed=seed)
    try:
        sample = optimize_region(source, distortion, D, cards, opt)
    except InfeasibleError as exc:
        raise CliError(f"infeasible: {exc}", EXIT_INFEASIBLE) from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    text = sample.to_json() + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        _emit(text, args.out)
        print(",".join(fmt(float(v)) for v in sample.cum_rates))
    return EXIT_OK


def _channel_from(spec):
    if isinstance(spec, dict) and "bsc" in spec:
        return scsep.Dmc.bsc(float(spec["bsc"]))
    if isinstance(spec, dict) and "bec" in spec:
        return scsep.Dmc.bec(float(spec["bec"]))
    if isinstance(spec, dict) and "transition" in spec:
        return scsep.Dmc(np.asarray(spec["transition"], dtype=float))
    raise CliError(f"unrecognized channel spec {spec!r}")


def cmd_sc_check(args):
    """Config: {"channels": [{"bsc": q} | {"bec": e} | {"transition": [[...]]}],
    "rhos": [...], "sumrates": [...]} or, instead of sumrates, a DSBS
    reference {"dsbs": {"p": .., "D1": .., "D2": ..}}."""
    cfg = _load_config(args.config)
    try:
        caps = [scsep.channel_capacity(_channel_from(c)) for c in cfg["channels"]]
        if "sumrates" in cfg:
            req = cfg["sumrates"]
        elif "dsbs" in cfg:
            params = dsbs.DsbsParams(**cfg["dsbs"])
            req = [dsbs._first_stage_rate(params.D1), dsbs.hb_rate(params).rate]
        else:
            raise CliError("config needs 'sumrates' or a 'dsbs' reference")
        inst = scsep.ScInstance(caps, cfg["rhos"], req)
    except KeyError as exc:
        raise CliError(f"config is missing field {exc}") from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    _emit(json.dumps(scsep.check_sc_achievable(inst).to_dict(), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_refinability_report(args):
    cfg = _load_config(args.config)
    model = args.model or cfg.get("model", "dsbs")
    d1 = _grid(args, cfg, "D1", args.d1_range)
    d2 = _grid(args, cfg, "D2", args.d2_range)
    points = []
    try:
        if model == "dsbs":
            p = _param(args, cfg, "p")
            for D1 in d1:
                for D2 in d2:
                    v = refinability.dsbs_verdict(dsbs.DsbsParams(p, float(D1), float(D2)))
                    points.append({"D1": float(D1), "D2": float(D2), **v.to_dict()})
        elif model == "gaussian":
            sx, s1, s2 = (_param(args, cfg, k) for k in ("var_x", "var_n1", "var_n2"))
            for D1 in d1:
                for D2 in d2:
                    v = refinability.gauss_verdict(gaussian.GaussParams(sx, s1, s2, float(D1), float(D2)))
                    points.append({"D1": float(D1), "D2": float(D2), **v.to_dict()})
        else:
            raise CliError(f"unknown model {model!r}")
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    doc = {"model": model, "points": points,
           "all_consistent": all(pt["consistent"] for pt in points)}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="wzsr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, grid=True):
        sp.add_argument("--out", help="output path (default: standard output)")
        sp.add_argument("--config", help="JSON config file")
        if grid:
            sp.add_argument("--d1-range", type=parse_range, help="a:b:n grid for D1")
            sp.add_argument("--d2-range", type=parse_range, help="a:b:n grid for D2")
            sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("dsbs-sweep", help="binary source Heegard-Berger sweep")
    sp.add_argument("--p", type=float)
    common(sp)
    sp.set_defaults(func=cmd_dsbs_sweep)

    sp = sub.add_parser("gauss-sweep", help="Gaussian source sweep")
    for name in ("var-x", "var-n1", "var-n2"):
        sp.add_argument(f"--{name}", type=float)
    common(sp)
    sp.set_defaults(func=cmd_gauss_sweep)

    sp = sub.add_parser("finite-optimize", help="optimize the sum-rate for a finite source")
    common(sp, grid=False)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--restarts", type=int)
    sp.set_defaults(func=cmd_finite_optimize)

    sp = sub.add_parser("sc-check", help="source-channel separation feasibility")
    common(sp, grid=False)
    sp.set_defaults(func=cmd_sc_check)

    sp = sub.add_parser("refinability-report", help="refinability verdicts over a grid")
    sp.add_argument("--model", choices=("dsbs", "gaussian"))
    sp.add_argument("--p", type=float)
    for name in ("var-x", "var-n1", "var-n2"):
        sp.add_argument(f"--{name}", type=float)
    common(sp)
    sp.set_defaults(func=cmd_refinability_report)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"wzsr: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
