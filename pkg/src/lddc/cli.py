"""Command-line entry point: ``lddc <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io
from .certify import (
    certify_controllers,
    projection_stability_test,
    reconstruct_closed_loop,
    step_response,
)
from .errors import ConfigError, LDDCError, ValidationError
from .loewner import DescriptorSystem, build_pencil, minimal_order, partition_points, realize
from .pipeline import (
    EXIT_ANALYSIS,
    EXIT_OK,
    EXIT_REALIZATION,
    PipelineConfig,
    analysis_report,
    build_plant,
    load_config,
    make_grid,
    reference_init,
    run_analysis,
    run_pipeline,
)
from .plants import RationalLTI, sample_response
from .refmodel import ideal_controller, make_achievable
from .unstable import InstabilityEstimate

EXIT_USAGE = 64
EXIT_NOINPUT = 66

log = logging.getLogger("lddc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _orders(text):
    out = []
    for part in str(text).replace(",", " ").split():
        try:
            v = int(part)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid order {part!r}") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"orders must be positive, got {v}")
        out.append(v)
    return out


def _band(text):
    if text in ("auto", "off"):
        return text
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("bandpass must be 'auto', 'off' or 'w_lo,w_hi'") from None
    return [lo, hi]


def _global_options(parser, suppress):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", type=Path, default=d, help="TOML pipeline config")
    parser.add_argument("--out", type=Path, default=d, help="output directory")
    parser.add_argument("--verbose", "-v", action="store_true",
                        default=argparse.SUPPRESS if suppress else False)


def _analysis_options(p):
    p.add_argument("--k-basis", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--drop-ratio", type=float)
    p.add_argument("--bandpass", type=_band)


def _reference_options(p):
    p.add_argument("--tau", type=float, help="first-order reference time constant (s)")
    p.add_argument("--omega0", type=float, help="second-order reference natural frequency (rad/s)")
    p.add_argument("--xi", type=float, help="second-order reference damping")


def build_parser():
    parser = _Parser(prog="lddc", description="Controller design from frequency-response samples.")
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("sample", help="sample the configured plant to a response CSV")
    _global_options(p, suppress=True)
    p.add_argument("--w-min", type=float)
    p.add_argument("--w-max", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--spacing", choices=("log", "linear"))

    p = sub.add_parser("analyze", help="estimate RHP poles and zeros from a response CSV")
    _global_options(p, suppress=True)
    p.add_argument("--input", type=Path, help="plant response CSV")
    _analysis_options(p)

    p = sub.add_parser("design", help="ideal controller and reduced controllers")
    _global_options(p, suppress=True)
    p.add_argument("--input", type=Path, help="plant response CSV")
    p.add_argument("--analysis", type=Path, help="analysis.json")
    p.add_argument("--orders", type=_orders, nargs="+")
    p.add_argument("--tol", type=float)
    _reference_options(p)

    p = sub.add_parser("certify", help="small-gain certificate for controllers")
    _global_options(p, suppress=True)
    p.add_argument("--input", type=Path, help="plant response CSV")
    p.add_argument("--kstar", type=Path, help="ideal-controller response CSV")
    p.add_argument("--analysis", type=Path, help="analysis.json")
    p.add_argument("--controllers", type=Path, nargs="+", help="controller JSON files")
    p.add_argument("--orders", type=_orders, nargs="+")
    p.add_argument("--eps", type=float)
    _reference_options(p)

    p = sub.add_parser("simulate", help="closed-loop step response with a rational plant")
    _global_options(p, suppress=True)
    p.add_argument("--controller", type=Path, required=True)
    p.add_argument("--num", type=float, nargs="+", help="plant numerator (overrides config)")
    p.add_argument("--den", type=float, nargs="+", help="plant denominator (overrides config)")
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--output", type=Path)

    p = sub.add_parser("pipeline", help="run every stage from one config")
    _global_options(p, suppress=True)
    p.add_argument("--orders", type=_orders, nargs="+")
    return parser


def _flatten_orders(value):
    if value is None:
        return None
    flat = sorted({o for group in value for o in group})
    if not flat:
        raise UsageError("orders list is empty")
    return flat


def _config(args, required=False):
    if args.config is None:
        if required:
            raise UsageError("--config is required for this command")
        return None
    return load_config(args.config)


def _out(args, cfg):
    if args.out is not None:
        out = args.out
    elif cfg is not None:
        out = cfg.base_dir / cfg.out_dir if not cfg.out_dir.is_absolute() else cfg.out_dir
    else:
        out = Path("lddc_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _default_cfg():
    return PipelineConfig(plant={"kind": "csv"})


def _apply_analysis_overrides(cfg, args):
    for key in ("k_basis", "alpha", "drop_ratio", "bandpass"):
        v = getattr(args, key, None)
        if v is not None:
            cfg.analysis[key] = v


def _apply_reference_overrides(cfg, args):
    if args.omega0 is not None:
        cfg.reference = {"order": 2, "omega0": args.omega0, "xi": args.xi if args.xi is not None else 1.0}
    elif args.tau is not None:
        cfg.reference = {"order": 1, "tau": args.tau}


def cmd_sample(args):
    cfg = _config(args, required=True)
    if cfg.plant["kind"] == "csv":
        raise UsageError("sample needs a model plant, not kind = 'csv'")
    for key, attr in (("w_min", "w_min"), ("w_max", "w_max"), ("n", "n"), ("spacing", "spacing")):
        v = getattr(args, attr)
        if v is not None:
            cfg.grid[key] = v
    data = sample_response(build_plant(cfg.plant), make_grid(cfg.grid))
    path = io.write_response_csv(_out(args, cfg) / "plant_response.csv", data)
    log.info("wrote %s (%d rows)", path, len(data))
    return EXIT_OK


def _input(args, out, name="plant_response.csv"):
    return args.input if args.input is not None else out / name


def cmd_analyze(args):
    cfg = _config(args) or _default_cfg()
    _apply_analysis_overrides(cfg, args)
    out = _out(args, cfg)
    data = io.read_response_csv(_input(args, out))
    errors = {}
    try:
        est, info = run_analysis(data, cfg)
    except LDDCError as exc:
        errors["analysis"] = f"{type(exc).__name__}: {exc}"
        io.write_json(out / "analysis.json", analysis_report(None, {}, errors))
        log.error("analysis failed: %s", exc)
        return EXIT_ANALYSIS
    alpha = cfg.alpha if cfg.alpha != "auto" else float(np.sqrt(data.omegas[0] * data.omegas[-1]))
    io.write_json(out / "analysis.json", analysis_report(est, info, errors, {"basis_pole": alpha}))
    io.write_columns_csv(out / "hankel_svals.csv", ("index", "sigma"),
                         (np.arange(1, est.hankel_svals.size + 1), est.hankel_svals))
    log.info("n_p = %d, n_z = %d", est.n_p, est.n_z)
    return EXIT_OK


def _reference(args, cfg, out):
    _apply_reference_overrides(cfg, args)
    path = args.analysis if args.analysis is not None else out / "analysis.json"
    est = InstabilityEstimate.from_dict(io.read_json(path))
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        return make_achievable(reference_init(cfg.reference), est), est


def cmd_design(args):
    cfg = _config(args) or _default_cfg()
    out = _out(args, cfg)
    orders = _flatten_orders(args.orders) or cfg.orders
    tol = args.tol if args.tol is not None else cfg.tol
    data = io.read_response_csv(_input(args, out))
    try:
        m, _ = _reference(args, cfg, out)
        kstar = ideal_controller(data, m)
    except LDDCError as exc:
        log.error("ideal controller failed: %s", exc)
        return EXIT_ANALYSIS
    io.write_response_csv(out / "kstar_response.csv", kstar)
    status = EXIT_OK
    try:
        pencil = build_pencil(partition_points(kstar))
    except LDDCError as exc:
        log.error("pencil construction failed: %s", exc)
        return EXIT_REALIZATION
    k = pencil.svals_L.size
    io.write_columns_csv(out / "loewner_svals.csv", ("index", "sigma_L", "sigma_stacked", "sigma_concat"),
                         (np.arange(1, k + 1), pencil.svals_L, pencil.svals_stacked[:k],
                          pencil.svals_concat[:k]))
    log.info("numerical rank of the Loewner matrix: %d", minimal_order(pencil, tol))
    for r in orders:
        try:
            ctrl = realize(pencil, r, tol)
        except LDDCError as exc:
            log.error("order %d: %s", r, exc)
            status = EXIT_REALIZATION
            continue
        io.write_json(out / f"controller_{r}.json", ctrl.to_dict())
        (out / f"controller_{r}.zpk.txt").write_text(ctrl.zpk_text(), encoding="utf-8")
    return status


def cmd_certify(args):
    cfg = _config(args) or _default_cfg()
    out = _out(args, cfg)
    if args.eps is not None:
        cfg.eps = args.eps
    orders = _flatten_orders(args.orders)
    data = io.read_response_csv(_input(args, out))
    kstar = io.read_response_csv(args.kstar if args.kstar is not None else out / "kstar_response.csv")
    if not np.array_equal(kstar.omegas, data.omegas):
        raise ValidationError("plant and K* grids differ")
    m, est = _reference(args, cfg, out)
    controllers = {}
    status = EXIT_OK
    if args.controllers:
        for path in args.controllers:
            ctrl = DescriptorSystem.from_dict(io.read_json(path))
            controllers[ctrl.order] = ctrl
    else:
        orders = orders or cfg.orders
        pencil = build_pencil(partition_points(kstar))
        for r in orders:
            try:
                controllers[r] = realize(pencil, r, cfg.tol)
            except LDDCError as exc:
                log.error("order %d: %s", r, exc)
                status = EXIT_REALIZATION
    if not controllers:
        return EXIT_REALIZATION
    cert = certify_controllers(controllers, kstar, data, m)
    doc = cert.to_dict()
    for entry in doc["orders"]:
        r = entry["order"]
        try:
            h = reconstruct_closed_loop(data, controllers[r])
            v = projection_stability_test(h, est, controllers[r], cfg.eps, cfg.cancel_distance,
                                          k_basis=min(cfg.k_basis, (len(h) - 1) // 2))
            entry["projection_test"] = {"verdict": v.verdict, "antistable_fraction": v.antistable_fraction}
        except LDDCError as exc:
            entry["projection_test"] = {"verdict": None, "error": str(exc)}
    io.write_json(out / "certificate.json", doc)
    log.info("gamma_tilde = %.6g, max certified order = %s", cert.gamma_tilde, cert.max_certified_order)
    return status


def cmd_simulate(args):
    cfg = _config(args)
    if args.num is not None or args.den is not None:
        if args.num is None or args.den is None:
            raise UsageError("--num and --den go together")
        plant = RationalLTI(args.num, args.den)
    elif cfg is not None and cfg.plant["kind"] == "rational":
        plant = build_plant(cfg.plant)
    else:
        raise UsageError("simulate needs a rational plant (--num/--den or kind = 'rational')")
    ctrl = DescriptorSystem.from_dict(io.read_json(args.controller))
    t, y = step_response(plant, ctrl, args.t_end, args.dt)
    path = args.output if args.output is not None else _out(args, cfg) / f"step_{ctrl.order}.csv"
    io.write_step_csv(path, t, y)
    log.info("wrote %s", path)
    return EXIT_OK


def cmd_pipeline(args):
    cfg = _config(args, required=True)
    orders = _flatten_orders(args.orders)
    if orders:
        cfg.orders = orders
    res = run_pipeline(cfg, _out(args, cfg))
    for stage, msg in res.errors.items():
        log.error("%s: %s", stage, msg)
    if res.certificate is not None:
        log.info("certified orders: %s", res.certificate.certified_orders)
    return res.exit_code


COMMANDS = {
    "sample": cmd_sample,
    "analyze": cmd_analyze,
    "design": cmd_design,
    "certify": cmd_certify,
    "simulate": cmd_simulate,
    "pipeline": cmd_pipeline,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    if not args.verbose:
        warnings.simplefilter("ignore")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"lddc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"lddc: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"lddc: cannot read {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_NOINPUT
    except (ValidationError, KeyError, ValueError) as exc:
        print(f"lddc: bad input: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except LDDCError as exc:
        print(f"lddc: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
