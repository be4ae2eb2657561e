"""
Command-line front end
======================

Exit codes: 0 pass, 1 configuration error, 2 model hypothesis violated,
3 statistical/property failure, 4 inconclusive or inapplicable.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .config import (
    PRESETS,
    RunManifest,
    build_sim_config,
    build_triplet,
    config_hash,
    resolve,
)
from .errors import ConfigurationError, ModelHypothesisError, StickyTceError
from .euler import convergence_curve, write_table_manifest
from .experiments import (
    GeneratorEval,
    StickyModel,
    clock_order_study,
    gamma_sweep,
    martingale_test,
    no_solution_demo,
    occupation_study,
    reflection_axioms_study,
    tuned_bump,
)
from .levy import sample_path, validate_triplet
from .tce import TceProblem, check_residual, export_bundle, solve_exact
from .verdicts import EXPLORATORY, FAIL, INAPPLICABLE, INCONCLUSIVE, PASS

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4
VERDICT_EXIT = {PASS: EXIT_OK, EXPLORATORY: EXIT_OK, FAIL: EXIT_FAIL,
                INCONCLUSIVE: EXIT_INCONCLUSIVE, INAPPLICABLE: EXIT_INCONCLUSIVE}
SUITES = ("reflection-axioms", "monotonicity", "martingale", "occupation", "gamma-sweep",
          "no-solution")


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON or TOML config document")
    common.add_argument("--preset", choices=sorted(PRESETS), help="built-in base config")
    common.add_argument("--seed", type=int, help="override the config seed (u64)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    ap = _Parser(prog="sticky-tce", description=__doc__.split("\n")[1])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", parents=[common], help="sample a driver and solve exactly")
    sim.add_argument("--replicate", type=int, default=0, help="replicate index")
    conv = sub.add_parser("euler-converge", parents=[common],
                          help="scheme-vs-exact convergence table")
    conv.add_argument("--replicate", type=int, default=0, help="replicate index")
    val = sub.add_parser("validate", parents=[common], help="run a validation suite")
    val.add_argument("--suite", required=True, help=f"one of {', '.join(SUITES)}")
    val.add_argument("--defect", type=float, help="boundary defect of the martingale test function")
    return ap


def _model(doc) -> StickyModel:
    try:
        return StickyModel(build_triplet(doc), float(doc["z"]), float(doc["gamma"]))
    except KeyError as exc:
        raise ConfigurationError(f"missing {exc.args[0]}") from exc


def _out_dir(args, default: str) -> Path:
    out = args.out if args.out is not None else Path(default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, doc, paths, t0, **extra) -> Path:
    out = _out_dir(args, ".")
    path = out / "manifest.json"
    RunManifest(args.command, config_hash(doc), int(doc["seed"]),
                [str(p) for p in paths] + [str(path)], wall_time=time.perf_counter() - t0,
                config=doc, extra=extra).write(path)
    return path


def cmd_simulate(args, doc, t0) -> int:
    model = _model(doc)
    verdict = validate_triplet(model.triplet)
    if not verdict.valid:
        raise ModelHypothesisError(verdict)
    cfg = build_sim_config(doc)
    x = sample_path(model.triplet, cfg, args.replicate)
    p = TceProblem(x, model.z, model.gamma)
    sol = solve_exact(p)
    res = check_residual(p, sol)
    out = _out_dir(args, "sticky-tce-simulate")
    args.out = out
    paths = export_bundle(sol, out, {})[:3]
    _manifest(args, doc, paths, t0, replicate=args.replicate, z=model.z, gamma=model.gamma,
              residual=res.to_dict(), zero_occupation=sol.zero_occupation)
    print(json.dumps({"zero_occupation": sol.zero_occupation, **res.to_dict()}))
    return EXIT_OK


def cmd_euler_converge(args, doc, t0) -> int:
    if doc.get("scenario") == "no-solution":
        meshes = (doc.get("euler") or {}).get("meshes", [4, 16, 64, 256])
        report = no_solution_demo(meshes, float(doc.get("horizon", 1.0)))
        return _finish_report(args, doc, report, t0, "sticky-tce-converge")
    model = _model(doc)
    verdict = validate_triplet(model.triplet)
    if not verdict.valid:
        raise ModelHypothesisError(verdict)
    eu = doc.get("euler") or {}
    if "reference_n" not in eu:
        raise ConfigurationError("missing euler.reference_n")
    meshes = [int(n) for n in eu.get("meshes", [])]
    if not meshes:
        raise ConfigurationError("euler.meshes is empty")
    cfg = build_sim_config(doc, mesh_n=int(eu["reference_n"]))
    x = sample_path(model.triplet, cfg, args.replicate)
    table = convergence_curve(TceProblem(x, model.z, model.gamma), meshes,
                              window_factor=float(eu.get("window_factor", 10.0)))
    out = _out_dir(args, "sticky-tce-converge")
    args.out = out
    csv_path = out / "convergence.csv"
    table.to_csv(csv_path)
    write_table_manifest(table, out / "table.json", seed=cfg.seed, gamma=model.gamma,
                         z=model.z, replicate=args.replicate)
    _manifest(args, doc, [csv_path, out / "table.json"], t0)
    for r in table.rows:
        print(f"{r.n},{r.sup_dist_C!r},{r.j1_dist_Z!r}")
    return EXIT_OK


def _finish_report(args, doc, report, t0, default_out) -> int:
    report.provenance["config_hash"] = config_hash(doc)
    if args.out is not None:
        paths = report.write(_out_dir(args, default_out))
        _manifest(args, doc, paths, t0, verdict=report.verdict)
    print(report.to_json())
    return VERDICT_EXIT[report.verdict]


def cmd_validate(args, doc, t0) -> int:
    suite = args.suite
    if suite not in SUITES:
        raise ConfigurationError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    if suite == "no-solution":
        return _finish_report(args, doc, no_solution_demo(), t0, "sticky-tce-validate")
    model = _model(doc)
    cfg = build_sim_config(doc)
    jobs = max(1, args.jobs)
    if suite == "reflection-axioms":
        report = reflection_axioms_study(model, cfg, jobs=jobs)
    else:
        verdict = validate_triplet(model.triplet)
        if not verdict.valid:
            raise ModelHypothesisError(verdict)
        if suite == "monotonicity":
            report = clock_order_study(model, cfg, jobs=jobs)
        elif suite == "occupation":
            report = occupation_study(model, cfg, doc["occupation"]["coarsening"], jobs=jobs)
        elif suite == "gamma-sweep":
            report = gamma_sweep(model, cfg, doc["sweep"]["gammas"], jobs=jobs)
        else:
            mt = doc["martingale"]
            g = GeneratorEval(model.triplet, float(mt["quadrature_mesh"]),
                              float(mt["jump_truncation"]))
            defect = float(mt["defect"]) if args.defect is None else args.defect
            f = tuned_bump(g, model.gamma, defect, c1=float(mt["c1"]), width=float(mt["width"]))
            report = martingale_test(model, f, g, mt["t_grid"], cfg, delta=mt.get("delta"),
                                     jobs=jobs)
    return _finish_report(args, doc, report, t0, "sticky-tce-validate")


COMMANDS = {"simulate": cmd_simulate, "euler-converge": cmd_euler_converge,
            "validate": cmd_validate}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        overrides = {} if args.seed is None else {"seed": args.seed}
        doc = resolve(args.preset, args.config, overrides=overrides)
        return COMMANDS[args.command](args, doc, t0)
    except ModelHypothesisError as exc:
        print(f"model hypothesis violated ({exc.verdict.hypothesis}): {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (ConfigurationError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StickyTceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
