"""Command-line front end; every invocation emits one reproducibility manifest.

Exit codes: 0 success, 1 negative verdict on a check command, 2 input error,
3 solver failure.  Numbers print with 6 significant digits; the manifest
carries their full-precision twins.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from .config import DEFAULT_TOL
from .correlations import (
    Assemblage,
    Behavior,
    Wiring,
    apply_wiring,
    apply_wiring_behavior,
    validate,
)
from .errors import InputError, MemberError, SolverFailureError, SteerkitError
from .hermitian import PAULI_X, PAULI_Z
from .membership import (
    ModelClass,
    behavior_membership,
    gms_membership,
    membership,
    optimal_witness,
    robustness_report,
)
from .protocols import (
    canonical_witnesses,
    chsh_max,
    ghz_assemblage,
    ghz_assemblage_from_state,
    ghz_wired_assemblage,
    noisy_w_assemblage,
    noisy_w_assemblage_from_state,
    nslhs_witness,
    universal_initial_assemblage,
    universal_initial_behavior,
    verify_tabulated_to_model,
    wired_steering_witness,
)
from .experiment import pipeline_histograms
from . import serialize

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3


class _Run:
    """Collects inputs, outputs, and reported values for the manifest."""

    def __init__(self, args):
        self.args = args
        self.t0 = time.monotonic()
        self.inputs: dict = {}
        self.outputs: dict = {}
        self.values: dict = {}

    def read(self, path):
        self.inputs[path] = _digest(path)
        return serialize.load_object(path)

    def write(self, obj: dict, path: str):
        serialize.dump_json(obj, path)
        self.outputs[path] = _digest(path)

    def value(self, name: str, v):
        self.values[name] = v
        if isinstance(v, float):
            print(f"{name} = {v:.6g}")
        else:
            print(f"{name} = {v}")

    def finish(self, exit_code: int):
        config = {
            k: v for k, v in vars(self.args).items() if k not in ("func",) and v is not None
        }
        manifest = {
            "command": self.args.command,
            "argv": sys.argv[1:],
            "inputs": self.inputs,
            "config": config,
            "outputs": self.outputs,
            "values": self.values,
            "exit_code": exit_code,
            "wall_time_s": time.monotonic() - self.t0,
            "generator": "numpy.random.Generator(PCG64)",
        }
        path = getattr(self.args, "manifest", None) or "steerkit-manifest.json"
        with open(path, "w") as fh:
            json.dump(manifest, fh, indent=1)
            fh.write("\n")
        return exit_code


def _digest(path: str) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(65536), b""):
                h.update(chunk)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return h.hexdigest()


def _tolerances(args):
    tol = DEFAULT_TOL
    if getattr(args, "tol", None) is not None:
        tol = tol.with_validation(float(args.tol))
    return tol


def _model_class(tag: str, scenario) -> ModelClass:
    return ModelClass(tag, scenario)


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args, run: _Run) -> int:
    obj = run.read(args.infile)
    rep = validate(obj, tol=None if args.tol is None else float(args.tol))
    run.value("valid", rep.valid)
    run.value("worst_violation", rep.worst())
    for v in rep.violations[:20]:
        print(f"  {v.kind} at {v.location}: {v.magnitude:.6g}")
    return EXIT_OK if rep.valid else EXIT_VERDICT


def _named_wiring(obj, name: str) -> Wiring:
    if name == "y-eq-a":
        return Wiring.y_equals_a(obj.scenario)
    if name == "identity":
        return Wiring.identity(obj.scenario)
    raise InputError(f"unknown wiring {name!r} (use y-eq-a, identity, or --wiring-file)")


def cmd_wire(args, run: _Run) -> int:
    obj = run.read(args.infile)
    wiring = serialize.wiring_from_json(serialize.load_json(args.wiring_file)) if args.wiring_file \
        else _named_wiring(obj, args.wiring)
    if isinstance(obj, Assemblage):
        out = apply_wiring(obj, wiring)
        payload = serialize.assemblage_to_json(out, provenance=f"wired:{args.wiring or args.wiring_file}")
    elif isinstance(obj, Behavior):
        out = apply_wiring_behavior(obj, wiring)
        payload = serialize.behavior_to_json(out, provenance=f"wired:{args.wiring or args.wiring_file}")
    else:
        raise InputError("wire needs an assemblage or behavior input")
    run.write(payload, args.out)
    run.value("wired_elements", len(out.elements))
    return EXIT_OK


def cmd_membership(args, run: _Run) -> int:
    obj = run.read(args.infile)
    tol = _tolerances(args)
    if isinstance(obj, Behavior):
        rep = behavior_membership(obj, args.model_class, tolerances=tol)
        run.value("feasible", rep.feasible)
        run.value("certificate_verified", rep.certificate_verified)
        if args.out:
            run.write(serialize.behavior_report_to_json(rep), args.out)
        return EXIT_OK if rep.feasible else EXIT_VERDICT
    rep = membership(obj, _model_class(args.model_class, obj.scenario), tolerances=tol)
    run.value("feasible", rep.feasible)
    run.value("certificate_verified", rep.certificate_verified)
    if rep.feasible:
        run.value("recomposition_error", rep.recomposition_error)
    if args.out:
        run.write(serialize.model_report_to_json(rep), args.out)
    if rep.witness is not None and args.out_witness:
        run.write(serialize.witness_to_json(rep.witness), args.out_witness)
    return EXIT_OK if rep.feasible else EXIT_VERDICT


def cmd_robustness(args, run: _Run) -> int:
    obj = run.read(args.infile)
    rep = robustness_report(obj, _model_class(args.model_class, obj.scenario),
                            noise=args.mode, tolerances=_tolerances(args))
    run.value("robustness", rep.value)
    run.value("mode", rep.mode)
    run.value("gap", rep.gap)
    run.value("certificate_verified", rep.certificate_verified)
    return EXIT_OK


def cmd_witness_eval(args, run: _Run) -> int:
    wit = run.read(args.witness)
    obj = run.read(args.infile)
    run.value("witness_value", wit.evaluate(obj))
    run.value("bound", wit.bound)
    return EXIT_OK


def cmd_witness_opt(args, run: _Run) -> int:
    obj = run.read(args.infile)
    try:
        wit = optimal_witness(obj, _model_class(args.model_class, obj.scenario), _tolerances(args))
    except MemberError as exc:
        print(f"no witness: {exc}")
        return EXIT_VERDICT
    run.value("value_on_target", wit.value_on_target)
    run.value("bound", wit.bound)
    if args.out:
        run.write(serialize.witness_to_json(wit), args.out)
    return EXIT_OK


def cmd_chsh(args, run: _Run) -> int:
    obj = run.read(args.infile)
    observables = [(2 * PAULI_Z + PAULI_X) / math.sqrt(5), PAULI_X]
    run.value("chsh", chsh_max(obj, observables))
    return EXIT_OK


def cmd_expose_universal(args, run: _Run) -> int:
    target = run.read(args.target)
    if isinstance(target, Assemblage):
        initial, model = universal_initial_assemblage(target)
        payload = serialize.assemblage_to_json(initial, provenance="universal-exposure-source")
        wired = apply_wiring(initial, Wiring.y_equals_a(initial.scenario))
    else:
        initial, model = universal_initial_behavior(target)
        payload = serialize.behavior_to_json(initial, provenance="universal-exposure-source")
        wired = apply_wiring_behavior(initial, Wiring.y_equals_a(initial.scenario))
    run.write(payload, args.out)
    run.value("model_recomposition_error", model.max_recomposition_error(initial))
    run.value("wire_back_error", wired.max_deviation(target))
    return EXIT_OK


def cmd_expose_ghz(args, run: _Run) -> int:
    asm, model = ghz_assemblage()
    run.value("model_recomposition_error", model.max_recomposition_error(asm))
    out_obj = asm
    provenance = "ghz-protocol-source"
    if args.wire:
        out_obj = apply_wiring(asm, Wiring.y_equals_a(asm.scenario))
        provenance = "ghz-protocol-wired"
        run.value("wired_deviation_from_target", out_obj.max_deviation(ghz_wired_assemblage()))
    if args.witness:
        wired = out_obj if args.wire else apply_wiring(asm, Wiring.y_equals_a(asm.scenario))
        wit = wired_steering_witness()
        run.value("witness_value", wit.evaluate(wired))
        observables = [(2 * PAULI_Z + PAULI_X) / math.sqrt(5), PAULI_X]
        run.value("chsh", chsh_max(wired, observables))
    if args.out:
        run.write(serialize.assemblage_to_json(out_obj, provenance=provenance), args.out)
    return EXIT_OK


def cmd_noisy_w(args, run: _Run) -> int:
    asm = noisy_w_assemblage(float(args.v))
    run.write(serialize.assemblage_to_json(asm, provenance=f"noisy-w(v={args.v})"), args.out)
    run.value("v", float(args.v))
    return EXIT_OK


def cmd_gms(args, run: _Run) -> int:
    obj = run.read(args.infile)
    rep = gms_membership(obj, _tolerances(args))
    run.value("member", rep.member)
    run.value("certificate_verified", rep.certificate_verified)
    if args.out:
        run.write(serialize.gms_report_to_json(rep), args.out)
    return EXIT_OK if rep.member else EXIT_VERDICT


def cmd_verify_canonical(args, run: _Run) -> int:
    ok = True
    asm, model = ghz_assemblage()
    err = model.max_recomposition_error(asm)
    run.value("ghz_model_recomposition", err)
    ok &= err <= 1e-12
    route = asm.max_deviation(ghz_assemblage_from_state())
    run.value("ghz_route_agreement", route)
    ok &= route <= 1e-12
    wired = apply_wiring(asm, Wiring.y_equals_a(asm.scenario))
    dev = wired.max_deviation(ghz_wired_assemblage())
    run.value("ghz_wired_deviation", dev)
    ok &= dev <= 1e-12
    w_dev = noisy_w_assemblage(0.64).max_deviation(noisy_w_assemblage_from_state(0.64))
    run.value("noisy_w_route_agreement", w_dev)
    ok &= w_dev <= 1e-10
    wit1, wit2 = canonical_witnesses()
    run.value("steering_witness_value", wit1.value_on_target)
    ok &= abs(wit1.value_on_target - 1.0721) <= 1e-3
    run.value("nslhs_witness_value", wit2.value_on_target)
    ok &= abs(wit2.value_on_target - 0.0301) <= 2e-3
    tab = verify_tabulated_to_model()
    run.value("tabulated_max_deviation", max(tab.max_deviation_ab, tab.max_deviation_ba))
    run.value("tabulated_passed", tab.passed)
    ok &= tab.passed
    run.value("all_passed", bool(ok))
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_simulate(args, run: _Run) -> int:
    obj = run.read(args.infile)
    witness = None
    target = args.witness_target
    if target == "tripartite":
        witness = nslhs_witness()
    result = pipeline_histograms(
        obj, flux=float(args.flux), seeds=int(args.seeds), base_seed=int(args.seed),
        witness=witness, witness_target=target, robustness_mode=args.mode,
        with_lhs_fit=not args.no_lhs_fit, workers=args.workers,
        tolerances=_tolerances(args),
    )
    os.makedirs(args.out_dir, exist_ok=True)
    records_path = os.path.join(args.out_dir, "records.jsonl")
    result.write_jsonl(records_path)
    run.outputs[records_path] = _digest(records_path)
    for which in ("witness", "robustness"):
        path = os.path.join(args.out_dir, f"{which}_hist.csv")
        result.write_csv(path, which)
        run.outputs[path] = _digest(path)
    run.value("witness_mean", float(np.mean(result.witness_values)))
    run.value("robustness_median", float(np.median(result.robustness_values)))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steerkit",
        description="Certification toolkit for multipartite steering and nonlocality exposure",
    )
    parser.add_argument("--manifest", help="manifest path (default steerkit-manifest.json)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, infile=True):
        if infile:
            p.add_argument("--in", dest="infile", required=True, help="input JSON path")
        p.add_argument("--tol", type=float, help="validation tolerance override")

    p = sub.add_parser("validate", help="check assemblage/behavior invariants")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("wire", help="apply a wiring")
    common(p)
    p.add_argument("--wiring", default="y-eq-a", help="named wiring: y-eq-a or identity")
    p.add_argument("--wiring-file", help="wiring JSON path (overrides --wiring)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_wire)

    p = sub.add_parser("membership", help="model-class membership with certificate")
    common(p)
    p.add_argument("--class", dest="model_class", required=True,
                   choices=["lhs", "to-ab", "to-ba", "to-lhs", "ns-lhs"])
    p.add_argument("--out", help="full report JSON path")
    p.add_argument("--out-witness", help="witness JSON path on infeasibility")
    p.set_defaults(func=cmd_membership)

    p = sub.add_parser("robustness", help="noise robustness w.r.t. a model class")
    common(p)
    p.add_argument("--class", dest="model_class", required=True,
                   choices=["lhs", "to-ab", "to-ba", "to-lhs", "ns-lhs"])
    p.add_argument("--mode", default="generalized", choices=["mixed", "generalized"])
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("witness-eval", help="evaluate a witness on an assemblage")
    common(p)
    p.add_argument("--witness", required=True)
    p.set_defaults(func=cmd_witness_eval)

    p = sub.add_parser("witness-opt", help="dual-derived witness for a non-member")
    common(p)
    p.add_argument("--class", dest="model_class", required=True,
                   choices=["lhs", "to-ab", "to-ba", "to-lhs", "ns-lhs"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_witness_opt)

    p = sub.add_parser("chsh", help="CHSH value with the canonical trusted observables")
    common(p)
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("expose-universal", help="universal exposure source for a target")
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_expose_universal)

    p = sub.add_parser("expose-ghz", help="GHZ exposure protocol objects")
    p.add_argument("--out")
    p.add_argument("--wire", action="store_true", help="emit the wired assemblage")
    p.add_argument("--witness", action="store_true", help="report witness and CHSH values")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_expose_ghz)

    p = sub.add_parser("noisy-w", help="noisy-W assemblage at a visibility")
    p.add_argument("--v", required=True, type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_noisy_w)

    p = sub.add_parser("gms", help="genuinely-multipartite-steering biseparability test")
    common(p)
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=cmd_gms)

    p = sub.add_parser("verify-canonical", help="re-derive all canonical constructions")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_verify_canonical)

    p = sub.add_parser("simulate", help="Poisson Monte-Carlo reconstruction pipeline")
    common(p)
    p.add_argument("--flux", default=1000.0, type=float)
    p.add_argument("--seeds", default=100, type=int)
    p.add_argument("--seed", default=0, type=int, help="base seed")
    p.add_argument("--workers", default=1, type=int, help="worker pool size (capped by STEERKIT_THREADS)")
    p.add_argument("--mode", default="generalized", choices=["mixed", "generalized"])
    p.add_argument("--witness-target", default="wired", choices=["wired", "tripartite"])
    p.add_argument("--no-lhs-fit", action="store_true")
    p.add_argument("--out-dir", default="simulation-out")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    run = _Run(args)
    try:
        code = args.func(args, run)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return run.finish(EXIT_INPUT)
    except SolverFailureError as exc:
        print(f"solver failure: {exc} residuals={exc.residuals}", file=sys.stderr)
        return run.finish(EXIT_SOLVER)
    except SteerkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return run.finish(EXIT_INPUT)
    return run.finish(code)


if __name__ == "__main__":
    raise SystemExit(main())
