"""Command-line interface: ``smpfpt {check,analyze,moments,simulate,estimate}``.

The JSON report goes to stdout with every float written to 17 significant
digits; a short human summary goes to stderr unless ``--json-only`` is set.

Exit codes: 0 success, 1 validation/parse/usage failure, 2 target not
universally accessible, 3 graph/solver inconsistency.
"""

import argparse
import math
import secrets
import sys
import time
from dataclasses import dataclass, field

from smpfpt import __version__, estimate, graph, passage, sim
from smpfpt._json import dumps
from smpfpt.errors import (
    DomainError,
    IncompleteDataError,
    InternalInconsistencyError,
    ModelFormatError,
    TraceFormatError,
    UAViolationError,
    UnsupportedOperationError,
)
from smpfpt.model import read_model, validate

EXIT_OK, EXIT_INVALID, EXIT_UA, EXIT_INTERNAL = 0, 1, 2, 3


@dataclass
class Outcome:
    report: dict
    code: int = EXIT_OK
    summary: list = field(default_factory=list)


def _g6(x):
    return format(float(x), ".6g")


def _vec6(v):
    return "[" + ", ".join(_g6(x) for x in v) + "]"


# ---------------------------------------------------------------- helpers

def _load_valid(path, report):
    model = read_model(path)
    report["model"] = {"path": str(path), "m": model.m, "flavor": model.flavor,
                       "states": list(model.state_names)}
    diags = validate(model)
    report["diagnostics"] = [d.message for d in diags]
    return model, diags


def _structure_dict(model, rep):
    names = model.state_names
    return {
        "irreducible": rep.irreducible,
        "ua_states": [names[j] for j in rep.ua_states],
        "classes": [
            {"states": [names[i] for i in cls], "kind": kind, "spectral_radius": rho}
            for cls, kind, rho in zip(rep.classes, rep.kinds, rep.radii)
        ],
        "permutation": [names[i] for i in rep.permutation],
    }


def _invalid(out):
    out.code = EXIT_INVALID
    out.summary.extend(f"invalid: {d}" for d in out.report["diagnostics"])
    return out


# ---------------------------------------------------------------- commands

def cmd_check(model_path):
    out = Outcome({"command": {"name": "check", "model": str(model_path)}})
    _, diags = _load_valid(model_path, out.report)
    if diags:
        return _invalid(out)
    out.summary.append(f"{model_path}: model is valid")
    return out


def cmd_analyze(model_path):
    out = Outcome({"command": {"name": "analyze", "model": str(model_path)}})
    model, diags = _load_valid(model_path, out.report)
    if diags:
        return _invalid(out)
    rep = graph.structure(model.p)
    out.report["structure"] = _structure_dict(model, rep)
    names = model.state_names
    out.summary.append(f"irreducible: {rep.irreducible}")
    out.summary.append("universally accessible: {" + ", ".join(names[j] for j in rep.ua_states) + "}")
    for cls, kind, rho in zip(rep.classes, rep.kinds, rep.radii):
        out.summary.append(f"  class {{{', '.join(names[i] for i in cls)}}}: {kind}, radius {_g6(rho)}")
    return out


def cmd_moments(model_path, target, order=1, partial=False):
    out = Outcome({"command": {"name": "moments", "model": str(model_path), "target": str(target),
                               "order": order, "partial": partial}})
    model, diags = _load_valid(model_path, out.report)
    if diags:
        return _invalid(out)
    j = model.state_index(target)
    if model.max_order is not None and order > model.max_order:
        raise DomainError(f"model provides moments up to order {model.max_order}, {order} requested")
    pm = passage.higher_moments(model, j, order, partial=partial)
    res = passage.verify_first_step(model, pm)
    out.report["results"] = {
        "target": model.state_names[j],
        "moments": pm.vectors(),
        "first_step_residual": res,
        "notes": list(pm.notes),
    }
    for r, v in enumerate(pm.mu, start=1):
        out.summary.append(f"mu^({r}) to {model.state_names[j]}: {_vec6(v)}")
    out.summary.append(f"first-step residual {res:.3g}")
    out.summary.extend(pm.notes)
    return out


def cmd_simulate(model_path, target, reps, seed=None, order=1, emit_trace=None,
                 max_transitions=1_000_000, initial=None, trace_length=None):
    seed = secrets.randbits(64) if seed is None else int(seed)
    out = Outcome({"command": {"name": "simulate", "model": str(model_path), "target": str(target),
                               "reps": reps, "seed": seed, "order": order,
                               "max_transitions": max_transitions}})
    model, diags = _load_valid(model_path, out.report)
    if diags:
        return _invalid(out)
    if model.flavor != "distributions":
        raise UnsupportedOperationError(
            "simulate needs a model with 'distributions'; moment matrices alone do not "
            "determine sojourn-time distributions")
    j = model.state_index(target)
    cfg = sim.SimConfig(seed=seed, replications=reps, max_transitions=max_transitions)
    emp = sim.empirical_passage(model, j, cfg, order)
    pm = passage.higher_moments(model, j, order)
    names = model.state_names
    table = []
    for r in range(order):
        for i in range(model.m):
            se = emp.se[r, i]
            diff = emp.mean[r, i] - pm.mu[r, i]
            z = diff / se if se > 0 else (0.0 if diff == 0 else math.copysign(math.inf, diff))
            table.append({"order": r + 1, "source": names[i], "analytic": pm.mu[r, i],
                          "empirical": emp.mean[r, i], "se": se, "z": z})
    out.report["results"] = {
        "target": names[j],
        "empirical": emp.mean.tolist(),
        "standard_errors": emp.se.tolist(),
        "completed": emp.n.tolist(),
        "censored": emp.censored.tolist(),
        "analytic": pm.vectors(),
        "comparison": table,
        "warnings": list(emp.warnings),
    }
    for row in table:
        out.summary.append(
            f"r={row['order']} from {row['source']}: analytic {_g6(row['analytic'])}  "
            f"empirical {_g6(row['empirical'])} +- {_g6(row['se'])}")
    if emp.warnings:
        out.summary.extend(emp.warnings)
    if emit_trace is not None:
        start = 0 if initial is None else model.state_index(initial)
        tcfg = sim.SimConfig(seed=seed, replications=reps, max_transitions=max_transitions,
                             initial_state=start, total_transitions=trace_length)
        trace = sim.simulate_trace(model, tcfg)
        estimate.write_trace_csv(trace, emit_trace)
        out.report["results"]["trace"] = {"path": str(emit_trace), "records": len(trace),
                                          "replications": reps, "initial": names[start]}
        out.summary.append(f"wrote {len(trace)} transitions to {emit_trace}")
    return out


def cmd_estimate(trace_path, states, target, order=1):
    out = Outcome({"command": {"name": "estimate", "trace": str(trace_path), "states": states,
                               "target": str(target), "order": order}})
    trace = estimate.read_trace_csv(trace_path)
    try:
        k = int(target)
    except ValueError:
        raise DomainError(f"target must be a state number in 1..{states}, got {target!r}") from None
    if not 1 <= k <= states:
        raise DomainError(f"target {k} out of range 1..{states}")
    est = estimate.estimate(trace, states, order)
    out.report["estimates"] = {
        "transitions": len(trace),
        "replications": trace.replications,
        "counts": est.counts.tolist(),
        "p_hat": est.p_hat.tolist(),
        "e_hat": [e.tolist() for e in est.e_hat],
        "observed": est.observed.tolist(),
    }
    out.report["diagnostics"] = list(est.diagnostics)
    out.summary.extend(est.diagnostics)
    pm = estimate.estimate_passage(est, k - 1, order)
    out.report["results"] = {"target": str(k), "moments": pm.vectors(), "notes": list(pm.notes)}
    for r, v in enumerate(pm.mu, start=1):
        out.summary.append(f"mu_hat^({r}) to {k}: {_vec6(v)}")
    return out


# ---------------------------------------------------------------- argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _order(text):
    v = _positive(text)
    if v > passage.MAX_ORDER:
        raise argparse.ArgumentTypeError(f"order must be at most {passage.MAX_ORDER}")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json-only", action="store_true", help="suppress the stderr summary")
    common.add_argument("--timing", action="store_true", help="add wall-clock timing to the report")
    ap = _Parser(prog="smpfpt", description="First-passage moments of semi-Markov processes.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common], help="validate a model file")
    p.add_argument("model")

    p = sub.add_parser("analyze", parents=[common], help="classes, canonical form and UA states")
    p.add_argument("model")

    p = sub.add_parser("moments", parents=[common], help="exact first-passage moments")
    p.add_argument("model")
    p.add_argument("--target", required=True, help="state name or 1-based index")
    p.add_argument("--order", type=_order, default=1)
    p.add_argument("--partial", action="store_true",
                   help="report inf for sources that cannot surely reach the target")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of the moments")
    p.add_argument("model")
    p.add_argument("--target", required=True)
    p.add_argument("--reps", type=_positive, required=True, help="replications per source state")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--order", type=_order, default=1)
    p.add_argument("--max-transitions", type=_positive, default=1_000_000)
    p.add_argument("--emit-trace", default=None, metavar="PATH")
    p.add_argument("--initial", default=None, help="start state for the emitted trace")
    p.add_argument("--trace-length", type=_positive, default=None,
                   help="cap on the number of transitions in the emitted trace")

    p = sub.add_parser("estimate", parents=[common], help="plug-in estimates from a trace CSV")
    p.add_argument("trace")
    p.add_argument("--states", type=_positive, required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--order", type=_order, default=1)
    return ap


def run(args):
    """Dispatch parsed arguments; never raises for expected failures."""
    t0 = time.perf_counter()
    try:
        if args.command == "check":
            out = cmd_check(args.model)
        elif args.command == "analyze":
            out = cmd_analyze(args.model)
        elif args.command == "moments":
            out = cmd_moments(args.model, args.target, args.order, args.partial)
        elif args.command == "simulate":
            out = cmd_simulate(args.model, args.target, args.reps, args.seed, args.order,
                               args.emit_trace, args.max_transitions, args.initial,
                               args.trace_length)
        else:
            out = cmd_estimate(args.trace, args.states, args.target, args.order)
    except UAViolationError as exc:
        out = Outcome({"command": {"name": args.command},
                       "error": {"kind": "ua_violation", "message": str(exc),
                                 "unreachable": [i + 1 for i in exc.unreachable]}},
                      EXIT_UA, [str(exc)])
    except InternalInconsistencyError as exc:
        out = Outcome({"command": {"name": args.command},
                       "error": {"kind": "internal_inconsistency", "message": str(exc)}},
                      EXIT_INTERNAL, [str(exc)])
    except (ModelFormatError, TraceFormatError, DomainError, UnsupportedOperationError,
            IncompleteDataError, OSError) as exc:
        kind = {ModelFormatError: "parse", TraceFormatError: "parse"}.get(type(exc), "invalid")
        out = Outcome({"command": {"name": args.command},
                       "error": {"kind": kind, "message": str(exc)}},
                      EXIT_INVALID, [str(exc)])
    if getattr(args, "timing", False):
        out.report["timing"] = {"seconds": time.perf_counter() - t0}
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = run(args)
    sys.stdout.write(dumps(out.report) + "\n")
    if not args.json_only:
        for line in out.summary:
            print(line, file=sys.stderr)
    return out.code


if __name__ == "__main__":
    raise SystemExit(main())
