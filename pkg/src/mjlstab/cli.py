"""Command-line interface: analyze / robust / simulate / inspect.

Model sources: --model <json> loads the documented schema, --pendulum N
generates the coupled-pendulum benchmark (with --param key=value overrides),
and --family <json> (analyze/robust) ingests a raw jump-linear family
{"matrices": [[[...]], ...], "P": [[...]], "pi0": [...]} for systems without
delay structure. Every command prints JSON to stdout; --out writes the
primary artifact to a file plus a run manifest alongside it.

Exit codes: 0 success/stable, 2 unstable, 3 marginal, 1 usage or analysis
error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .linalg import SizeLimitError
from .model import (
    DncsModel,
    ModelError,
    PendulumParams,
    build_pendulum_model,
    dump_model,
    load_model,
    nominal_stability,
)
from .robust import compute_bounds
from .sim import (
    SimConfig,
    estimate_ms,
    export_csv,
    mean_square_csv,
    simulate_trajectory,
    trajectory_csv,
)
from .stability import (
    dedup_agents,
    mss_test_family,
    mss_test_full,
    mss_test_reduced,
)
from .switched import (
    EnumerationCapError,
    ModeFamily,
    build_mode_family,
    enumerate_links,
    mode_count,
    mode_count_formula,
)

_EXIT_BY_VERDICT = {"stable": 0, "unstable": 2, "marginal": 3}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


@dataclass
class RunManifest:
    """Reproducibility record written next to every --out artifact."""

    command: str
    arguments: list
    version: str
    model_digest: str
    result_digest: str
    timings: dict

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read_file(path: str) -> str:
    try:
        with open(path, "r") as fh:
            return fh.read()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}")


def _parse_params(pairs) -> PendulumParams:
    overrides = {}
    valid = {f.name for f in dataclasses.fields(PendulumParams)}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep:
            raise _UsageError(f"--param expects key=value, got {pair!r}")
        if key not in valid:
            raise _UsageError(
                f"unknown pendulum parameter {key!r} (valid: {', '.join(sorted(valid))})"
            )
        try:
            overrides[key] = float(value)
        except ValueError:
            raise _UsageError(f"--param {key}: not a number: {value!r}")
    return PendulumParams(**overrides)


def _load_family(path: str) -> ModeFamily:
    try:
        doc = json.loads(_read_file(path))
    except json.JSONDecodeError as exc:
        raise ModelError(f"family document: invalid JSON: {exc}")
    if not isinstance(doc, dict) or "matrices" not in doc or "P" not in doc:
        raise ModelError("family document: expected object with 'matrices' and 'P'")
    return ModeFamily.from_matrices(
        doc["matrices"], doc["P"], pi0=doc.get("pi0"), scope="family"
    )


def _model_source(args, allow_family: bool):
    """Resolve exactly one of --model / --pendulum / --family.

    Returns (model, family, digest): family is None for DNCS sources, model
    is None for raw families.
    """
    chosen = [
        name
        for name, present in (
            ("--model", args.model is not None),
            ("--pendulum", args.pendulum is not None),
            ("--family", getattr(args, "family", None) is not None),
        )
        if present
    ]
    if len(chosen) != 1:
        what = "--model, --pendulum or --family" if allow_family else "--model or --pendulum"
        raise _UsageError(f"exactly one of {what} is required (got {chosen or 'none'})")
    if args.param and args.pendulum is None:
        raise _UsageError("--param only applies to --pendulum")

    if args.model is not None:
        model = load_model(_read_file(args.model))
        return model, None, _sha256(dump_model(model).encode())
    if args.pendulum is not None:
        model = build_pendulum_model(args.pendulum, params=_parse_params(args.param))
        return model, None, _sha256(dump_model(model).encode())
    family = _load_family(args.family)
    canonical = json.dumps(
        {
            "matrices": family.matrices.tolist(),
            "P": family.joint_P.tolist(),
            "pi0": family.joint_pi0.tolist(),
        },
        sort_keys=True,
    )
    return None, family, _sha256(canonical.encode())


def _emit(doc: dict, args, command: str, digest: str, started: float, payload: str | None = None) -> None:
    """Print the result JSON; with --out, also write the artifact (payload
    text if given, else the same JSON) and its manifest."""
    text = json.dumps(doc, indent=2)
    print(text)
    out = getattr(args, "out", None)
    if out is None:
        return
    artifact = payload if payload is not None else text + "\n"
    with open(out, "w", newline="\n") as fh:
        fh.write(artifact)
    manifest = RunManifest(
        command=command,
        arguments=[str(a) for a in (args._argv or [])],
        version=__version__,
        model_digest=digest,
        result_digest=_sha256(artifact.encode()),
        timings={"total_s": round(time.monotonic() - started, 6)},
    )
    with open(out + ".manifest.json", "w", newline="\n") as fh:
        fh.write(json.dumps(manifest.to_dict(), indent=2) + "\n")


def _count_json(count):
    if isinstance(count, tuple):
        return {"base": count[0], "exponent": count[1]}
    return count


def cmd_analyze(args) -> int:
    started = time.monotonic()
    model, family, digest = _model_source(args, allow_family=True)
    if args.full and args.reduced:
        raise _UsageError("--full and --reduced are mutually exclusive")
    doc: dict = {"command": "analyze"}
    if family is not None:
        report = mss_test_family(family)
        doc["nominal"] = None
    else:
        rho, stable = nominal_stability(model)
        doc["nominal"] = {"rho": rho, "stable": stable}
        if args.full:
            report = mss_test_full(model)
        else:
            report = mss_test_reduced(model, dedup=args.dedup, threads=args.threads)
    doc.update(report.to_dict())
    _emit(doc, args, "analyze", digest, started)
    return _EXIT_BY_VERDICT[report.overall]


def cmd_robust(args) -> int:
    started = time.monotonic()
    model, family, digest = _model_source(args, allow_family=True)
    entries = []
    if family is not None:
        bound = compute_bounds(family, margin=args.margin, threads=args.threads)
        entries.append({"scope": "family", "agents": None, **bound.to_dict()})
    else:
        for cls in dedup_agents(model):
            rep = cls[0]
            fam = build_mode_family(model, scope=rep)
            bound = compute_bounds(fam, margin=args.margin, threads=args.threads)
            entries.append({"scope": f"agent {rep}", "agents": cls, **bound.to_dict()})
    doc = {"command": "robust", "classes": entries}
    _emit(doc, args, "robust", digest, started)
    return 0


def cmd_simulate(args) -> int:
    started = time.monotonic()
    model, _, digest = _model_source(args, allow_family=False)
    if args.out is None:
        raise _UsageError("simulate requires --out for the CSV")
    config = SimConfig(steps=args.steps, trials=args.trials, seed=args.seed)
    if config.trials == 1:
        record = simulate_trajectory(model, config, trial=0)
        payload = trajectory_csv(record)
        doc = {
            "command": "simulate",
            "out": args.out,
            "rows": int(record.states.shape[0]),
            "initial_sqnorm": float(record.sqnorm[0]),
            "final_sqnorm": float(record.sqnorm[-1]),
        }
    else:
        ms = estimate_ms(model, config, threads=args.threads)
        payload = mean_square_csv(ms)
        doc = {
            "command": "simulate",
            "out": args.out,
            "rows": int(ms.shape[0]),
            "initial_mean_sq": float(ms[0]),
            "final_mean_sq": float(ms[-1]),
        }
    _emit(doc, args, "simulate", digest, started, payload=payload)
    return 0


def cmd_inspect(args) -> int:
    started = time.monotonic()
    model, _, digest = _model_source(args, allow_family=False)
    agents = []
    for i in range(1, model.n_agents + 1):
        agents.append(
            {
                "agent": i,
                "links": len(enumerate_links(model, i)),
                "modes": _count_json(mode_count(model, i)),
            }
        )
    classes = []
    for cls in dedup_agents(model):
        rep = cls[0]
        classes.append(
            {
                "representative": rep,
                "size": len(cls),
                "links": len(enumerate_links(model, rep)),
                "modes": _count_json(mode_count(model, rep)),
            }
        )
    doc = {
        "command": "inspect",
        "N": model.n_agents,
        "n": model.n,
        "tau_d": model.tau_d,
        "links": len(enumerate_links(model)),
        "full_modes": _count_json(mode_count(model)),
        "reduced_formula_total": sum(
            mode_count_formula(model, i) for i in range(1, model.n_agents + 1)
        ),
        "agents": agents,
        "classes": classes,
    }
    _emit(doc, args, "inspect", digest, started)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="mjls-stab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, family: bool):
        p.add_argument("--model", help="path to a model JSON document")
        p.add_argument("--pendulum", type=int, metavar="N",
                       help="generate the N-pendulum benchmark")
        if family:
            p.add_argument("--family", help="path to a raw mode-family JSON")
        p.add_argument("--param", action="append", metavar="KEY=VALUE",
                       help="override a pendulum parameter")
        p.add_argument("--threads", type=int, default=None,
                       help="parallelism cap (default: MJLS_STAB_THREADS or all cores)")
        p.add_argument("--out", help="write the result artifact (plus manifest) here")

    p = sub.add_parser("analyze", help="run the stability tests")
    add_common(p, family=True)
    p.add_argument("--full", action="store_true",
                   help="enumerate the whole network's modes (exponential)")
    p.add_argument("--reduced", action="store_true",
                   help="per-agent reduced test (default)")
    p.add_argument("--dedup", action="store_true",
                   help="group symmetric agents before testing")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("robust", help="transition-matrix uncertainty bounds")
    add_common(p, family=True)
    p.add_argument("--margin", type=float, default=0.0,
                   help="strictness margin subtracted from each beta")
    p.set_defaults(func=cmd_robust)

    p = sub.add_parser("simulate", help="Monte Carlo simulation to CSV")
    add_common(p, family=False)
    p.add_argument("--steps", type=int, required=True, help="horizon length")
    p.add_argument("--trials", type=int, default=1, help="number of repetitions")
    p.add_argument("--seed", type=int, default=0, help="base RNG seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("inspect", help="mode counts and dimensions as JSON")
    add_common(p, family=False)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        args._argv = argv
        return args.func(args)
    except _UsageError as exc:
        print(json.dumps({"error": f"usage: {exc}"}))
        return 1
    except (ModelError, EnumerationCapError, SizeLimitError, ValueError,
            ArithmeticError, OSError) as exc:
        print(json.dumps({"error": str(exc)}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
