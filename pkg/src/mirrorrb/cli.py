"""Command-line front end: ``mrb <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 invalid input or failed validation,
3 runtime error.  Every JSON output carries a ``schema`` field.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .analysis import analyze_results, write_decay_table
from .campaign import (
    MODEL_SOURCES,
    PRESETS,
    SWEEP_SIZES,
    CampaignConfig,
    epsilon_to_dict,
    make_design,
    make_model,
    run_campaign,
    run_sweep,
    simulate_design,
    write_campaign,
    write_sweep,
)
from .circuits import circuit_id, design_circuits, format_circuit, parse_circuit, read_design, write_design
from .errors import FormatError, MrbError
from .infidelity import epsilon_omega
from .validation import checks_to_dict, run_checks
from .weaksim import read_results, write_results

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("mrb")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(",", " ").split())


def _add_design_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("design")
    g.add_argument("--rows", type=int, default=4, help="device grid rows")
    g.add_argument("--cols", type=int, default=4, help="device grid columns")
    g.add_argument("--n", type=int, default=4, help="benchmark width (compact sub-rectangle)")
    g.add_argument("--qubits", type=_ints, default=None, help="explicit qubit subset, overrides --n")
    g.add_argument("--sampler", choices=("edge_grab", "single_cnot"), default="edge_grab")
    g.add_argument("--xi", type=float, default=0.125, help="edge-grab two-qubit gate density")
    g.add_argument("--cnot-probability", type=float, default=0.5, help="single_cnot CNOT probability")
    g.add_argument("--depths", type=_ints, default=(0, 2, 4, 8, 16, 32, 64), help="even benchmark depths")
    g.add_argument("--circuits-per-depth", type=int, default=30, help="circuits K per depth")
    g.add_argument("--shots", type=int, default=100, help="shots N per circuit")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--model", default="model1", help=f"one of {', '.join(MODEL_SOURCES)} or a model file"
    )
    p.add_argument("--model-seed", type=int, default=None, help="random-model seed (derived from --seed if unset)")


def _add_epsilon_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--layer-samples", type=int, default=1000, help="layers drawn for the infidelity average")
    p.add_argument("--per-layer-samples", type=int, default=200, help="Monte-Carlo samples per layer")


def _add_common(p: argparse.ArgumentParser, seed_required: bool = True) -> None:
    p.add_argument("--config", type=Path, default=None, help="JSON file whose keys override flags")
    if seed_required:
        p.add_argument("--seed", type=int, default=None, help="master seed (mandatory)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="mrb", description="Mirror randomized benchmarking toolkit", formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("design", help="write a design file and its circuit files", formatter_class=fmt)
    _add_common(p)
    _add_design_flags(p)
    p.add_argument("--out", type=Path, default=Path("mrb-design"), help="output directory")

    p = sub.add_parser("simulate", help="simulate the circuits of a design directory", formatter_class=fmt)
    _add_common(p, seed_required=False)
    p.add_argument("--design-dir", type=Path, required=False, help="directory written by 'design'")
    _add_model_flags(p)
    p.add_argument("--shots", type=int, default=None, help="override the design's shot count")
    p.add_argument("--out", type=Path, default=None, help="results file (default <design-dir>/results.json)")

    p = sub.add_parser("analyze", help="fit a results file", formatter_class=fmt)
    _add_common(p, seed_required=False)
    p.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    p.add_argument("--results", type=Path, required=False, help="results (counts) file")
    p.add_argument("--design", type=Path, default=None, help="optional design file for consistency checks")
    p.add_argument("--epsilon", type=float, default=None, help="predicted layer infidelity")
    p.add_argument("--epsilon-file", type=Path, default=None, help="output of the 'epsilon' command")
    p.add_argument("--replicates", type=int, default=200, help="bootstrap replicates (0 disables)")
    p.add_argument("--out", type=Path, default=None, help="directory for report.json and decay.csv")

    p = sub.add_parser("epsilon", help="estimate the average dressed-layer infidelity", formatter_class=fmt)
    _add_common(p)
    p.add_argument("--design", type=Path, required=False, help="design file")
    _add_model_flags(p)
    _add_epsilon_flags(p)
    p.add_argument("--out", type=Path, default=None, help="output file")

    p = sub.add_parser("run", help="design, simulate, estimate and analyze in one go", formatter_class=fmt)
    _add_common(p)
    _add_design_flags(p)
    _add_model_flags(p)
    _add_epsilon_flags(p)
    p.add_argument("--replicates", type=int, default=200, help="bootstrap replicates")
    p.add_argument("--out", type=Path, default=Path("mrb-run"), help="output directory")

    p = sub.add_parser("validate", help="run the oracle self-check suite", formatter_class=fmt)
    _add_common(p, seed_required=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots", type=int, default=20000, help="shots for the distribution check")
    p.add_argument("--out", type=Path, default=None, help="write the JSON summary here")

    p = sub.add_parser("sweep", help="lattice sweep presets", formatter_class=fmt)
    _add_common(p)
    p.add_argument("--preset", choices=PRESETS, default="random-models")
    p.add_argument("--sizes", type=_ints, default=SWEEP_SIZES, help="benchmark widths")
    p.add_argument("--models-per-n", type=int, default=10, help="random models per width (random-models)")
    p.add_argument("--circuits-per-depth", type=int, default=30)
    p.add_argument("--shots", type=int, default=100)
    p.add_argument("--depths", type=_ints, default=(0, 2, 4, 8, 16, 32, 64))
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--out", type=Path, default=Path("mrb-sweep"), help="output directory")
    return parser


def _apply_config(args: argparse.Namespace) -> argparse.Namespace:
    if args.config is None:
        return args
    try:
        data = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError("config file must hold a JSON object")
    for key, value in data.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise UsageError(f"config key {key!r} is not an option of '{args.command}'")
        if dest in ("out", "design_dir", "results", "design", "epsilon_file") and value is not None:
            value = Path(value)
        elif dest in ("depths", "qubits", "sizes") and value is not None:
            value = tuple(int(v) for v in value)
        setattr(args, dest, value)
    return args


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")


def _campaign_config(args) -> CampaignConfig:
    keys = CampaignConfig.__dataclass_fields__
    values = {k: getattr(args, k) for k in keys if hasattr(args, k) and getattr(args, k) is not None}
    values["out"] = str(args.out) if getattr(args, "out", None) else None
    return CampaignConfig(**values)


def _emit(data: dict, path: Path | None) -> None:
    text = json.dumps(data, indent=2) + "\n"
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    sys.stdout.write(text)


def cmd_design(args) -> int:
    _require(args, "seed")
    cfg = _campaign_config(args)
    design = make_design(cfg)
    out = args.out
    (out / "circuits").mkdir(parents=True, exist_ok=True)
    write_design(design, out / "design.json")
    circuits = design_circuits(design)
    for cid, c in circuits:
        (out / "circuits" / f"{cid}.mrb").write_text(format_circuit(c))
    print(f"wrote {len(circuits)} circuits to {out}")
    return EXIT_OK


def _load_circuits(design_dir: Path, design):
    out = []
    for d in design.depths:
        for k in range(design.circuits_per_depth):
            cid = circuit_id(d, k)
            path = design_dir / "circuits" / f"{cid}.mrb"
            if not path.is_file():
                raise FileNotFoundError(f"missing circuit file {path}")
            out.append((cid, parse_circuit(path.read_text())))
    return out


def cmd_simulate(args) -> int:
    _require(args, "design_dir")
    design = read_design(args.design_dir / "design.json")
    circuits = _load_circuits(args.design_dir, design)
    model = make_model(design, args.model, args.model_seed)
    shots = args.shots or design.shots
    results = simulate_design(circuits, model, shots, args.jobs)
    out = args.out or args.design_dir / "results.json"
    write_results(results, out, seed=design.seed, model=str(args.model))
    print(f"wrote {len(results)} records to {out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    _require(args, "results")
    results = read_results(args.results)
    if args.design is not None:
        design = read_design(args.design)
        if {r.n for r in results} != {design.n}:
            raise MrbError("results and design disagree on the qubit count")
        unknown = {r.depth for r in results} - set(design.depths)
        if unknown:
            raise MrbError(f"results contain depths {sorted(unknown)} absent from the design")
    epsilon = args.epsilon
    if epsilon is None and args.epsilon_file is not None:
        epsilon = float(json.loads(args.epsilon_file.read_text())["value"])
    report = analyze_results(results, args.replicates, np.random.default_rng(args.seed), epsilon)
    data = report.to_dict()
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_decay_table(report, args.out / "decay.csv")
    _emit(data, args.out / "report.json" if args.out else None)
    return EXIT_OK


def cmd_epsilon(args) -> int:
    _require(args, "seed", "design")
    design = read_design(args.design)
    model = make_model(design, args.model, args.model_seed)
    eps = epsilon_omega(
        design,
        model,
        args.layer_samples,
        args.per_layer_samples,
        np.random.default_rng(np.random.SeedSequence(entropy=args.seed, spawn_key=(2,))),
    )
    _emit(epsilon_to_dict(eps, n=design.n, model=str(args.model)), args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    _require(args, "seed")
    res = run_campaign(_campaign_config(args))
    write_campaign(res, args.out)
    fit = res.report.fit
    print(
        f"n={res.n} A={fit.A:.4f} r={fit.r:.5g}+-{fit.sigma_r:.2g} "
        f"eps={res.epsilon.value:.5g} delta_rel={res.report.delta_rel:+.3f}"
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    checks = run_checks(args.seed, args.shots)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}", file=sys.stderr)
    summary = checks_to_dict(checks)
    _emit(summary, args.out)
    return EXIT_OK if summary["passed"] else EXIT_INVALID


def cmd_sweep(args) -> int:
    _require(args, "seed")
    rows = run_sweep(
        args.preset,
        args.seed,
        args.jobs,
        args.sizes,
        models_per_n=args.models_per_n,
        circuits_per_depth=args.circuits_per_depth,
        shots=args.shots,
        depths=args.depths,
        replicates=args.replicates,
    )
    write_sweep(rows, args.out, preset=args.preset, seed=args.seed)
    print("model,n,run,r,epsilon,delta_rel")
    for r in rows:
        print(f"{r.model},{r.n},{r.run},{r.r:.6g},{r.epsilon:.6g},{r.delta_rel:+.4f}")
    return EXIT_OK


COMMANDS = {
    "design": cmd_design,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "epsilon": cmd_epsilon,
    "run": cmd_run,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args = _apply_config(args)
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore")
            return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mrb: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, FormatError, FileNotFoundError) as exc:
        print(f"mrb: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (MrbError, OSError, RuntimeError) as exc:
        print(f"mrb: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
